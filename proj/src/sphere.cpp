#include "conemorse/sphere.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <numbers>

#include "conemorse/error.hpp"
#include "conemorse/parallel.hpp"

namespace conemorse::sphere {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPoleCap = 0.05;
constexpr double kTrapMargin = 1e-6;

void invalid(const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); }

Vec3 project(Vec3 p, Vec3 v) { return v - (dot(p, v) / dot(p, p)) * p; }

double bump_profile(double r) {
  if (r >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r * r));
}

/// Hot-loop evaluator; avoids std::function in the integrator.
class Field {
 public:
  explicit Field(const SurfaceScene& scene) : kind_(scene.function), bump_(scene.bump) {
    if (bump_) cos_radius_ = std::cos(bump_->radius);
  }

  double value(Vec3 p) const {
    if (kind_ == MorseFunctionKind::kHeight) return p.z;
    return p.x * p.x + 2.0 * p.y * p.y + 3.0 * p.z * p.z;
  }

  Vec3 operator()(Vec3 p) const {
    const Vec3 g = kind_ == MorseFunctionKind::kHeight ? Vec3{0.0, 0.0, 1.0}
                                                       : Vec3{2.0 * p.x, 4.0 * p.y, 6.0 * p.z};
    Vec3 w = project(p, g);
    if (bump_ && bump_->strength != 0.0) {
      const Vec3 u = normalized(p);
      const double r = dot(u, bump_->center) <= cos_radius_
                           ? 1.0
                           : angle_between(u, bump_->center) / bump_->radius;
      if (r < 1.0) {
        const double beta = bump_->strength * bump_profile(r);
        const Vec3 a = normalized(project(u, bump_->direction));
        const Vec3 b = cross(a, u);
        w = w + beta * (dot(b, w) * a + dot(a, w) * b);
      }
    }
    return -1.0 * w;
  }

 private:
  MorseFunctionKind kind_;
  std::optional<MetricBump> bump_;
  double cos_radius_ = -1.0;
};

Vec3 rk4(const Field& v, Vec3 p, double h) {
  const Vec3 k1 = v(p);
  const Vec3 k2 = v(p + (0.5 * h) * k1);
  const Vec3 k3 = v(p + (0.5 * h) * k2);
  const Vec3 k4 = v(p + h * k3);
  return normalized(p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

struct Tracker {
  const SurfaceScene& scene;
  Field field;
  std::vector<CriticalPoint> points;
  double lowest_saddle = std::numeric_limits<double>::infinity();
  double highest_saddle = -std::numeric_limits<double>::infinity();

  explicit Tracker(const SurfaceScene& s) : scene(s), field(s), points(critical_points(s)) {
    for (const auto& c : points) {
      if (c.index != 1) continue;
      const double v = field.value(c.position);
      lowest_saddle = std::min(lowest_saddle, v);
      highest_saddle = std::max(highest_saddle, v);
    }
  }

  int nearest(Vec3 p, int index) const {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].index != index) continue;
      const Vec3 d = p - points[i].position;
      const double dd = dot(d, d);
      if (dd < best_d) {
        best_d = dd;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  /// Limit point index for direction +1 (forward, to a minimum) or -1
  /// (backward, to a maximum); -1 when ambiguous.
  int follow(Vec3 p, int direction) const {
    const int target = direction > 0 ? 0 : 2;
    const double r2 = scene.ode.stop_radius * scene.ode.stop_radius;
    const double h = direction * scene.ode.step;
    for (std::size_t step = 0; step <= scene.ode.max_steps; ++step) {
      if (scene.level_traps) {
        const double f = field.value(p);
        if (direction > 0 && f < lowest_saddle - kTrapMargin) return nearest(p, 0);
        if (direction < 0 && f > highest_saddle + kTrapMargin) return nearest(p, 2);
      }
      for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec3 d = p - points[i].position;
        if (dot(d, d) >= r2) continue;
        if (points[i].index == target) return static_cast<int>(i);
        if (points[i].index == 1) return -1;
      }
      p = rk4(field, p, h);
    }
    return -1;
  }
};

double midpoint_area(std::size_t i, std::size_t n_phi, std::size_t n_theta) {
  const double dphi = kPi / static_cast<double>(n_phi);
  const double dtheta = 2.0 * kPi / static_cast<double>(n_theta);
  const double phi = (static_cast<double>(i) + 0.5) * dphi;
  return std::sin(phi) * dphi * dtheta;
}

ModuliDecomposition classify_grid(const SurfaceScene& scene, std::size_t n_phi,
                                  std::size_t n_theta) {
  const Tracker tracker(scene);
  ModuliDecomposition out;
  out.n_phi = n_phi;
  out.n_theta = n_theta;
  out.points = tracker.points;
  const std::size_t cells = n_phi * n_theta;
  out.forward.assign(cells, -1);
  out.backward.assign(cells, -1);
  out.separatrix.assign(cells, 0);

  const double dphi = kPi / static_cast<double>(n_phi);
  const double dtheta = 2.0 * kPi / static_cast<double>(n_theta);

  parallel_for(n_phi, [&](std::size_t i) {
    for (std::size_t j = 0; j < n_theta; ++j) {
      const std::size_t c = i * n_theta + j;
      const Vec3 p = out.cell_center(i, j);
      const int fwd = tracker.follow(p, 1);
      const int bwd = tracker.follow(p, -1);
      if (fwd >= 0 && bwd >= 0) {
        out.forward[c] = fwd;
        out.backward[c] = bwd;
        continue;
      }
      out.separatrix[c] = 1;
      // Majority vote over four seeds at quarter-cell offsets.
      const double phi = (static_cast<double>(i) + 0.5) * dphi;
      const double theta = -kPi + (static_cast<double>(j) + 0.5) * dtheta;
      std::map<std::pair<int, int>, int> votes;
      for (int a : {-1, 1}) {
        for (int b : {-1, 1}) {
          const Vec3 q = from_angles(phi + 0.25 * a * dphi, theta + 0.25 * b * dtheta);
          const int f = tracker.follow(q, 1);
          const int g = tracker.follow(q, -1);
          if (f >= 0 && g >= 0) ++votes[{f, g}];
        }
      }
      int best = 0;
      for (const auto& [label, count] : votes) {
        if (count > best) {
          best = count;
          out.forward[c] = label.first;
          out.backward[c] = label.second;
        }
      }
    }
  });

  for (std::size_t c = 0; c < cells; ++c) out.separatrix_cells += out.separatrix[c];
  if (out.separatrix_fraction() > 0.01) {
    throw Error(ErrorCode::kNonTransverseSuspected,
                std::to_string(out.separatrix_cells) + " of " + std::to_string(cells) +
                    " cells lie on separatrices");
  }
  // Cells without any valid seed take the label of the nearest labelled cell
  // in the same row, then the same column.
  for (std::size_t c = 0; c < cells; ++c) {
    if (out.forward[c] >= 0) continue;
    ++out.vote_fallbacks;
    const std::size_t i = c / n_theta, j = c % n_theta;
    bool found = false;
    for (std::size_t off = 1; off < std::max(n_phi, n_theta) && !found; ++off) {
      const std::array<std::pair<long, long>, 4> cand{{{0L, static_cast<long>(off)},
                                                       {0L, -static_cast<long>(off)},
                                                       {static_cast<long>(off), 0L},
                                                       {-static_cast<long>(off), 0L}}};
      for (const auto& [di, dj] : cand) {
        const long ii = static_cast<long>(i) + di;
        if (ii < 0 || ii >= static_cast<long>(n_phi)) continue;
        const long nt = static_cast<long>(n_theta);
        const long jj = ((static_cast<long>(j) + dj) % nt + nt) % nt;
        const std::size_t k = static_cast<std::size_t>(ii) * n_theta + static_cast<std::size_t>(jj);
        if (out.forward[k] >= 0 && out.backward[k] >= 0) {
          out.forward[c] = out.forward[k];
          out.backward[c] = out.backward[k];
          found = true;
          break;
        }
      }
    }
    if (!found) {
      throw Error(ErrorCode::kDidNotConverge, "no cell could be classified");
    }
  }
  return out;
}

int find_point(const std::vector<CriticalPoint>& pts, const std::string& id) {
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].id == id) return static_cast<int>(i);
  }
  invalid("unknown critical point '" + id + "'");
  return -1;
}

/// Degree k generators in critical point order.
std::vector<std::string> ids_of_index(const std::vector<CriticalPoint>& pts, int k) {
  std::vector<std::string> out;
  for (const auto& p : pts) {
    if (p.index == k) out.push_back(p.id);
  }
  return out;
}

chain::GradedVectorSpace space_of(const std::vector<CriticalPoint>& pts) {
  std::vector<std::size_t> dims(3, 0);
  for (const auto& p : pts) ++dims[static_cast<std::size_t>(p.index)];
  return chain::GradedVectorSpace(0, dims);
}

std::size_t position_in_index(const std::vector<CriticalPoint>& pts, const std::string& id) {
  const int k = pts[static_cast<std::size_t>(find_point(pts, id))].index;
  const auto ids = ids_of_index(pts, k);
  return static_cast<std::size_t>(std::find(ids.begin(), ids.end(), id) - ids.begin());
}

/// Adds v at (from, to) of the degree (index(from) - index(to)) map.
void accumulate(std::map<int, RealMatrix>& blocks, const std::vector<CriticalPoint>& pts,
                const std::string& from, const std::string& to, double v) {
  const int kf = pts[static_cast<std::size_t>(find_point(pts, from))].index;
  const int kt = pts[static_cast<std::size_t>(find_point(pts, to))].index;
  auto it = blocks.find(kt);
  if (it == blocks.end()) {
    it = blocks
             .emplace(kt, RealMatrix(ids_of_index(pts, kf).size(), ids_of_index(pts, kt).size()))
             .first;
  }
  it->second(position_in_index(pts, from), position_in_index(pts, to)) += v;
}

Vec3 finite_difference_curl(const std::function<Vec3(Vec3)>& a, Vec3 p) {
  constexpr double h = 1e-5;
  auto partial = [&](int axis) {
    Vec3 e{};
    (axis == 0 ? e.x : axis == 1 ? e.y : e.z) = h;
    return (1.0 / (2.0 * h)) * (a(p + e) - a(p - e));
  };
  const Vec3 dx = partial(0), dy = partial(1), dz = partial(2);
  return {dy.z - dz.y, dz.x - dx.z, dx.y - dy.x};
}

void check_pole(const OneForm& alpha, Vec3 p) {
  if (alpha.pole_regular) return;
  const double polar = std::acos(std::clamp(p.z / norm(p), -1.0, 1.0));
  if (polar < kPoleCap || polar > kPi - kPoleCap) {
    throw Error(ErrorCode::kPoleSingularity,
                "one-form '" + alpha.tag + "' is not regular at the poles");
  }
}

}  // namespace

Vec3 from_angles(double phi, double theta) {
  return {std::sin(phi) * std::cos(theta), std::sin(phi) * std::sin(theta), std::cos(phi)};
}

double angle_between(Vec3 a, Vec3 b) { return std::atan2(norm(cross(a, b)), dot(a, b)); }

SurfaceScene SurfaceScene::perturbed(double strength) {
  SurfaceScene s;
  const double h = std::numbers::sqrt2 / 2.0;
  s.bump = MetricBump{{h, h, 0.0}, 0.35, strength, {h, -h, 0.0}};
  return s;
}

void SurfaceScene::validate() const {
  if (n_phi < 2 || n_theta < 4 || n_phi % 2 != 0 || n_theta % 4 != 0) {
    invalid("grid must have even n_phi >= 2 and n_theta divisible by 4");
  }
  if (!(ode.step > 0.0) || !std::isfinite(ode.step)) invalid("ode step must be positive");
  if (!(ode.stop_radius > 0.0) || ode.stop_radius >= 0.1) {
    invalid("stop_radius must lie in (0, 0.1)");
  }
  if (ode.max_steps == 0) invalid("max_steps must be positive");
  if (bump) {
    if (std::abs(norm(bump->center) - 1.0) > 1e-12) invalid("bump centre must be a unit vector");
    if (!(bump->radius > 0.0) || bump->radius >= kPi / 2) invalid("bump radius must lie in (0, pi/2)");
    if (!(std::abs(bump->strength) < 1.0)) invalid("bump strength must satisfy |strength| < 1");
    if (norm(project(bump->center, bump->direction)) < 1e-9) {
      invalid("bump direction must be tangent at the centre");
    }
    for (const auto& c : critical_points(*this)) {
      if (angle_between(c.position, bump->center) <= bump->radius) {
        invalid("metric bump must not contain critical point " + c.id);
      }
    }
  }
}

std::vector<CriticalPoint> critical_points(const SurfaceScene& scene) {
  if (scene.function == MorseFunctionKind::kHeight) {
    return {{"p0", 0, {0, 0, -1}, {}}, {"p2", 2, {0, 0, 1}, {}}};
  }
  return {{"p0+", 0, {1, 0, 0}, {}},  {"p0-", 0, {-1, 0, 0}, {}},
          {"p1+", 1, {0, 1, 0}, {1, 0, 0}}, {"p1-", 1, {0, -1, 0}, {1, 0, 0}},
          {"p2+", 2, {0, 0, 1}, {}},  {"p2-", 2, {0, 0, -1}, {}}};
}

double morse_value(const SurfaceScene& scene, Vec3 p) { return Field(scene).value(p); }

Vec3 flow_field(const SurfaceScene& scene, Vec3 p) { return Field(scene)(p); }

TwoForm TwoForm::volume() {
  return {"omega0", [](Vec3) { return 1.0; }};
}

TwoForm TwoForm::family_s(double s) {
  return {"psi_s", [s](Vec3 p) { return p.y + s; }};
}

TwoForm TwoForm::family_t(double t) {
  return {"psi_t", [t](Vec3 p) { return 1.0 + t * p.x + t * p.z; }};
}

OneForm OneForm::spherical(std::function<double(double, double)> a_phi,
                           std::function<double(double, double)> a_theta, bool pole_regular,
                           std::string tag) {
  OneForm f;
  f.tag = std::move(tag);
  f.pole_regular = pole_regular;
  f.covector = [a_phi, a_theta](Vec3 p) {
    const Vec3 u = normalized(p);
    const double phi = std::acos(std::clamp(u.z, -1.0, 1.0));
    const double theta = std::atan2(u.y, u.x);
    const double s = std::sin(phi);
    const Vec3 e_phi{std::cos(phi) * std::cos(theta), std::cos(phi) * std::sin(theta), -s};
    const Vec3 e_theta{-std::sin(theta), std::cos(theta), 0.0};
    return a_phi(phi, theta) * e_phi + (a_theta(phi, theta) / s) * e_theta;
  };
  return f;
}

OneForm OneForm::exact(std::function<Vec3(Vec3)> gradient, std::string tag) {
  OneForm f;
  f.tag = std::move(tag);
  f.covector = std::move(gradient);
  f.curl = [](Vec3) { return Vec3{}; };
  return f;
}

OneForm OneForm::bumps(std::vector<Bump> list, std::string tag) {
  OneForm f;
  f.tag = std::move(tag);
  f.covector = [list](Vec3 p) {
    Vec3 a{};
    for (const auto& b : list) {
      const Vec3 d = p - b.center;
      a = a + std::exp(-dot(d, d) / (b.width * b.width)) * b.vector;
    }
    return a;
  };
  f.curl = [list](Vec3 p) {
    Vec3 c{};
    for (const auto& b : list) {
      const Vec3 d = p - b.center;
      const double g = std::exp(-dot(d, d) / (b.width * b.width));
      c = c + cross((-2.0 * g / (b.width * b.width)) * d, b.vector);
    }
    return c;
  };
  return f;
}

Vec3 OneForm::at(Vec3 p) const {
  check_pole(*this, p);
  return covector(p);
}

double OneForm::d_density(Vec3 p) const {
  check_pole(*this, p);
  const Vec3 c = curl ? curl(p) : finite_difference_curl(covector, p);
  return dot(normalized(p), c);
}

TwoForm OneForm::d() const {
  OneForm self = *this;
  return {"d(" + tag + ")", [self](Vec3 p) { return self.d_density(p); }};
}

double ModuliDecomposition::cell_area(std::size_t i) const {
  return midpoint_area(i, n_phi, n_theta);
}

Vec3 ModuliDecomposition::cell_center(std::size_t i, std::size_t j) const {
  const double phi = (static_cast<double>(i) + 0.5) * kPi / static_cast<double>(n_phi);
  const double theta =
      -kPi + (static_cast<double>(j) + 0.5) * 2.0 * kPi / static_cast<double>(n_theta);
  return from_angles(phi, theta);
}

double ModuliDecomposition::separatrix_fraction() const {
  if (separatrix.empty()) return 0.0;
  return static_cast<double>(separatrix_cells) / static_cast<double>(separatrix.size());
}

double ModuliDecomposition::separatrix_area() const {
  std::vector<double> parts;
  for (std::size_t c = 0; c < separatrix.size(); ++c) {
    if (separatrix[c]) parts.push_back(cell_area(c / n_theta));
  }
  return linalg::pairwise_sum(parts);
}

ModuliDecomposition classify_moduli(const SurfaceScene& scene) {
  scene.validate();
  ModuliDecomposition fine = classify_grid(scene, scene.n_phi, scene.n_theta);
  if (scene.error_estimate && scene.n_phi % 4 == 0 && scene.n_theta % 8 == 0) {
    fine.coarse = std::make_shared<const ModuliDecomposition>(
        classify_grid(scene, scene.n_phi / 2, scene.n_theta / 2));
  }
  return fine;
}

namespace {

/// Sum of weight(cell) over each (backward, forward) region, pairwise per region.
std::map<std::pair<int, int>, double> region_sums(
    const ModuliDecomposition& d, const std::function<double(std::size_t, std::size_t)>& weight) {
  std::map<std::pair<int, int>, std::vector<double>> parts;
  for (std::size_t i = 0; i < d.n_phi; ++i) {
    for (std::size_t j = 0; j < d.n_theta; ++j) {
      const std::size_t c = i * d.n_theta + j;
      parts[{d.backward[c], d.forward[c]}].push_back(weight(i, j));
    }
  }
  std::map<std::pair<int, int>, double> out;
  for (auto& [key, v] : parts) out[key] = linalg::pairwise_sum(v);
  return out;
}

std::vector<ModuliIntegral> integrals_on(const ModuliDecomposition& d, const TwoForm& psi) {
  std::vector<double> density(d.n_phi * d.n_theta);
  parallel_for(d.n_phi, [&](std::size_t i) {
    for (std::size_t j = 0; j < d.n_theta; ++j) {
      density[i * d.n_theta + j] = psi.density(d.cell_center(i, j)) * d.cell_area(i);
    }
  });
  const auto sums =
      region_sums(d, [&](std::size_t i, std::size_t j) { return density[i * d.n_theta + j]; });
  std::vector<ModuliIntegral> out;
  for (std::size_t r = 0; r < d.points.size(); ++r) {
    if (d.points[r].index != 2) continue;
    for (std::size_t q = 0; q < d.points.size(); ++q) {
      if (d.points[q].index != 0) continue;
      const auto it = sums.find({static_cast<int>(r), static_cast<int>(q)});
      out.push_back({d.points[r].id, d.points[q].id, it == sums.end() ? 0.0 : it->second, 0.0});
    }
  }
  return out;
}

}  // namespace

std::vector<RegionArea> region_areas(const ModuliDecomposition& decomp) {
  std::vector<RegionArea> out;
  for (const auto& m : integrals_on(decomp, TwoForm::volume())) {
    out.push_back({m.from, m.to, m.value});
  }
  return out;
}

void write_decomposition_csv(const ModuliDecomposition& decomp, std::ostream& out) {
  out << "i,j,phi,theta,backward,forward,separatrix\n";
  const double dphi = kPi / static_cast<double>(decomp.n_phi);
  const double dtheta = 2.0 * kPi / static_cast<double>(decomp.n_theta);
  for (std::size_t i = 0; i < decomp.n_phi; ++i) {
    for (std::size_t j = 0; j < decomp.n_theta; ++j) {
      const std::size_t c = i * decomp.n_theta + j;
      out << i << ',' << j << ',' << (static_cast<double>(i) + 0.5) * dphi << ','
          << -kPi + (static_cast<double>(j) + 0.5) * dtheta << ','
          << decomp.points[static_cast<std::size_t>(decomp.backward[c])].id << ','
          << decomp.points[static_cast<std::size_t>(decomp.forward[c])].id << ','
          << static_cast<int>(decomp.separatrix[c]) << '\n';
    }
  }
}

std::vector<ModuliIntegral> integrate_over_moduli(const ModuliDecomposition& decomp,
                                                  const TwoForm& psi) {
  auto fine = integrals_on(decomp, psi);
  for (auto& e : fine) e.extrapolated = e.value;
  if (decomp.coarse) {
    const auto coarse = integrals_on(*decomp.coarse, psi);
    for (std::size_t k = 0; k < fine.size(); ++k) {
      fine[k].error = std::abs(fine[k].value - coarse[k].value) / 3.0;
      fine[k].extrapolated = (4.0 * fine[k].value - coarse[k].value) / 3.0;
    }
  }
  return fine;
}

RealMatrix moduli_matrix(const std::vector<ModuliIntegral>& integrals,
                         const std::vector<CriticalPoint>& points, bool extrapolated) {
  const auto rows = ids_of_index(points, 2);
  const auto cols = ids_of_index(points, 0);
  RealMatrix m(rows.size(), cols.size());
  for (const auto& e : integrals) {
    const auto r = std::find(rows.begin(), rows.end(), e.from);
    const auto c = std::find(cols.begin(), cols.end(), e.to);
    if (r == rows.end() || c == cols.end()) continue;
    m(static_cast<std::size_t>(r - rows.begin()), static_cast<std::size_t>(c - cols.begin())) =
        extrapolated ? e.extrapolated : e.value;
  }
  return m;
}

double max_error(const std::vector<ModuliIntegral>& integrals) {
  double e = 0.0;
  for (const auto& m : integrals) e = std::max(e, m.error);
  return e;
}

double integrate_sphere(const TwoForm& psi, std::size_t n_phi, std::size_t n_theta) {
  std::vector<double> rows(n_phi);
  const double dphi = kPi / static_cast<double>(n_phi);
  const double dtheta = 2.0 * kPi / static_cast<double>(n_theta);
  for (std::size_t i = 0; i < n_phi; ++i) {
    std::vector<double> row(n_theta);
    const double phi = (static_cast<double>(i) + 0.5) * dphi;
    for (std::size_t j = 0; j < n_theta; ++j) {
      row[j] = psi.density(from_angles(phi, -kPi + (static_cast<double>(j) + 0.5) * dtheta));
    }
    rows[i] = linalg::pairwise_sum(row) * midpoint_area(i, n_phi, n_theta);
  }
  return linalg::pairwise_sum(rows);
}

RealMatrix analytic_cpsi(Family family, double param) {
  // Rectangle integrals over [pa, pb] x [ta, tb] in (phi, theta).
  struct Rect {
    double pa, pb, ta, tb;
  };
  auto one = [](Rect r) { return (std::cos(r.pa) - std::cos(r.pb)) * (r.tb - r.ta); };
  auto sin2 = [](double p) { return p / 2.0 - std::sin(2.0 * p) / 4.0; };
  auto x = [&](Rect r) { return (sin2(r.pb) - sin2(r.pa)) * (std::sin(r.tb) - std::sin(r.ta)); };
  auto y = [&](Rect r) { return (sin2(r.pb) - sin2(r.pa)) * (std::cos(r.ta) - std::cos(r.tb)); };
  auto z = [](Rect r) {
    const double sa = std::sin(r.pa), sb = std::sin(r.pb);
    return (sb * sb - sa * sa) / 2.0 * (r.tb - r.ta);
  };
  // Quarter {sign z = a, sign x = b} as a union of rectangles.
  auto quarter = [&](int a, int b) {
    const double pa = a > 0 ? 0.0 : kPi / 2, pb = a > 0 ? kPi / 2 : kPi;
    if (b > 0) return std::vector<Rect>{{pa, pb, -kPi / 2, kPi / 2}};
    return std::vector<Rect>{{pa, pb, kPi / 2, kPi}, {pa, pb, -kPi, -kPi / 2}};
  };
  RealMatrix m(2, 2);
  const std::array<int, 2> signs{1, -1};
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 2; ++c) {
      double v = 0.0;
      for (const Rect& q : quarter(signs[r], signs[c])) {
        v += family == Family::kS ? y(q) + param * one(q)
                                  : one(q) + param * x(q) + param * z(q);
      }
      m(r, c) = v;
    }
  }
  return m;
}

FlowCurve flow_curve(const SurfaceScene& scene, const std::string& saddle, Branch branch,
                     int sign) {
  scene.validate();
  if (sign != 1 && sign != -1) invalid("branch sign must be +1 or -1");
  const Tracker tracker(scene);
  const auto& pts = tracker.points;
  const CriticalPoint& s = pts[static_cast<std::size_t>(find_point(pts, saddle))];
  if (s.index != 1) invalid(saddle + " is not an index 1 point");

  // Linearisation in a tangent basis, central differences.
  const Vec3 t1 = normalized(project(s.position, s.unstable_reference));
  const Vec3 t2 = cross(s.position, t1);
  constexpr double eps = 1e-6;
  auto jcol = [&](Vec3 t) {
    const Vec3 dv = (1.0 / (2.0 * eps)) *
                    (tracker.field(s.position + eps * t) - tracker.field(s.position - eps * t));
    return std::array<double, 2>{dot(t1, dv), dot(t2, dv)};
  };
  const auto c1 = jcol(t1), c2 = jcol(t2);
  const double j11 = c1[0], j21 = c1[1], j12 = c2[0], j22 = c2[1];
  const double tr = j11 + j22, det = j11 * j22 - j12 * j21;
  const double disc = tr * tr / 4.0 - det;
  if (disc <= 0.0 || det >= 0.0) {
    throw Error(ErrorCode::kDidNotConverge, saddle + " is not a hyperbolic saddle");
  }
  auto eigvec = [&](double lambda) {
    const Vec3 a = j12 * t1 + (lambda - j11) * t2;
    const Vec3 b = (lambda - j22) * t1 + j21 * t2;
    return normalized(norm(a) >= norm(b) ? a : b);
  };
  Vec3 e = eigvec(tr / 2.0 + std::sqrt(disc));
  if (dot(e, s.unstable_reference) < 0.0) e = -1.0 * e;
  Vec3 w = eigvec(tr / 2.0 - std::sqrt(disc));
  if (dot(cross(w, e), s.position) < 0.0) w = -1.0 * w;

  const bool down = branch == Branch::kDescending;
  const double offset = 10.0 * scene.ode.stop_radius;
  Vec3 p = normalized(s.position + (sign * offset) * (down ? e : w));
  const int target = down ? 0 : 2;
  const double h = (down ? 1.0 : -1.0) * scene.ode.step;
  const double r2 = scene.ode.stop_radius * scene.ode.stop_radius;

  std::vector<Vec3> path{s.position, p};
  int reached = -1;
  for (std::size_t step = 0; step < scene.ode.max_steps && reached < 0; ++step) {
    p = rk4(tracker.field, p, h);
    path.push_back(p);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Vec3 d = p - pts[i].position;
      if (dot(d, d) >= r2) continue;
      if (pts[i].index == target) {
        reached = static_cast<int>(i);
      } else if (pts[i].index == 1) {
        throw Error(ErrorCode::kDidNotConverge,
                    "flow line from " + saddle + " stalls at " + pts[i].id);
      }
    }
  }
  if (reached < 0) {
    throw Error(ErrorCode::kDidNotConverge, "flow line from " + saddle + " exceeded max_steps");
  }
  path.push_back(pts[static_cast<std::size_t>(reached)].position);

  FlowCurve out;
  out.saddle = saddle;
  out.branch = branch;
  out.sign = sign;
  if (down) {
    out.from = saddle;
    out.to = pts[static_cast<std::size_t>(reached)].id;
    out.n = -sign;
  } else {
    std::reverse(path.begin(), path.end());
    out.from = pts[static_cast<std::size_t>(reached)].id;
    out.to = saddle;
    out.n = sign;
  }
  out.points = std::move(path);
  return out;
}

std::vector<FlowCurve> all_flow_curves(const SurfaceScene& scene) {
  std::vector<FlowCurve> out;
  for (const auto& c : critical_points(scene)) {
    if (c.index != 1) continue;
    for (Branch b : {Branch::kAscending, Branch::kDescending}) {
      for (int sign : {1, -1}) out.push_back(flow_curve(scene, c.id, b, sign));
    }
  }
  return out;
}

double line_integral(const OneForm& alpha, const std::vector<Vec3>& curve) {
  if (curve.size() < 2) return 0.0;
  std::vector<double> parts(curve.size() - 1);
  Vec3 prev = alpha.at(curve[0]);
  for (std::size_t k = 1; k < curve.size(); ++k) {
    const Vec3 next = alpha.at(curve[k]);
    parts[k - 1] = 0.5 * dot(prev + next, curve[k] - curve[k - 1]);
    prev = next;
  }
  return linalg::pairwise_sum(parts);
}

chain::ChainMap boundary_from_curves(const SurfaceScene& scene,
                                     const std::vector<FlowCurve>& curves) {
  const auto pts = critical_points(scene);
  std::map<int, RealMatrix> blocks;
  for (const auto& c : curves) accumulate(blocks, pts, c.from, c.to, c.n);
  for (auto& [k, m] : blocks) m.mark_integral();
  const auto space = space_of(pts);
  return chain::ChainMap(space, space, 1, std::move(blocks));
}

chain::ChainMap c_one_form(const SurfaceScene& scene, const std::vector<FlowCurve>& curves,
                           const OneForm& alpha) {
  const auto pts = critical_points(scene);
  std::map<int, RealMatrix> blocks;
  for (const auto& c : curves) {
    accumulate(blocks, pts, c.from, c.to, -c.n * line_integral(alpha, c.points));
  }
  const auto space = space_of(pts);
  return chain::ChainMap(space, space, 1, std::move(blocks));
}

chain::ChainMap c_two_form(const ModuliDecomposition& decomp, const TwoForm& psi) {
  std::map<int, RealMatrix> blocks;
  for (const auto& m : integrate_over_moduli(decomp, psi)) {
    accumulate(blocks, decomp.points, m.from, m.to, m.value);
  }
  const auto space = space_of(decomp.points);
  return chain::ChainMap(space, space, 2, std::move(blocks));
}

chain::ChainMap c_function(const SurfaceScene& scene, const std::function<double(Vec3)>& h) {
  const auto pts = critical_points(scene);
  std::map<int, RealMatrix> blocks;
  for (const auto& p : pts) accumulate(blocks, pts, p.id, p.id, h(p.position));
  const auto space = space_of(pts);
  return chain::ChainMap(space, space, 0, std::move(blocks));
}

ExactFormReport exact_form_cpsi(const OneForm& alpha, const SurfaceScene& scene) {
  if (scene.function != MorseFunctionKind::kSixPoint) {
    invalid("exact-form factorisation needs the six-point function");
  }
  return exact_form_cpsi(alpha, all_flow_curves(scene));
}

ExactFormReport exact_form_cpsi(const OneForm& alpha, const std::vector<FlowCurve>& curves) {
  std::map<std::string, double> c;
  for (const auto& curve : curves) {
    const std::string key = std::string{curve.from[1], curve.to[1], curve.from[2], curve.to[2]};
    c[key] = line_integral(alpha, curve.points);
  }
  for (const char* key : {"21++", "21+-", "21-+", "21--", "10++", "10+-", "10-+", "10--"}) {
    if (!c.count(key)) invalid(std::string("missing flow line ") + key);
  }
  ExactFormReport r;
  for (const auto& [k, v] : c) r.line_integrals.emplace_back(k, v);
  // Oriented boundary of each quarter {sign z = a, sign x = b}.
  r.c = RealMatrix::from_rows({
      {c["21+-"] + c["10-+"] - c["21++"] - c["10++"], c["21++"] + c["10+-"] - c["10--"] - c["21+-"]},
      {c["21-+"] + c["10++"] - c["10-+"] - c["21--"], c["21--"] + c["10--"] - c["10+-"] - c["21-+"]},
  });
  r.meridian = c["21++"] - c["21-+"] + c["21--"] - c["21+-"];
  r.equator = c["10-+"] - c["10++"] + c["10+-"] - c["10--"];
  r.determinant = r.c(0, 0) * r.c(1, 1) - r.c(0, 1) * r.c(1, 0);
  r.product = r.meridian * r.equator;
  return r;
}

int de_rham_r0(const TwoForm& psi, double tol, std::size_t n_phi, std::size_t n_theta) {
  return std::abs(integrate_sphere(psi, n_phi, n_theta)) > tol * 4.0 * kPi ? 1 : 0;
}

morse::MorseData scene_to_morse_data(const SurfaceScene& scene, const ModuliDecomposition& decomp,
                                     const TwoForm& psi, const MorseDataOptions& opts) {
  morse::MorseData data;
  data.dimension = 2;
  data.psi_degree = 2;
  data.psi_closed = true;
  const auto pts = critical_points(scene);
  for (const auto& p : pts) data.critical_points.push_back({p.id, p.index});

  std::map<std::pair<std::string, std::string>, long long> counts;
  for (const auto& c : all_flow_curves(scene)) counts[{c.from, c.to}] += c.n;
  for (const auto& from : pts) {
    for (const auto& to : pts) {
      if (from.index != to.index + 1) continue;
      const auto it = counts.find({from.id, to.id});
      if (it != counts.end() && it->second != 0) {
        data.flow_counts.push_back({from.id, to.id, it->second});
      }
    }
  }

  const auto rows = ids_of_index(pts, 2);
  const auto cols = ids_of_index(pts, 0);
  RealMatrix m;
  if (opts.cpsi) {
    m = *opts.cpsi;
    if (m.rows() != rows.size() || m.cols() != cols.size()) {
      throw Error(ErrorCode::kShapeMismatch, "c(psi) block has the wrong shape");
    }
  } else {
    m = moduli_matrix(integrate_over_moduli(decomp, psi), decomp.points);
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      data.psi_integrals.push_back({rows[r], cols[c], m(r, c)});
    }
  }
  data.de_rham = morse::DeRhamData{{1, 0, 1}, {de_rham_r0(psi, opts.r0_tol), 0, 0}};
  return data;
}

}  // namespace conemorse::sphere
