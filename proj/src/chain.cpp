#include "conemorse/chain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace conemorse::chain {

namespace {

using linalg::compose;
using linalg::hstack;
using linalg::vstack;

std::string shape(const RealMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

bool is_integral_or_zero(const RealMatrix& m) {
  return m.integral() || m.max_abs() == 0.0;
}

// Degrees spanned by either space; an empty range has lo > hi.
std::pair<int, int> joint_range(const GradedVectorSpace& a, const GradedVectorSpace& b,
                                int b_shift) {
  if (a.is_zero() && b.is_zero()) return {0, -1};
  if (a.is_zero()) return {b.min_degree() + b_shift, b.max_degree() + b_shift};
  if (b.is_zero()) return {a.min_degree(), a.max_degree()};
  return {std::min(a.min_degree(), b.min_degree() + b_shift),
          std::max(a.max_degree(), b.max_degree() + b_shift)};
}

RealMatrix block2x2(const RealMatrix& a, const RealMatrix& b, const RealMatrix& c,
                    const RealMatrix& d) {
  return vstack(hstack(a, b), hstack(c, d));
}

RealMatrix zero_integral(std::size_t rows, std::size_t cols) {
  RealMatrix m(rows, cols);
  m.mark_integral();
  return m;
}

std::size_t rank_of(const RealMatrix& m, const ChainOptions& opts) {
  if (m.empty()) return 0;
  return linalg::rank(m, opts.tolerance_for(m)).rank;
}

// Unit lower times unit upper triangular with entries in {-1, 0, 1}, plus its
// exact inverse (U^-1 L^-1).
std::pair<RealMatrix, RealMatrix> unimodular(Rng& rng, std::size_t n) {
  RealMatrix l = RealMatrix::identity(n);
  RealMatrix u = RealMatrix::identity(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) l(i, j) = rng.uniform_int(-1, 1);
    for (std::size_t j = i + 1; j < n; ++j) u(i, j) = rng.uniform_int(-1, 1);
  }
  // Forward substitution for L^-1 and back substitution for U^-1.
  RealMatrix l_inv = RealMatrix::identity(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s -= l(i, k) * l_inv(k, j);
      l_inv(i, j) = s;
    }
  RealMatrix u_inv = RealMatrix::identity(n);
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = i + 1; k <= j; ++k) s -= u(i, k) * u_inv(k, j);
      u_inv(i, j) = s;
    }
  l.mark_integral();
  u.mark_integral();
  l_inv.mark_integral();
  u_inv.mark_integral();
  return {compose(l, u), compose(u_inv, l_inv)};
}

std::vector<std::size_t> random_dims(Rng& rng, int degrees, int max_dim) {
  std::vector<std::size_t> dims(static_cast<std::size_t>(degrees));
  for (auto& d : dims) d = static_cast<std::size_t>(rng.uniform_int(0, max_dim));
  return dims;
}

}  // namespace

// ---------------------------------------------------------------------------
// GradedVectorSpace

GradedVectorSpace::GradedVectorSpace(int min_degree, std::vector<std::size_t> dims)
    : min_degree_(min_degree), dims_(std::move(dims)) {
  std::size_t first = 0;
  while (first < dims_.size() && dims_[first] == 0) ++first;
  if (first == dims_.size()) {
    dims_.clear();
    min_degree_ = 0;
    return;
  }
  std::size_t last = dims_.size();
  while (dims_[last - 1] == 0) --last;
  dims_ = std::vector<std::size_t>(dims_.begin() + static_cast<std::ptrdiff_t>(first),
                                   dims_.begin() + static_cast<std::ptrdiff_t>(last));
  min_degree_ += static_cast<int>(first);
}

std::size_t GradedVectorSpace::dim(int degree) const noexcept {
  if (degree < min_degree_ || degree > max_degree()) return 0;
  return dims_[static_cast<std::size_t>(degree - min_degree_)];
}

std::size_t GradedVectorSpace::total_dim() const noexcept {
  std::size_t s = 0;
  for (auto d : dims_) s += d;
  return s;
}

long GradedVectorSpace::euler_characteristic() const noexcept {
  long chi = 0;
  for (int n = min_degree_; n <= max_degree(); ++n) {
    const long d = static_cast<long>(dim(n));
    chi += (n % 2 == 0) ? d : -d;
  }
  return chi;
}

std::vector<std::size_t> GradedVectorSpace::dims_between(int lo, int hi) const {
  std::vector<std::size_t> out;
  for (int n = lo; n <= hi; ++n) out.push_back(dim(n));
  return out;
}

bool operator==(const GradedVectorSpace& a, const GradedVectorSpace& b) {
  return a.min_degree_ == b.min_degree_ && a.dims_ == b.dims_;
}

// ---------------------------------------------------------------------------
// ChainMap

ChainMap::ChainMap(GradedVectorSpace source, GradedVectorSpace target, int degree)
    : source_(std::move(source)), target_(std::move(target)), degree_(degree) {}

ChainMap::ChainMap(GradedVectorSpace source, GradedVectorSpace target, int degree,
                   std::map<int, RealMatrix> blocks)
    : source_(std::move(source)), target_(std::move(target)), degree_(degree) {
  for (auto& [n, m] : blocks) set_block(n, std::move(m));
}

void ChainMap::check_shape(int n, const RealMatrix& m) const {
  const std::size_t rows = target_.dim(n + degree_);
  const std::size_t cols = source_.dim(n);
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::kShapeMismatch, "block at degree " + std::to_string(n) + " is " +
                                               shape(m) + ", expected " + std::to_string(rows) +
                                               "x" + std::to_string(cols));
  }
  if (!m.all_finite()) {
    throw Error(ErrorCode::kNonFiniteEntry, "block at degree " + std::to_string(n));
  }
}

RealMatrix ChainMap::block(int n) const {
  if (auto it = blocks_.find(n); it != blocks_.end()) return it->second;
  return zero_integral(target_.dim(n + degree_), source_.dim(n));
}

void ChainMap::set_block(int n, RealMatrix m) {
  check_shape(n, m);
  if (m.empty()) {
    blocks_.erase(n);
    return;
  }
  blocks_[n] = std::move(m);
}

bool ChainMap::integral() const noexcept {
  return std::all_of(blocks_.begin(), blocks_.end(),
                     [](const auto& kv) { return is_integral_or_zero(kv.second); });
}

double ChainMap::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& [n, b] : blocks_) m = std::max(m, b.max_abs());
  return m;
}

ChainMap ChainMap::scaled(double factor) const {
  ChainMap out(source_, target_, degree_);
  for (const auto& [n, b] : blocks_) out.set_block(n, factor * b);
  return out;
}

ChainMap compose(const ChainMap& after, const ChainMap& before) {
  if (!(before.target() == after.source())) {
    throw Error(ErrorCode::kShapeMismatch, "composition of maps with mismatched spaces");
  }
  ChainMap out(before.source(), after.target(), before.degree() + after.degree());
  const auto& src = before.source();
  for (int n = src.min_degree(); n <= src.max_degree(); ++n) {
    out.set_block(n, compose(after.block(n + before.degree()), before.block(n)));
  }
  return out;
}

ChainMap operator+(const ChainMap& a, const ChainMap& b) {
  if (!(a.source() == b.source()) || !(a.target() == b.target()) || a.degree() != b.degree()) {
    throw Error(ErrorCode::kShapeMismatch, "sum of maps with mismatched spaces");
  }
  ChainMap out(a.source(), a.target(), a.degree());
  for (int n = a.source().min_degree(); n <= a.source().max_degree(); ++n) {
    RealMatrix s = a.block(n) + b.block(n);
    if (a.block(n).integral() && b.block(n).integral()) s.mark_integral();
    out.set_block(n, std::move(s));
  }
  return out;
}

double max_abs_diff(const ChainMap& a, const ChainMap& b) {
  if (!(a.source() == b.source()) || !(a.target() == b.target()) || a.degree() != b.degree()) {
    throw Error(ErrorCode::kShapeMismatch, "difference of maps with mismatched spaces");
  }
  double m = 0.0;
  for (int n = a.source().min_degree(); n <= a.source().max_degree(); ++n) {
    m = std::max(m, linalg::max_abs_diff(a.block(n), b.block(n)));
  }
  return m;
}

// ---------------------------------------------------------------------------
// CochainComplex

CochainComplex::CochainComplex(GradedVectorSpace space, ChainMap differential)
    : space_(std::move(space)), differential_(std::move(differential)) {
  if (differential_.degree() != 1 || !(differential_.source() == space_) ||
      !(differential_.target() == space_)) {
    throw Error(ErrorCode::kShapeMismatch, "differential must be a degree +1 self-map");
  }
  const double norm = differential_.max_abs();
  const double tol = 1e-10 * std::max(1.0, norm * norm);
  for (int n = space_.min_degree(); n < space_.max_degree(); ++n) {
    const RealMatrix dd = compose(d(n + 1), d(n));
    const double res = dd.max_abs();
    const bool exact = dd.integral();
    if ((exact && res != 0.0) || (!exact && res > tol)) {
      throw Error(ErrorCode::kBoundaryNotSquareZero,
                  "d*d at degree " + std::to_string(n) + " has entry " + std::to_string(res));
    }
  }
}

CochainComplex CochainComplex::with_zero_differential(GradedVectorSpace space) {
  ChainMap d(space, space, 1);
  return CochainComplex(std::move(space), std::move(d));
}

CochainComplex CochainComplex::negated() const {
  ChainMap d(space_, space_, 1);
  for (int n = space_.min_degree(); n <= space_.max_degree(); ++n) {
    const RealMatrix b = differential_.block(n);
    RealMatrix neg = -1.0 * b;
    if (b.integral()) neg.mark_integral();
    d.set_block(n, std::move(neg));
  }
  return CochainComplex(space_, std::move(d));
}

linalg::Tolerance ChainOptions::tolerance_for(const RealMatrix& m) const {
  if (abs_tol) return linalg::Tolerance::absolute(*abs_tol);
  return linalg::Tolerance::absolute(rel_tol * std::max(1.0, m.max_abs()));
}

// ---------------------------------------------------------------------------
// ComplexMap and cone

ComplexMap::ComplexMap(CochainComplex source, CochainComplex target, ChainMap phi,
                       Commutation commutation, double rel_tol)
    : source_(std::move(source)),
      target_(std::move(target)),
      phi_(std::move(phi)),
      declared_(commutation) {
  if (!(phi_.source() == source_.space()) || !(phi_.target() == target_.space())) {
    throw Error(ErrorCode::kShapeMismatch, "map spaces differ from the complexes");
  }
  if (commutation == Commutation::kGraded && phi_.degree() % 2 != 0) {
    source_ = source_.negated();
  }
  const double scale =
      std::max(1.0, phi_.max_abs() * std::max(source_.differential().max_abs(),
                                              target_.differential().max_abs()));
  const double res = commutation_residual();
  if (res > rel_tol * scale) {
    throw Error(ErrorCode::kNotAChainMap, "commutation residual " + std::to_string(res));
  }
}

double ComplexMap::commutation_residual() const {
  const auto& b = source_.space();
  const int l = phi_.degree();
  double res = 0.0;
  for (int n = b.min_degree() - 1; n <= b.max_degree(); ++n) {
    const RealMatrix lhs = compose(phi_.block(n + 1), source_.d(n));
    const RealMatrix rhs = compose(target_.d(n + l), phi_.block(n));
    res = std::max(res, linalg::max_abs_diff(lhs, rhs));
  }
  return res;
}

CochainComplex cone(const ComplexMap& map) {
  const auto& a = map.target();
  const auto& b = map.source();
  const int l = map.degree();
  const auto [lo, hi] = joint_range(a.space(), b.space(), l - 1);
  std::vector<std::size_t> dims;
  for (int n = lo; n <= hi; ++n) dims.push_back(a.space().dim(n) + b.space().dim(n - l + 1));
  GradedVectorSpace space(lo, dims);

  ChainMap d(space, space, 1);
  for (int n = lo; n < hi; ++n) {
    const RealMatrix da = a.d(n);
    const RealMatrix ph = map.phi().block(n - l + 1);
    const RealMatrix db = b.d(n - l + 1);
    RealMatrix block = block2x2(da, ph, RealMatrix(db.rows(), da.cols()), -1.0 * db);
    if (da.integral() && ph.integral() && db.integral()) block.mark_integral();
    d.set_block(n, std::move(block));
  }
  return CochainComplex(std::move(space), std::move(d));
}

// ---------------------------------------------------------------------------
// Cohomology

GradedVectorSpace cohomology_dims(const CochainComplex& complex, const ChainOptions& opts) {
  const auto& s = complex.space();
  std::vector<std::size_t> dims;
  std::size_t prev_rank = 0;
  for (int n = s.min_degree(); n <= s.max_degree(); ++n) {
    const std::size_t r = rank_of(complex.d(n), opts);
    const std::size_t used = r + prev_rank;
    if (used > s.dim(n)) {
      throw Error(ErrorCode::kBoundaryNotSquareZero,
                  "ranks exceed dimension at degree " + std::to_string(n));
    }
    dims.push_back(s.dim(n) - used);
    prev_rank = r;
  }
  return GradedVectorSpace(s.min_degree(), std::move(dims));
}

RealMatrix harmonic_basis(const CochainComplex& complex, int n, const ChainOptions& opts) {
  const std::size_t dim = complex.space().dim(n);
  if (dim == 0) return RealMatrix(0, 0);
  const RealMatrix stacked = vstack(complex.d(n), complex.d(n - 1).transpose());
  if (stacked.rows() == 0) return RealMatrix::identity(dim);
  return linalg::kernel_basis(stacked, opts.tolerance_for(stacked));
}

RealMatrix induced_on_cohomology(const ComplexMap& map, int n, const ChainOptions& opts) {
  const RealMatrix hb = harmonic_basis(map.source(), n, opts);
  const RealMatrix ha = harmonic_basis(map.target(), n + map.degree(), opts);
  const RealMatrix ph = map.phi().block(n);
  RealMatrix hb_full = hb.rows() == ph.cols() ? hb : RealMatrix(ph.cols(), 0);
  RealMatrix ha_full = ha.rows() == ph.rows() ? ha : RealMatrix(ph.rows(), 0);
  return compose(compose(ha_full.transpose(), ph), hb_full);
}

// ---------------------------------------------------------------------------
// Derived complexes

namespace {

// Builds the complex whose degree-n space is spanned by the orthonormal
// columns basis[n] inside `ambient`, with differential basis^T d basis.
EmbeddedComplex embed(const CochainComplex& ambient, std::map<int, RealMatrix> basis) {
  int lo = 0, hi = -1;
  bool any = false;
  for (const auto& [n, q] : basis) {
    if (q.cols() == 0) continue;
    lo = any ? std::min(lo, n) : n;
    hi = any ? std::max(hi, n) : n;
    any = true;
  }
  std::vector<std::size_t> dims;
  for (int n = lo; n <= hi; ++n) dims.push_back(basis.count(n) ? basis.at(n).cols() : 0);
  GradedVectorSpace space(lo, dims);
  auto column_basis = [&](int n) {
    if (auto it = basis.find(n); it != basis.end()) return it->second;
    return RealMatrix(ambient.space().dim(n), 0);
  };
  ChainMap d(space, space, 1);
  for (int n = space.min_degree(); n < space.max_degree(); ++n) {
    d.set_block(n, compose(compose(column_basis(n + 1).transpose(), ambient.d(n)),
                           column_basis(n)));
  }
  std::map<int, RealMatrix> kept;
  for (int n = ambient.space().min_degree(); n <= ambient.space().max_degree(); ++n) {
    kept[n] = column_basis(n);
  }
  return EmbeddedComplex{CochainComplex(std::move(space), std::move(d)), std::move(kept)};
}

}  // namespace

EmbeddedComplex kernel_complex(const ComplexMap& map, const ChainOptions& opts) {
  const auto& b = map.source().space();
  std::map<int, RealMatrix> basis;
  for (int n = b.min_degree(); n <= b.max_degree(); ++n) {
    const RealMatrix ph = map.phi().block(n);
    basis[n] = ph.rows() == 0 ? RealMatrix::identity(ph.cols())
                              : linalg::kernel_basis(ph, opts.tolerance_for(ph));
  }
  return embed(map.source(), std::move(basis));
}

EmbeddedComplex image_complex(const ComplexMap& map, const ChainOptions& opts) {
  const auto& a = map.target().space();
  std::map<int, RealMatrix> basis;
  for (int n = a.min_degree(); n <= a.max_degree(); ++n) {
    const RealMatrix ph = map.phi().block(n - map.degree());
    basis[n] = ph.cols() == 0 ? RealMatrix(ph.rows(), 0)
                              : linalg::range_basis(ph, opts.tolerance_for(ph));
  }
  return embed(map.target(), std::move(basis));
}

EmbeddedComplex cokernel_complex(const ComplexMap& map, const ChainOptions& opts) {
  const auto& a = map.target().space();
  std::map<int, RealMatrix> basis;
  for (int n = a.min_degree(); n <= a.max_degree(); ++n) {
    const RealMatrix ph = map.phi().block(n - map.degree());
    basis[n] = ph.cols() == 0 ? RealMatrix::identity(ph.rows())
                              : linalg::cokernel_basis(ph, opts.tolerance_for(ph));
  }
  return embed(map.target(), std::move(basis));
}

// ---------------------------------------------------------------------------
// Lemma-style checks

DimensionCheck splitting_check(const ComplexMap& map, const ChainOptions& opts) {
  const int l = map.degree();
  const CochainComplex c = cone(map);
  const GradedVectorSpace hc = cohomology_dims(c, opts);
  const GradedVectorSpace ha = cohomology_dims(map.target(), opts);
  const GradedVectorSpace hb = cohomology_dims(map.source(), opts);
  auto induced_rank = [&](int n) { return rank_of(induced_on_cohomology(map, n, opts), opts); };

  DimensionCheck out;
  const auto [lo, hi] = joint_range(map.target().space(), map.source().space(), l - 1);
  for (int n = lo - 1; n <= hi + 1; ++n) {
    const std::size_t coker = ha.dim(n) - induced_rank(n - l);
    const std::size_t ker = hb.dim(n - l + 1) - induced_rank(n - l + 1);
    DegreeComparison cmp{n, hc.dim(n), coker + ker};
    out.holds = out.holds && cmp.lhs == cmp.rhs;
    out.degrees.push_back(cmp);
  }
  return out;
}

DimensionCheck cokernel_cone_iso_check(const ComplexMap& map, const ChainOptions& opts) {
  const EmbeddedComplex image = image_complex(map, opts);
  const EmbeddedComplex coker = cokernel_complex(map, opts);
  const auto& a = map.target();
  ChainMap inclusion(image.complex.space(), a.space(), 0);
  for (int n = image.complex.space().min_degree(); n <= image.complex.space().max_degree(); ++n) {
    inclusion.set_block(n, image.basis.at(n));
  }
  const ComplexMap iota(image.complex, a, std::move(inclusion));
  const GradedVectorSpace lhs = cohomology_dims(cone(iota), opts);
  const GradedVectorSpace rhs = cohomology_dims(coker.complex, opts);

  DimensionCheck out;
  const auto [lo, hi] = joint_range(a.space(), image.complex.space(), -1);
  for (int n = lo - 1; n <= hi + 1; ++n) {
    DegreeComparison cmp{n, lhs.dim(n), rhs.dim(n)};
    out.holds = out.holds && cmp.lhs == cmp.rhs;
    out.degrees.push_back(cmp);
  }
  return out;
}

ExactnessReport les_exactness_check(const ComplexMap& map, const ChainOptions& opts) {
  const int l = map.degree();
  const auto& a = map.target();
  const auto& b = map.source();
  const CochainComplex c = cone(map);
  const EmbeddedComplex ker = kernel_complex(map, opts);
  const EmbeddedComplex coker = cokernel_complex(map, opts);

  auto kbasis = [&](int m) {
    if (auto it = ker.basis.find(m); it != ker.basis.end()) return it->second;
    return RealMatrix(b.space().dim(m), 0);
  };
  auto qbasis = [&](int n) {
    if (auto it = coker.basis.find(n); it != coker.basis.end()) return it->second;
    return RealMatrix(a.space().dim(n), 0);
  };
  // Harmonic bases with rows padded to the embedded dimension so empty
  // degrees compose cleanly.
  auto harmonic = [&](const CochainComplex& cx, int n) {
    const RealMatrix h = harmonic_basis(cx, n, opts);
    if (h.rows() != cx.space().dim(n)) return RealMatrix(cx.space().dim(n), 0);
    return h;
  };

  // alpha_n: H^{n-l+1}(ker) -> H^n(cone), (0, b).
  auto alpha = [&](int n) {
    const int m = n - l + 1;
    const RealMatrix hk = harmonic(ker.complex, m);
    const RealMatrix hc = harmonic(c, n);
    const RealMatrix kb = kbasis(m);
    const RealMatrix embed_b = vstack(RealMatrix(a.space().dim(n), kb.cols()), kb);
    return compose(compose(hc.transpose(), embed_b), hk);
  };
  // beta_n: H^n(cone) -> H^n(coker), (a, b) -> Q^T a.
  auto beta = [&](int n) {
    const RealMatrix hc = harmonic(c, n);
    const RealMatrix hq = harmonic(coker.complex, n);
    const RealMatrix q = qbasis(n);
    const std::size_t bdim = b.space().dim(n - l + 1);
    const RealMatrix project = hstack(q.transpose(), RealMatrix(q.cols(), bdim));
    return compose(compose(hq.transpose(), project), hc);
  };
  // delta_n: H^n(coker) -> H^{n-l+2}(ker), [a] -> [d_B b] with phi b = d_A a.
  auto delta = [&](int n) {
    const int m = n - l + 1;
    const RealMatrix hq = harmonic(coker.complex, n);
    const RealMatrix hk = harmonic(ker.complex, m + 1);
    const RealMatrix kb = kbasis(m + 1);
    const RealMatrix q = qbasis(n);
    const RealMatrix ph = map.phi().block(m);
    const RealMatrix da = a.d(n);
    const RealMatrix db = b.d(m);
    RealMatrix out(hk.cols(), hq.cols());
    for (std::size_t j = 0; j < hq.cols(); ++j) {
      const RealMatrix rep = compose(q, hq.columns(j, 1));
      const RealMatrix rhs = compose(da, rep);
      std::vector<double> lift(ph.cols(), 0.0);
      if (!ph.empty()) lift = linalg::solve_in_range(ph, rhs.col(0), opts.tolerance_for(ph));
      const RealMatrix image = compose(db, RealMatrix::column(lift));
      const RealMatrix coords = compose(compose(hk.transpose(), kb.transpose()), image);
      for (std::size_t i = 0; i < hk.cols(); ++i) out(i, j) = coords(i, 0);
    }
    return out;
  };

  ExactnessReport report;
  auto node = [&](std::string term, int degree, int position, const RealMatrix& in,
                  const RealMatrix& out_map, std::size_t dim) {
    ExactnessNode nd;
    nd.term = std::move(term);
    nd.degree = degree;
    nd.position = position;
    nd.dim = dim;
    nd.incoming_rank = rank_of(in, opts);
    nd.outgoing_kernel = dim - rank_of(out_map, opts);
    if (!in.empty() && !out_map.empty()) {
      const RealMatrix comp = compose(out_map, in);
      nd.composition_residual = comp.max_abs();
    }
    const double scale = std::max(1.0, in.max_abs() * out_map.max_abs());
    nd.exact = nd.incoming_rank == nd.outgoing_kernel &&
               nd.composition_residual <= 1e-8 * scale;
    report.holds = report.holds && nd.exact;
    report.nodes.push_back(std::move(nd));
  };

  const auto [lo, hi] = joint_range(a.space(), b.space(), l - 1);
  for (int n = lo - 1; n <= hi + 1; ++n) {
    const RealMatrix al = alpha(n);
    const RealMatrix be = beta(n);
    const RealMatrix de = delta(n);
    const RealMatrix al_next = alpha(n + 1);
    node("cone", n, n, al, be, be.cols());
    node("coker", n, n, be, de, de.cols());
    node("ker", n - l + 2, n + 1, de, al_next, al_next.cols());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Random data

CochainComplex random_integer_complex(Rng& rng, int min_degree,
                                      const std::vector<std::size_t>& dims) {
  const std::size_t count = dims.size();
  std::vector<std::size_t> ranks(count, 0);
  std::size_t prev = 0;
  for (std::size_t i = 0; i + 1 < count; ++i) {
    const auto cap = std::min(dims[i] - prev, dims[i + 1]);
    ranks[i] = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(cap)));
    prev = ranks[i];
  }
  std::vector<std::pair<RealMatrix, RealMatrix>> conj;
  for (std::size_t i = 0; i < count; ++i) conj.push_back(unimodular(rng, dims[i]));

  GradedVectorSpace space(min_degree, dims);
  ChainMap d(space, space, 1);
  std::size_t incoming = 0;
  for (std::size_t i = 0; i + 1 < count; ++i) {
    RealMatrix e(dims[i + 1], dims[i]);
    for (std::size_t j = 0; j < ranks[i]; ++j) e(j, incoming + j) = 1.0;
    e.mark_integral();
    RealMatrix block = compose(compose(conj[i + 1].first, e), conj[i].second);
    d.set_block(min_degree + static_cast<int>(i), std::move(block));
    incoming = ranks[i];
  }
  return CochainComplex(std::move(space), std::move(d));
}

std::optional<ChainMap> sample_commuting_map(const CochainComplex& source,
                                             const CochainComplex& target, int ell, Rng& rng) {
  const auto& bs = source.space();
  const auto& as = target.space();
  // Unknown blocks phi_n : B^n -> A^{n+ell}, laid out row-major one after another.
  std::map<int, std::size_t> offset;
  std::size_t unknowns = 0;
  for (int n = bs.min_degree(); n <= bs.max_degree(); ++n) {
    offset[n] = unknowns;
    unknowns += as.dim(n + ell) * bs.dim(n);
  }
  if (unknowns == 0) return std::nullopt;
  auto var = [&](int n, std::size_t r, std::size_t c) {
    return offset.at(n) + r * bs.dim(n) + c;
  };

  // phi_{n+1} d_B(n) - d_A(n+ell) phi_n = 0 for every n.
  std::vector<std::vector<double>> rows;
  for (int n = bs.min_degree() - 1; n <= bs.max_degree(); ++n) {
    const std::size_t out_rows = as.dim(n + ell + 1);
    const std::size_t out_cols = bs.dim(n);
    if (out_rows == 0 || out_cols == 0) continue;
    const RealMatrix db = source.d(n);
    const RealMatrix da = target.d(n + ell);
    for (std::size_t i = 0; i < out_rows; ++i) {
      for (std::size_t j = 0; j < out_cols; ++j) {
        std::vector<double> row(unknowns, 0.0);
        if (offset.count(n + 1)) {
          for (std::size_t k = 0; k < db.rows(); ++k) row[var(n + 1, i, k)] += db(k, j);
        }
        if (offset.count(n)) {
          for (std::size_t k = 0; k < da.cols(); ++k) row[var(n, k, j)] -= da(i, k);
        }
        rows.push_back(std::move(row));
      }
    }
  }
  RealMatrix null_space;
  if (rows.empty()) {
    null_space = RealMatrix::identity(unknowns);
  } else {
    std::vector<double> flat;
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    RealMatrix system(rows.size(), unknowns, std::move(flat));
    system.mark_integral();
    null_space = linalg::kernel_basis(system);
  }
  if (null_space.cols() == 0) return std::nullopt;

  std::vector<double> g(null_space.cols());
  for (auto& x : g) x = rng.normal();
  const RealMatrix x = compose(null_space, RealMatrix::column(g));

  ChainMap phi(bs, as, ell);
  for (int n = bs.min_degree(); n <= bs.max_degree(); ++n) {
    RealMatrix blk(as.dim(n + ell), bs.dim(n));
    for (std::size_t r = 0; r < blk.rows(); ++r)
      for (std::size_t c = 0; c < blk.cols(); ++c) blk(r, c) = x(var(n, r, c), 0);
    phi.set_block(n, std::move(blk));
  }
  return phi;
}

RandomComplexMap random_commuting_map(std::uint64_t seed, int max_degrees, int max_dim, int ell) {
  if (max_degrees < 1 || max_dim < 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_degrees must be >= 1 and max_dim >= 0");
  }
  Rng rng(seed);
  std::optional<CochainComplex> last_a, last_b;
  for (int attempt = 0; attempt < 10; ++attempt) {
    const auto a_dims = random_dims(rng, rng.uniform_int(1, max_degrees), max_dim);
    const auto b_dims = random_dims(rng, rng.uniform_int(1, max_degrees), max_dim);
    const int b_min = -ell + rng.uniform_int(0, 1);
    CochainComplex a = random_integer_complex(rng, 0, a_dims);
    CochainComplex b = random_integer_complex(rng, b_min, b_dims);
    if (auto phi = sample_commuting_map(b, a, ell, rng)) {
      return RandomComplexMap{ComplexMap(b, a, std::move(*phi)), false};
    }
    last_a = std::move(a);
    last_b = std::move(b);
  }
  ChainMap zero(last_b->space(), last_a->space(), ell);
  return RandomComplexMap{ComplexMap(*last_b, *last_a, std::move(zero)), true};
}

// ---------------------------------------------------------------------------
// MorsePolynomial

MorsePolynomial::MorsePolynomial(int min_degree, std::vector<long long> coefficients)
    : min_degree_(min_degree), coeffs_(std::move(coefficients)) {
  trim();
}

MorsePolynomial MorsePolynomial::from_dims(const GradedVectorSpace& space) {
  std::vector<long long> c;
  for (auto d : space.dims()) c.push_back(static_cast<long long>(d));
  return MorsePolynomial(space.min_degree(), std::move(c));
}

void MorsePolynomial::trim() {
  std::size_t first = 0;
  while (first < coeffs_.size() && coeffs_[first] == 0) ++first;
  if (first == coeffs_.size()) {
    coeffs_.clear();
    min_degree_ = 0;
    return;
  }
  std::size_t last = coeffs_.size();
  while (coeffs_[last - 1] == 0) --last;
  coeffs_ = std::vector<long long>(coeffs_.begin() + static_cast<std::ptrdiff_t>(first),
                                   coeffs_.begin() + static_cast<std::ptrdiff_t>(last));
  min_degree_ += static_cast<int>(first);
}

long long MorsePolynomial::coefficient(int degree) const noexcept {
  if (degree < min_degree_ || degree > max_degree()) return 0;
  return coeffs_[static_cast<std::size_t>(degree - min_degree_)];
}

bool MorsePolynomial::is_zero() const noexcept { return coeffs_.empty(); }

bool MorsePolynomial::nonnegative() const noexcept {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](long long c) { return c >= 0; });
}

MorsePolynomial MorsePolynomial::shifted(int k) const {
  MorsePolynomial out = *this;
  if (!out.is_zero()) out.min_degree_ += k;
  return out;
}

namespace {

MorsePolynomial combine(const MorsePolynomial& a, const MorsePolynomial& b, long long sign) {
  if (a.is_zero() && b.is_zero()) return {};
  int lo = a.is_zero() ? b.min_degree() : a.min_degree();
  int hi = a.is_zero() ? b.max_degree() : a.max_degree();
  if (!b.is_zero()) {
    lo = std::min(lo, b.min_degree());
    hi = std::max(hi, b.max_degree());
  }
  std::vector<long long> c;
  for (int k = lo; k <= hi; ++k) c.push_back(a.coefficient(k) + sign * b.coefficient(k));
  return MorsePolynomial(lo, std::move(c));
}

}  // namespace

MorsePolynomial operator+(const MorsePolynomial& a, const MorsePolynomial& b) {
  return combine(a, b, 1);
}

MorsePolynomial operator-(const MorsePolynomial& a, const MorsePolynomial& b) {
  return combine(a, b, -1);
}

bool operator==(const MorsePolynomial& a, const MorsePolynomial& b) {
  return a.min_degree_ == b.min_degree_ && a.coeffs_ == b.coeffs_;
}

std::string MorsePolynomial::to_string() const {
  if (is_zero()) return "0";
  std::ostringstream out;
  bool first = true;
  for (int k = min_degree_; k <= max_degree(); ++k) {
    const long long c = coefficient(k);
    if (c == 0) continue;
    const long long mag = c < 0 ? -c : c;
    if (first) {
      if (c < 0) out << "-";
    } else {
      out << (c < 0 ? " - " : " + ");
    }
    first = false;
    if (k == 0) {
      out << mag;
      continue;
    }
    if (mag != 1) out << mag;
    out << "t";
    if (k != 1) out << "^" << k;
  }
  return out.str();
}

QCertificate q_polynomial(const MorsePolynomial& m, const MorsePolynomial& v,
                          const MorsePolynomial& bpsi, int ell) {
  QCertificate cert;
  cert.numerator = (m + m.shifted(ell - 1)) - (v.shifted(ell - 1) + v.shifted(ell)) - bpsi;
  const MorsePolynomial& num = cert.numerator;
  if (num.is_zero()) {
    cert.q = MorsePolynomial();
    return cert;
  }
  // Division by (1 + t) from the lowest degree upwards.
  std::vector<long long> q;
  long long carry = 0;
  for (int k = num.min_degree(); k < num.max_degree(); ++k) {
    carry = num.coefficient(k) - carry;
    q.push_back(carry);
  }
  const long long remainder = num.coefficient(num.max_degree()) - carry;
  if (remainder != 0) {
    cert.failure = ErrorCode::kInexactDivision;
    cert.detail = "numerator " + num.to_string() + " leaves remainder " +
                  std::to_string(remainder) + " after division by 1 + t";
    return cert;
  }
  MorsePolynomial quotient(num.min_degree(), std::move(q));
  if (!quotient.nonnegative()) {
    cert.failure = ErrorCode::kNegativeCoefficient;
    cert.detail = "quotient " + quotient.to_string() + " has a negative coefficient";
    return cert;
  }
  cert.q = std::move(quotient);
  return cert;
}

}  // namespace conemorse::chain
