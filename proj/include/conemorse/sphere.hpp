#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "conemorse/chain.hpp"
#include "conemorse/linalg.hpp"
#include "conemorse/morse.hpp"

namespace conemorse::sphere {

using linalg::RealMatrix;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) { return (1.0 / norm(a)) * a; }

/// (sin phi cos theta, sin phi sin theta, cos phi).
Vec3 from_angles(double phi, double theta);
/// Great-circle distance between unit vectors.
double angle_between(Vec3 a, Vec3 b);

enum class MorseFunctionKind {
  /// x^2 + 2y^2 + 3z^2, six critical points.
  kSixPoint,
  /// z, one minimum and one maximum.
  kHeight,
};

/// Inverse metric I + beta(p) (a b^T + b a^T) on the tangent plane, with
/// beta = strength * exp(1 - 1/(1 - (d/radius)^2)) for geodesic distance
/// d < radius from the centre. `direction` is the tangent a at the centre;
/// positive strength tilts flow along a towards b = a x p.
struct MetricBump {
  Vec3 center;
  double radius = 0.35;
  double strength = 0.0;
  Vec3 direction;
};

struct OdeParams {
  double step = 1e-3;
  double stop_radius = 1e-3;
  std::size_t max_steps = 1'000'000;
};

struct SurfaceScene {
  MorseFunctionKind function = MorseFunctionKind::kSixPoint;
  std::optional<MetricBump> bump;
  std::size_t n_phi = 256;
  std::size_t n_theta = 512;
  OdeParams ode;
  /// Also classify a half-resolution grid to estimate quadrature error.
  bool error_estimate = true;
  /// Stop a trajectory as soon as f drops below the lowest saddle value
  /// (forward) or rises above the highest one (backward); f is monotone
  /// along the flow, so the limit is already the critical point nearest to
  /// the trajectory in that sublevel component.
  bool level_traps = true;

  /// Bump on the flow line from (0,1,0) to (1,0,0), centred at its midpoint.
  static SurfaceScene perturbed(double strength);
  /// Throws InvalidArgument for bad parameters.
  void validate() const;
};

struct CriticalPoint {
  std::string id;
  int index = 0;
  Vec3 position;
  /// Orientation of the unstable manifold for index 1 points.
  Vec3 unstable_reference;
};

std::vector<CriticalPoint> critical_points(const SurfaceScene& scene);
double morse_value(const SurfaceScene& scene, Vec3 p);
/// -grad_g f in ambient coordinates (tangent to the sphere at unit p).
Vec3 flow_field(const SurfaceScene& scene, Vec3 p);

/// Two-form psi = density * omega_0, omega_0 the standard area form.
struct TwoForm {
  std::string tag;
  std::function<double(Vec3)> density;

  static TwoForm volume();
  /// (y + s) omega_0.
  static TwoForm family_s(double s);
  /// (1 + t x + t z) omega_0.
  static TwoForm family_t(double t);
};

/// One-form as an ambient covector field A, alpha = A . dp restricted to the sphere.
struct OneForm {
  std::string tag;
  std::function<Vec3(Vec3)> covector;
  /// curl A; when empty a central finite difference is used.
  std::function<Vec3(Vec3)> curl;
  bool pole_regular = true;

  /// alpha = a_phi dphi + a_theta dtheta. Forms that are not pole regular
  /// raise PoleSingularity within 0.05 rad of either pole.
  static OneForm spherical(std::function<double(double, double)> a_phi,
                           std::function<double(double, double)> a_theta, bool pole_regular,
                           std::string tag = "spherical");
  /// dh for h given with its ambient gradient.
  static OneForm exact(std::function<Vec3(Vec3)> gradient, std::string tag = "exact");
  /// Sum of Gaussian bumps exp(-|p - c_i|^2 / w_i^2) v_i.
  struct Bump {
    Vec3 center;
    Vec3 vector;
    double width = 0.2;
  };
  static OneForm bumps(std::vector<Bump> bumps, std::string tag = "bumps");

  Vec3 at(Vec3 p) const;
  /// Density of d alpha with respect to omega_0: p . curl A.
  double d_density(Vec3 p) const;
  TwoForm d() const;
};

/// Per-cell flow limits on an n_phi x n_theta grid of cell centres
/// phi_i = (i + 1/2) pi / n_phi, theta_j = -pi + (j + 1/2) 2 pi / n_theta.
struct ModuliDecomposition {
  std::size_t n_phi = 0;
  std::size_t n_theta = 0;
  std::vector<CriticalPoint> points;
  /// Indices into `points`; every cell is assigned after separatrix voting.
  std::vector<int> forward;
  std::vector<int> backward;
  /// Cells whose first trajectory was ambiguous (near a saddle or out of steps).
  std::vector<std::uint8_t> separatrix;
  std::size_t separatrix_cells = 0;
  std::size_t vote_fallbacks = 0;
  std::shared_ptr<const ModuliDecomposition> coarse;

  double cell_area(std::size_t i) const;
  Vec3 cell_center(std::size_t i, std::size_t j) const;
  double separatrix_fraction() const;
  double separatrix_area() const;
};

struct RegionArea {
  std::string from;
  std::string to;
  double area = 0.0;
};

/// Throws NonTransverseSuspected when more than 1% of cells are separatrix cells.
ModuliDecomposition classify_moduli(const SurfaceScene& scene);
std::vector<RegionArea> region_areas(const ModuliDecomposition& decomp);
/// One row per cell: i,j,phi,theta,backward,forward,separatrix.
void write_decomposition_csv(const ModuliDecomposition& decomp, std::ostream& out);

struct ModuliIntegral {
  std::string from;  // index 2 point
  std::string to;    // index 0 point
  double value = 0.0;
  /// |fine - coarse| / 3 when a coarse grid is available, else 0.
  double error = 0.0;
  /// Richardson value (4 fine - coarse) / 3; equals value without a coarse grid.
  double extrapolated = 0.0;
};

std::vector<ModuliIntegral> integrate_over_moduli(const ModuliDecomposition& decomp,
                                                  const TwoForm& psi);
/// Index-2 rows by index-0 columns in critical point order.
RealMatrix moduli_matrix(const std::vector<ModuliIntegral>& integrals,
                         const std::vector<CriticalPoint>& points, bool extrapolated = false);
/// Largest error estimate among the integrals.
double max_error(const std::vector<ModuliIntegral>& integrals);

/// Midpoint-rule integral of psi over the whole sphere.
double integrate_sphere(const TwoForm& psi, std::size_t n_phi, std::size_t n_theta);

enum class Family { kS, kT };
/// Closed-form quarter-sphere integrals for the round metric and f = x^2+2y^2+3z^2.
RealMatrix analytic_cpsi(Family family, double param);

enum class Branch { kDescending, kAscending };

/// Flow line through an index 1 point, oriented along the flow (higher index
/// first). `n` is its signed contribution to the Morse boundary.
struct FlowCurve {
  std::string from;
  std::string to;
  std::string saddle;
  Branch branch = Branch::kDescending;
  int sign = 1;
  int n = 0;
  std::vector<Vec3> points;
};

/// Seeds at saddle + sign * 10 stop_radius along the unstable (descending)
/// or stable (ascending) eigenvector and integrates to the limit point.
/// Throws DidNotConverge when it stalls at another saddle or runs out of steps.
FlowCurve flow_curve(const SurfaceScene& scene, const std::string& saddle, Branch branch, int sign);
std::vector<FlowCurve> all_flow_curves(const SurfaceScene& scene);

/// Trapezoid-rule integral of alpha along the polyline.
double line_integral(const OneForm& alpha, const std::vector<Vec3>& curve);

/// Morse boundary from counted flow curves.
chain::ChainMap boundary_from_curves(const SurfaceScene& scene, const std::vector<FlowCurve>& curves);
/// c(alpha) of degree 1: each flow line contributes -n(r,q) * line integral.
chain::ChainMap c_one_form(const SurfaceScene& scene, const std::vector<FlowCurve>& curves,
                           const OneForm& alpha);
/// c(psi) of degree 2 from moduli quadrature.
chain::ChainMap c_two_form(const ModuliDecomposition& decomp, const TwoForm& psi);
/// c(h) of degree 0: diagonal h(q).
chain::ChainMap c_function(const SurfaceScene& scene, const std::function<double(Vec3)>& h);

struct ExactFormReport {
  /// c_ij^{ab}: line integral from p_i^a to p_j^b; keys "21++", "10-+", ...
  std::vector<std::pair<std::string, double>> line_integrals;
  RealMatrix c;
  double meridian = 0.0;
  double equator = 0.0;
  double determinant = 0.0;
  double product = 0.0;
};

/// c(d alpha) from the eight flow-curve line integrals via the quarter-sphere
/// boundary lists. Meridian loop p2+ -> p1+ -> p2- -> p1-; equator loop in
/// increasing theta. det c = meridian * equator.
ExactFormReport exact_form_cpsi(const OneForm& alpha, const SurfaceScene& scene);
ExactFormReport exact_form_cpsi(const OneForm& alpha, const std::vector<FlowCurve>& curves);

/// 1 iff |integral of psi over the sphere| > tol * 4 pi.
int de_rham_r0(const TwoForm& psi, double tol = 1e-4, std::size_t n_phi = 256,
               std::size_t n_theta = 512);

struct MorseDataOptions {
  /// Use these c(psi) entries instead of quadrature (analytic mode).
  std::optional<RealMatrix> cpsi;
  double r0_tol = 1e-4;
};

/// MorseData for (scene, psi) with l = 2, flow counts from flow curves and
/// de Rham data b = (1, 0, 1), r_0 from the total integral.
morse::MorseData scene_to_morse_data(const SurfaceScene& scene, const ModuliDecomposition& decomp,
                                     const TwoForm& psi, const MorseDataOptions& opts = {});

}  // namespace conemorse::sphere
