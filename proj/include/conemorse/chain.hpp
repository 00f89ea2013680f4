#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conemorse/error.hpp"
#include "conemorse/linalg.hpp"
#include "conemorse/random.hpp"

namespace conemorse::chain {

using linalg::RealMatrix;

/// Finite-dimensional graded real vector space: one dimension per integer degree.
/// Leading and trailing zero dimensions are trimmed on construction.
class GradedVectorSpace {
 public:
  GradedVectorSpace() = default;
  GradedVectorSpace(int min_degree, std::vector<std::size_t> dims);

  int min_degree() const noexcept { return min_degree_; }
  /// Last degree of the stored range (min_degree - 1 when empty).
  int max_degree() const noexcept {
    return min_degree_ + static_cast<int>(dims_.size()) - 1;
  }
  std::size_t dim(int degree) const noexcept;
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t total_dim() const noexcept;
  long euler_characteristic() const noexcept;
  bool is_zero() const noexcept { return total_dim() == 0; }

  /// Dimensions over [lo, hi], zero outside the support.
  std::vector<std::size_t> dims_between(int lo, int hi) const;

  friend bool operator==(const GradedVectorSpace& a, const GradedVectorSpace& b);

 private:
  int min_degree_ = 0;
  std::vector<std::size_t> dims_;
};

/// Degree-l linear map between graded spaces, one matrix per source degree.
class ChainMap {
 public:
  ChainMap() = default;
  /// Zero map.
  ChainMap(GradedVectorSpace source, GradedVectorSpace target, int degree);
  ChainMap(GradedVectorSpace source, GradedVectorSpace target, int degree,
           std::map<int, RealMatrix> blocks);

  const GradedVectorSpace& source() const noexcept { return source_; }
  const GradedVectorSpace& target() const noexcept { return target_; }
  int degree() const noexcept { return degree_; }

  /// Block B^n -> A^{n+degree}; a correctly shaped zero matrix outside the support.
  RealMatrix block(int n) const;
  void set_block(int n, RealMatrix m);

  bool integral() const noexcept;
  double max_abs() const noexcept;
  ChainMap scaled(double factor) const;

 private:
  void check_shape(int n, const RealMatrix& m) const;

  GradedVectorSpace source_;
  GradedVectorSpace target_;
  int degree_ = 0;
  std::map<int, RealMatrix> blocks_;
};

/// (f after g), degrees add.
ChainMap compose(const ChainMap& after, const ChainMap& before);
ChainMap operator+(const ChainMap& a, const ChainMap& b);
/// Largest entry of a - b over all degrees.
double max_abs_diff(const ChainMap& a, const ChainMap& b);

/// Graded space with a degree +1 differential squaring to zero.
class CochainComplex {
 public:
  CochainComplex() = default;
  /// Throws BoundaryNotSquareZero when d*d is not zero (exactly for
  /// integral differentials, within 1e-10 * |d|^2 otherwise).
  CochainComplex(GradedVectorSpace space, ChainMap differential);

  /// Complex with zero differential.
  static CochainComplex with_zero_differential(GradedVectorSpace space);

  const GradedVectorSpace& space() const noexcept { return space_; }
  const ChainMap& differential() const noexcept { return differential_; }
  RealMatrix d(int n) const { return differential_.block(n); }
  CochainComplex negated() const;

 private:
  GradedVectorSpace space_;
  ChainMap differential_;
};

/// Rank threshold for matrices derived inside this module: absolute pivot
/// tolerance = rel_tol * max(1, max|entry|), or abs_tol when set.
struct ChainOptions {
  double rel_tol = 1e-8;
  std::optional<double> abs_tol;
  linalg::Tolerance tolerance_for(const RealMatrix& m) const;
};

/// Which square-zero condition phi is declared to satisfy.
enum class Commutation {
  /// phi d_B = d_A phi.
  kStrict,
  /// d_A phi = (-1)^l phi d_B, the relation obeyed by c(psi) for an l-form.
  kGraded,
};

/// A degree-l map phi: B -> A between cochain complexes.
///
/// Stored internally in strict form: for a graded map with odd l the source
/// differential is negated, which leaves every cohomology unchanged.
class ComplexMap {
 public:
  /// Throws NotAChainMap when the residual exceeds
  /// rel_tol * max(1, |phi| * max(|d_A|, |d_B|)).
  ComplexMap(CochainComplex source, CochainComplex target, ChainMap phi,
             Commutation commutation = Commutation::kStrict, double rel_tol = 1e-9);

  const CochainComplex& source() const noexcept { return source_; }
  const CochainComplex& target() const noexcept { return target_; }
  const ChainMap& phi() const noexcept { return phi_; }
  int degree() const noexcept { return phi_.degree(); }
  Commutation declared() const noexcept { return declared_; }
  /// max_n |phi d_B - d_A phi| in the stored strict form.
  double commutation_residual() const;

 private:
  CochainComplex source_;
  CochainComplex target_;
  ChainMap phi_;
  Commutation declared_;
};

/// Cone^n = A^n + B^{n-l+1} with differential (d_A, phi; 0, -d_B) in the
/// stored strict form. For a map declared kGraded this is the complex with
/// (-1)^{l-1} d on the second block.
CochainComplex cone(const ComplexMap& map);

/// Dimension of H^n = dim C^n - rank d_n - rank d_{n-1}.
GradedVectorSpace cohomology_dims(const CochainComplex& complex, const ChainOptions& opts = {});

/// Orthonormal basis of ker d_n intersected with (im d_{n-1})^perp.
RealMatrix harmonic_basis(const CochainComplex& complex, int n, const ChainOptions& opts = {});

/// Matrix of the induced map H^n(B) -> H^{n+l}(A) in harmonic coordinates.
RealMatrix induced_on_cohomology(const ComplexMap& map, int n, const ChainOptions& opts = {});

/// A complex realised inside an ambient graded space: column basis per degree
/// (orthonormal) and the restricted/projected differential in that basis.
struct EmbeddedComplex {
  CochainComplex complex;
  std::map<int, RealMatrix> basis;
};

/// Null spaces of phi with the restriction of d_B.
EmbeddedComplex kernel_complex(const ComplexMap& map, const ChainOptions& opts = {});
/// Column spaces of phi with the restriction of d_A.
EmbeddedComplex image_complex(const ComplexMap& map, const ChainOptions& opts = {});
/// Orthogonal complements of the image with the projected differential.
EmbeddedComplex cokernel_complex(const ComplexMap& map, const ChainOptions& opts = {});

struct DegreeComparison {
  int degree = 0;
  std::size_t lhs = 0;
  std::size_t rhs = 0;
};

struct DimensionCheck {
  bool holds = true;
  std::vector<DegreeComparison> degrees;
};

/// dim H^n(Cone) against coker[phi] in degree n plus ker[phi] in degree n-l+1.
DimensionCheck splitting_check(const ComplexMap& map, const ChainOptions& opts = {});

/// dim H^n of the cone of the inclusion im(phi) -> A against dim H^n(coker phi).
DimensionCheck cokernel_cone_iso_check(const ComplexMap& map, const ChainOptions& opts = {});

struct ExactnessNode {
  std::string term;  // "ker", "cone" or "coker"
  int degree = 0;    // cohomological degree of the node's own complex
  int position = 0;  // the cone degree n the node is attached to
  std::size_t dim = 0;
  std::size_t incoming_rank = 0;
  std::size_t outgoing_kernel = 0;
  double composition_residual = 0.0;
  bool exact = true;
};

struct ExactnessReport {
  bool holds = true;
  std::vector<ExactnessNode> nodes;
};

/// Exactness of
///   H^{n-l+1}(ker) -> H^n(Cone) -> H^n(coker) -> H^{n-l+2}(ker) -> ...
/// checked node by node from explicit induced maps. The connecting map sends
/// a closed cokernel class [a] to [d_B b] where b is the minimum-norm
/// solution of phi b = d_A a.
ExactnessReport les_exactness_check(const ComplexMap& map, const ChainOptions& opts = {});

struct RandomComplexMap {
  ComplexMap map;
  /// No nonzero commuting map existed after 10 resampled complex pairs; the
  /// returned map is zero.
  bool degenerate = false;
};

/// Random complexes built as direct sums of acyclic pairs and homology
/// generators conjugated by random unimodular integer matrices (so d*d = 0
/// exactly), with phi drawn from a Gaussian in an orthonormal basis of the
/// solutions of phi d_B = d_A phi.
RandomComplexMap random_commuting_map(std::uint64_t seed, int max_degrees, int max_dim, int ell);

/// Random complex with integer differential supported in [min_degree, min_degree + degrees).
CochainComplex random_integer_complex(Rng& rng, int min_degree,
                                      const std::vector<std::size_t>& dims);

/// Gaussian sample from the solution space of phi d_B = d_A phi
/// (nullopt when only the zero map solves it).
std::optional<ChainMap> sample_commuting_map(const CochainComplex& source,
                                             const CochainComplex& target, int ell,
                                             Rng& rng);

/// Laurent polynomial with integer coefficients.
class MorsePolynomial {
 public:
  MorsePolynomial() = default;
  MorsePolynomial(int min_degree, std::vector<long long> coefficients);
  static MorsePolynomial from_dims(const GradedVectorSpace& space);

  long long coefficient(int degree) const noexcept;
  int min_degree() const noexcept { return min_degree_; }
  int max_degree() const noexcept {
    return min_degree_ + static_cast<int>(coeffs_.size()) - 1;
  }
  const std::vector<long long>& coefficients() const noexcept { return coeffs_; }
  bool is_zero() const noexcept;
  bool nonnegative() const noexcept;

  /// Multiplication by t^k.
  MorsePolynomial shifted(int k) const;
  friend MorsePolynomial operator+(const MorsePolynomial& a, const MorsePolynomial& b);
  friend MorsePolynomial operator-(const MorsePolynomial& a, const MorsePolynomial& b);
  friend bool operator==(const MorsePolynomial& a, const MorsePolynomial& b);

  std::string to_string() const;

 private:
  void trim();
  int min_degree_ = 0;
  std::vector<long long> coeffs_;
};

struct QCertificate {
  std::optional<MorsePolynomial> q;
  /// Numerator (1 + t^{l-1}) M - (t^{l-1} + t^l) V - B^psi.
  MorsePolynomial numerator;
  std::optional<ErrorCode> failure;
  std::string detail;
};

/// Q(t) = [(1 + t^{l-1}) M(t) - (t^{l-1} + t^l) V(t) - B^psi(t)] / (1 + t),
/// accepted only if the division is exact and every coefficient is >= 0.
QCertificate q_polynomial(const MorsePolynomial& m, const MorsePolynomial& v,
                          const MorsePolynomial& bpsi, int ell);

}  // namespace conemorse::chain
