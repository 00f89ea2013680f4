#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conemorse/chain.hpp"

namespace conemorse::morse {

using chain::ChainMap;
using chain::CochainComplex;
using chain::GradedVectorSpace;
using chain::MorsePolynomial;

struct CriticalPoint {
  std::string id;
  int index = 0;
};

/// Signed count n(r, q) of flow lines from r (index k+1) down to q (index k).
struct FlowCount {
  std::string from;
  std::string to;
  long long n = 0;
};

/// Integral of psi over the compactified moduli space of flow lines from r to q.
struct PsiIntegral {
  std::string from;
  std::string to;
  double value = 0.0;
};

struct DeRhamData {
  std::vector<int> betti;
  /// r_k = rank of the cup product with [psi] from degree k to k + l.
  std::vector<int> psi_ranks;
};

struct MorseData {
  int dimension = 0;
  int psi_degree = 0;
  bool psi_closed = true;
  std::vector<CriticalPoint> critical_points;
  std::vector<FlowCount> flow_counts;
  std::vector<PsiIntegral> psi_integrals;
  std::optional<DeRhamData> de_rham;
};

struct MorseOptions {
  /// Allowed |d c - (-1)^l c d| relative to max(1, |c| |d|) for closed psi.
  double leibniz_tol = 1e-8;
  /// Absolute pivot threshold for ranks of c(psi); default max(auto, 1e-9).
  std::optional<double> rank_tol;
};

/// Structural checks: ids, indices, index gaps, de Rham ranks. Throws
/// SchemaError or InvalidRanks; the boundary and Leibniz checks happen in
/// the assembly functions.
void validate(const MorseData& data);

/// m_k per index; generators of each degree keep their order of appearance.
GradedVectorSpace morse_space(const MorseData& data);

/// Integer-flagged boundary, one block per index. Throws BoundaryNotSquareZero.
ChainMap assemble_boundary(const MorseData& data);
CochainComplex morse_complex(const MorseData& data);

/// c(psi) of degree l. Throws LeibnizViolation for psi_closed data that
/// breaks d c = (-1)^l c d beyond the tolerance.
ChainMap assemble_cpsi(const MorseData& data, const MorseOptions& opts = {});

/// Cone of c(psi) with the (-1)^{l-1} sign on the second block.
CochainComplex cone_morse_complex(const MorseData& data, const MorseOptions& opts = {});

/// max over degrees of |d c(psi) + (-1)^{l+1} c(psi) d + c(d psi)|.
double leibniz_residual(const ChainMap& partial, const ChainMap& c_psi, const ChainMap& c_dpsi,
                        int ell);
/// Same with c(d psi) = 0.
double leibniz_residual(const ChainMap& partial, const ChainMap& c_psi, int ell);

/// b^psi_k = b_k - r_{k-l} + b_{k-l+1} - r_{k-l+1} over the report range.
/// Throws InvalidRanks when some r_k exceeds b_k or b_{k+l}.
MorsePolynomial bpsi_from_de_rham(const std::vector<int>& betti,
                                  const std::vector<int>& psi_ranks, int ell);

/// Degrees covered by reports, i.e. the cone degrees:
/// min(0, l-1) .. max(dim, dim + l - 1).
std::pair<int, int> report_range(int dimension, int ell);

struct InequalityRecord {
  std::string check;
  int degree = 0;
  long long lhs = 0;
  long long rhs = 0;
  /// "<=" or "==".
  std::string relation;
  bool holds = true;
  long long slack() const noexcept { return rhs - lhs; }
};

struct RankEntry {
  int degree = 0;
  std::size_t rank = 0;
  bool uncertain = false;
  double smallest_accepted_pivot = 0.0;
  double largest_rejected_pivot = 0.0;
  double pivot_tolerance = 0.0;
};

struct ConeMorseReport {
  int dimension = 0;
  int ell = 0;
  int k_lo = 0;
  int k_hi = -1;
  MorsePolynomial m;
  MorsePolynomial v;
  std::vector<RankEntry> v_ranks;
  /// dim H^k of the cone Morse complex by rank-nullity.
  MorsePolynomial cone_dims;
  std::optional<MorsePolynomial> betti;
  std::optional<MorsePolynomial> r;
  /// From de Rham data when present, otherwise the cone Morse dimensions.
  MorsePolynomial b_psi;
  std::string b_psi_source;
  bool perfect = false;
  std::vector<InequalityRecord> records;
  chain::QCertificate q;

  bool any_uncertain() const noexcept;
  bool all_hold() const noexcept;
};

/// Evaluates every applicable bound. Never throws for violated bounds; use
/// require_consistent to turn them into InequalityViolated.
ConeMorseReport inequality_report(const MorseData& data, const MorseOptions& opts = {});
void require_consistent(const ConeMorseReport& report);

/// Random algebraic Morse data: an integer complex with a random graded
/// degree-l endomorphism standing in for c(psi), and de Rham data read off
/// its cohomology. With `perfect` the boundary is zero.
MorseData generate_dataset(std::uint64_t seed, int max_dimension, int max_points, int ell,
                           bool perfect);

}  // namespace conemorse::morse
