#include "conemorse/morse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include "conemorse/error.hpp"
#include "conemorse/random.hpp"

namespace conemorse::morse {

namespace {

using chain::ComplexMap;
using chain::Commutation;
using linalg::RealMatrix;

struct Layout {
  std::unordered_map<std::string, int> index;
  std::unordered_map<std::string, std::size_t> position;
  std::vector<std::size_t> counts;  // m_k for k = 0..dim
};

Layout layout_of(const MorseData& data) {
  Layout l;
  l.counts.assign(static_cast<std::size_t>(std::max(data.dimension, 0)) + 1, 0);
  for (const auto& p : data.critical_points) {
    l.index[p.id] = p.index;
    l.position[p.id] = l.counts[static_cast<std::size_t>(p.index)]++;
  }
  return l;
}

std::size_t count_at(const Layout& l, int k) {
  if (k < 0 || k >= static_cast<int>(l.counts.size())) return 0;
  return l.counts[static_cast<std::size_t>(k)];
}

void schema(const std::string& what) { throw Error(ErrorCode::kSchemaError, what); }

long long at(const std::vector<int>& v, int k) {
  if (k < 0 || k >= static_cast<int>(v.size())) return 0;
  return v[static_cast<std::size_t>(k)];
}

double vk_tolerance(const RealMatrix& block, const MorseOptions& opts) {
  if (opts.rank_tol) return *opts.rank_tol;
  return std::max(linalg::Tolerance::automatic().resolve(block), 1e-9);
}

chain::ChainOptions chain_options(const MorseOptions& opts) {
  chain::ChainOptions c;
  c.abs_tol = opts.rank_tol;
  return c;
}

}  // namespace

void validate(const MorseData& data) {
  if (data.dimension < 0) schema("dimension must be non-negative");
  if (data.psi_degree < 0) schema("psi_degree must be non-negative");
  std::set<std::string> ids;
  for (const auto& p : data.critical_points) {
    if (p.id.empty()) schema("critical point id must be non-empty");
    if (!ids.insert(p.id).second) schema("duplicate critical point id '" + p.id + "'");
    if (p.index < 0 || p.index > data.dimension) {
      schema("critical point '" + p.id + "' has index outside [0, dimension]");
    }
  }
  const Layout l = layout_of(data);
  auto check_pair = [&](const std::string& from, const std::string& to, int gap,
                        const char* what, std::set<std::pair<std::string, std::string>>& seen) {
    if (!l.index.count(from)) schema(std::string(what) + " references unknown point '" + from + "'");
    if (!l.index.count(to)) schema(std::string(what) + " references unknown point '" + to + "'");
    if (l.index.at(from) != l.index.at(to) + gap) {
      schema(std::string(what) + " " + from + " -> " + to + " must raise the index by " +
             std::to_string(gap));
    }
    if (!seen.insert({from, to}).second) {
      schema(std::string("duplicate ") + what + " " + from + " -> " + to);
    }
  };
  std::set<std::pair<std::string, std::string>> seen_flow, seen_psi;
  for (const auto& f : data.flow_counts) check_pair(f.from, f.to, 1, "flow count", seen_flow);
  for (const auto& p : data.psi_integrals) {
    check_pair(p.from, p.to, data.psi_degree, "psi integral", seen_psi);
    if (!std::isfinite(p.value)) throw Error(ErrorCode::kNonFiniteEntry, "psi integral value");
  }
  if (data.de_rham) {
    const auto& dr = *data.de_rham;
    if (static_cast<int>(dr.betti.size()) != data.dimension + 1) {
      schema("de_rham.betti must list dimension + 1 Betti numbers");
    }
    if (static_cast<int>(dr.psi_ranks.size()) > data.dimension + 1) {
      schema("de_rham.psi_ranks has more entries than degrees");
    }
    bpsi_from_de_rham(dr.betti, dr.psi_ranks, data.psi_degree);
  }
}

GradedVectorSpace morse_space(const MorseData& data) {
  const Layout l = layout_of(data);
  return GradedVectorSpace(0, l.counts);
}

ChainMap assemble_boundary(const MorseData& data) {
  validate(data);
  const Layout l = layout_of(data);
  const GradedVectorSpace space(0, l.counts);
  std::map<int, RealMatrix> blocks;
  for (int k = 0; k < data.dimension; ++k) {
    blocks[k] = RealMatrix(count_at(l, k + 1), count_at(l, k));
  }
  for (const auto& f : data.flow_counts) {
    const int k = l.index.at(f.to);
    blocks[k](l.position.at(f.from), l.position.at(f.to)) = static_cast<double>(f.n);
  }
  for (auto& [k, b] : blocks) b.mark_integral();
  ChainMap d(space, space, 1, std::move(blocks));
  CochainComplex check(space, d);
  return d;
}

CochainComplex morse_complex(const MorseData& data) {
  ChainMap d = assemble_boundary(data);
  GradedVectorSpace space = d.source();
  return CochainComplex(std::move(space), std::move(d));
}

ChainMap assemble_cpsi(const MorseData& data, const MorseOptions& opts) {
  validate(data);
  const Layout l = layout_of(data);
  const GradedVectorSpace space(0, l.counts);
  const int ell = data.psi_degree;
  std::map<int, RealMatrix> blocks;
  for (int k = 0; k + ell <= data.dimension; ++k) {
    blocks[k] = RealMatrix(count_at(l, k + ell), count_at(l, k));
  }
  for (const auto& p : data.psi_integrals) {
    const int k = l.index.at(p.to);
    blocks[k](l.position.at(p.from), l.position.at(p.to)) = p.value;
  }
  ChainMap c(space, space, ell, std::move(blocks));
  if (data.psi_closed) {
    const ChainMap d = assemble_boundary(data);
    const double res = leibniz_residual(d, c, ell);
    const double scale = std::max(1.0, c.max_abs() * std::max(1.0, d.max_abs()));
    if (res > opts.leibniz_tol * scale) {
      throw Error(ErrorCode::kLeibnizViolation,
                  "|d c - (-1)^l c d| = " + std::to_string(res) + " for a closed form");
    }
  }
  return c;
}

CochainComplex cone_morse_complex(const MorseData& data, const MorseOptions& opts) {
  if (!data.psi_closed) {
    throw Error(ErrorCode::kInvalidArgument, "the cone Morse complex needs a closed form");
  }
  const CochainComplex c = morse_complex(data);
  const ChainMap cpsi = assemble_cpsi(data, opts);
  return chain::cone(ComplexMap(c, c, cpsi, Commutation::kGraded, opts.leibniz_tol));
}

double leibniz_residual(const ChainMap& partial, const ChainMap& c_psi, const ChainMap& c_dpsi,
                        int ell) {
  if (c_psi.degree() != ell || c_dpsi.degree() != ell + 1 || partial.degree() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "map degrees do not match l");
  }
  const double sign = (ell % 2 == 0) ? -1.0 : 1.0;  // (-1)^{l+1}
  const ChainMap lhs = chain::compose(partial, c_psi);
  const ChainMap rhs = chain::compose(c_psi, partial).scaled(sign);
  const ChainMap total = lhs + rhs + c_dpsi;
  return total.max_abs();
}

double leibniz_residual(const ChainMap& partial, const ChainMap& c_psi, int ell) {
  return leibniz_residual(partial, c_psi,
                          ChainMap(partial.source(), partial.target(), ell + 1), ell);
}

std::pair<int, int> report_range(int dimension, int ell) {
  return {std::min(0, ell - 1), std::max(dimension, dimension + ell - 1)};
}

MorsePolynomial bpsi_from_de_rham(const std::vector<int>& betti,
                                  const std::vector<int>& psi_ranks, int ell) {
  for (int k = 0; k < static_cast<int>(betti.size()); ++k) {
    if (at(betti, k) < 0) throw Error(ErrorCode::kInvalidRanks, "negative Betti number");
  }
  for (int k = 0; k < static_cast<int>(psi_ranks.size()); ++k) {
    const long long r = at(psi_ranks, k);
    if (r < 0 || r > at(betti, k) || r > at(betti, k + ell)) {
      throw Error(ErrorCode::kInvalidRanks, "r_" + std::to_string(k) + " = " + std::to_string(r) +
                                                " exceeds b_k or b_{k+l}");
    }
  }
  const int dim = static_cast<int>(betti.size()) - 1;
  const auto [lo, hi] = report_range(dim, ell);
  std::vector<long long> c;
  for (int k = lo; k <= hi; ++k) {
    c.push_back(at(betti, k) - at(psi_ranks, k - ell) + at(betti, k - ell + 1) -
                at(psi_ranks, k - ell + 1));
  }
  return MorsePolynomial(lo, std::move(c));
}

bool ConeMorseReport::any_uncertain() const noexcept {
  return std::any_of(v_ranks.begin(), v_ranks.end(), [](const RankEntry& e) { return e.uncertain; });
}

bool ConeMorseReport::all_hold() const noexcept {
  return q.q.has_value() &&
         std::all_of(records.begin(), records.end(), [](const auto& r) { return r.holds; });
}

ConeMorseReport inequality_report(const MorseData& data, const MorseOptions& opts) {
  if (!data.psi_closed) {
    throw Error(ErrorCode::kInvalidArgument, "cone Morse inequalities need a closed form");
  }
  const int ell = data.psi_degree;
  const int dim = data.dimension;
  const CochainComplex complex = morse_complex(data);
  const ChainMap cpsi = assemble_cpsi(data, opts);
  const ComplexMap map(complex, complex, cpsi, Commutation::kGraded, opts.leibniz_tol);
  const chain::ChainOptions copts = chain_options(opts);

  ConeMorseReport rep;
  rep.dimension = dim;
  rep.ell = ell;
  std::tie(rep.k_lo, rep.k_hi) = report_range(dim, ell);

  std::vector<long long> mk, vk;
  for (int k = 0; k <= dim; ++k) {
    mk.push_back(static_cast<long long>(complex.space().dim(k)));
    const RealMatrix block = cpsi.block(k);
    RankEntry e;
    e.degree = k;
    if (!block.empty()) {
      const double tol = vk_tolerance(block, opts);
      const auto rr = linalg::rank(block, linalg::Tolerance::absolute(tol));
      e.rank = rr.rank;
      e.uncertain = rr.uncertain();
      e.smallest_accepted_pivot = rr.smallest_accepted_pivot;
      e.largest_rejected_pivot = rr.largest_rejected_pivot;
      e.pivot_tolerance = rr.pivot_tolerance;
    }
    vk.push_back(static_cast<long long>(e.rank));
    rep.v_ranks.push_back(e);
  }
  rep.m = MorsePolynomial(0, mk);
  rep.v = MorsePolynomial(0, vk);
  auto m = [&](int k) { return rep.m.coefficient(k); };
  auto v = [&](int k) { return rep.v.coefficient(k); };

  rep.cone_dims = MorsePolynomial::from_dims(chain::cohomology_dims(chain::cone(map), copts));
  const GradedVectorSpace morse_h = chain::cohomology_dims(complex, copts);

  auto add = [&](std::string check, int degree, long long lhs, long long rhs, bool equality) {
    InequalityRecord r{std::move(check), degree, lhs, rhs, equality ? "==" : "<=",
                       equality ? lhs == rhs : lhs <= rhs};
    rep.records.push_back(std::move(r));
  };

  std::vector<int> betti_v;
  if (data.de_rham) {
    betti_v = data.de_rham->betti;
    std::vector<long long> b(betti_v.begin(), betti_v.end());
    std::vector<long long> r(data.de_rham->psi_ranks.begin(), data.de_rham->psi_ranks.end());
    rep.betti = MorsePolynomial(0, b);
    rep.r = MorsePolynomial(0, r);
    rep.b_psi = bpsi_from_de_rham(data.de_rham->betti, data.de_rham->psi_ranks, ell);
    rep.b_psi_source = "de_rham";
  } else {
    for (int k = 0; k <= dim; ++k) betti_v.push_back(static_cast<int>(morse_h.dim(k)));
    rep.b_psi = rep.cone_dims;
    rep.b_psi_source = "cone_morse_complex";
  }
  auto b = [&](int k) { return at(betti_v, k); };
  auto bpsi = [&](int k) { return rep.b_psi.coefficient(k); };
  auto weak_rhs = [&](int k) { return m(k) - v(k - ell) + m(k - ell + 1) - v(k - ell + 1); };

  rep.perfect = true;
  for (int k = 0; k <= dim; ++k) rep.perfect = rep.perfect && m(k) == b(k);

  for (int k = rep.k_lo; k <= rep.k_hi; ++k) add("weak_cone_morse", k, bpsi(k), weak_rhs(k), false);
  for (int j = rep.k_lo; j <= rep.k_hi; ++j) {
    long long lhs = 0, rhs = 0;
    for (int k = rep.k_lo; k <= j; ++k) {
      const long long sign = ((j - k) % 2 == 0) ? 1 : -1;
      lhs += sign * bpsi(k);
      rhs += sign * weak_rhs(k);
    }
    add("strong_cone_morse", j, lhs, rhs, false);
    if (rep.perfect) add("perfect_strong_equality", j, lhs, rhs, true);
  }
  if (rep.perfect) {
    for (int k = rep.k_lo; k <= rep.k_hi; ++k) add("perfect_weak_equality", k, bpsi(k), weak_rhs(k), true);
  }

  if (data.de_rham) {
    auto r = [&](int k) { return rep.r->coefficient(k); };
    for (int k = 0; k <= dim; ++k) {
      add("morse_cohomology_matches_betti", k, static_cast<long long>(morse_h.dim(k)), b(k), true);
    }
    for (int k = rep.k_lo; k <= rep.k_hi; ++k) {
      add("cone_dimension_match", k, rep.cone_dims.coefficient(k), bpsi(k), true);
    }
    for (int k = 0; k <= dim; ++k) {
      add("rank_bound_r_le_v", k, r(k), v(k), false);
      const RealMatrix induced = chain::induced_on_cohomology(map, k, copts);
      const std::size_t ir =
          induced.empty() ? 0 : linalg::rank(induced, copts.tolerance_for(induced)).rank;
      add("induced_rank_equals_r", k, static_cast<long long>(ir), r(k), true);
    }
    for (int k = rep.k_lo; k <= rep.k_hi; ++k) {
      add("betti_sandwich_lower", k, b(k) - v(k - ell) + b(k - ell + 1) - v(k - ell + 1), bpsi(k),
          false);
      add("betti_sandwich_upper", k, bpsi(k), m(k) - r(k - ell) + m(k - ell + 1) - r(k - ell + 1),
          false);
    }
    auto defect_lhs = [&](int k) { return (v(k - ell) - r(k - ell)) + (v(k - ell + 1) - r(k - ell + 1)); };
    auto defect_rhs = [&](int k) { return (m(k) - b(k)) + (m(k - ell + 1) - b(k - ell + 1)); };
    for (int k = rep.k_lo; k <= rep.k_hi; ++k) {
      add("rank_defect_bound", k, defect_lhs(k), defect_rhs(k), false);
    }
    for (int j = rep.k_lo; j <= rep.k_hi; ++j) {
      long long lhs = 0, rhs = 0;
      for (int k = rep.k_lo; k <= j; ++k) {
        const long long sign = ((j - k) % 2 == 0) ? 1 : -1;
        lhs += sign * defect_lhs(k);
        rhs += sign * defect_rhs(k);
      }
      add("rank_defect_bound_alternating", j, lhs, rhs, false);
    }
    if (rep.perfect) {
      for (int k = 0; k <= dim; ++k) add("perfect_rank_equality", k, v(k), r(k), true);
    }
    if (ell == 2) {
      for (int k = 0; k < dim; ++k) {
        add("two_form_rank_gap_lower", k, 0, v(k) - r(k), false);
        add("two_form_rank_gap_upper", k, v(k) - r(k), m(k + 1) - b(k + 1), false);
      }
      if (rep.r->is_zero()) {
        for (int k = 1; k <= dim; ++k) {
          add("exact_two_form_betti_bound", k, b(k), m(k) - v(k - 1), false);
        }
      }
    }
  }

  rep.q = chain::q_polynomial(rep.m, rep.v, rep.b_psi, ell);
  return rep;
}

void require_consistent(const ConeMorseReport& report) {
  for (const auto& r : report.records) {
    if (!r.holds) {
      throw Error(ErrorCode::kInequalityViolated,
                  r.check + " at degree " + std::to_string(r.degree) + ": " +
                      std::to_string(r.lhs) + " " + r.relation + " " + std::to_string(r.rhs));
    }
  }
  if (!report.q.q) {
    throw Error(ErrorCode::kInequalityViolated, "no Q(t) certificate: " + report.q.detail);
  }
}

MorseData generate_dataset(std::uint64_t seed, int max_dimension, int max_points, int ell,
                           bool perfect) {
  if (max_dimension < 0 || max_points < 0 || ell < 0) {
    throw Error(ErrorCode::kInvalidArgument, "generator bounds must be non-negative");
  }
  Rng rng(seed);
  const int dim = rng.uniform_int(std::min(ell, max_dimension), max_dimension);
  std::vector<std::size_t> dims;
  for (int k = 0; k <= dim; ++k) dims.push_back(static_cast<std::size_t>(rng.uniform_int(0, max_points)));

  const CochainComplex complex = perfect
                                     ? CochainComplex::with_zero_differential(GradedVectorSpace(0, dims))
                                     : chain::random_integer_complex(rng, 0, dims);
  const CochainComplex source = (ell % 2 != 0) ? complex.negated() : complex;
  auto phi = chain::sample_commuting_map(source, complex, ell, rng);
  ChainMap cpsi = phi ? *phi : ChainMap(complex.space(), complex.space(), ell);

  MorseData data;
  data.dimension = dim;
  data.psi_degree = ell;
  data.psi_closed = true;
  auto id = [](int k, std::size_t i) { return "q" + std::to_string(k) + "_" + std::to_string(i); };
  for (int k = 0; k <= dim; ++k)
    for (std::size_t i = 0; i < dims[static_cast<std::size_t>(k)]; ++i)
      data.critical_points.push_back({id(k, i), k});
  for (int k = 0; k < dim; ++k) {
    const RealMatrix d = complex.d(k);
    for (std::size_t r = 0; r < d.rows(); ++r)
      for (std::size_t c = 0; c < d.cols(); ++c)
        if (d(r, c) != 0.0) {
          data.flow_counts.push_back({id(k + 1, r), id(k, c), std::llround(d(r, c))});
        }
  }
  for (int k = 0; k + ell <= dim; ++k) {
    const RealMatrix b = cpsi.block(k);
    for (std::size_t r = 0; r < b.rows(); ++r)
      for (std::size_t c = 0; c < b.cols(); ++c)
        if (b(r, c) != 0.0) data.psi_integrals.push_back({id(k + ell, r), id(k, c), b(r, c)});
  }

  const ComplexMap map(complex, complex, cpsi, Commutation::kGraded);
  const GradedVectorSpace h = chain::cohomology_dims(complex);
  DeRhamData dr;
  for (int k = 0; k <= dim; ++k) {
    dr.betti.push_back(static_cast<int>(h.dim(k)));
    const RealMatrix induced = chain::induced_on_cohomology(map, k);
    dr.psi_ranks.push_back(
        induced.empty() ? 0 : static_cast<int>(linalg::rank(induced, chain::ChainOptions{}.tolerance_for(induced)).rank));
  }
  data.de_rham = std::move(dr);
  return data;
}

}  // namespace conemorse::morse
