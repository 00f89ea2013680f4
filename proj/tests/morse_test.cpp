#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "conemorse/error.hpp"
#include "conemorse/morse.hpp"

using conemorse::Error;
using conemorse::ErrorCode;
using namespace conemorse::morse;
using conemorse::linalg::RealMatrix;

namespace {

constexpr double kPi = std::numbers::pi;

// x^2 + 2y^2 + 3z^2 on the round sphere with a degree-2 form given by its
// four integrals over the quarter spheres, indexed [max][min].
MorseData sphere_data(const double c[2][2], std::vector<int> psi_ranks) {
  MorseData d;
  d.dimension = 2;
  d.psi_degree = 2;
  d.critical_points = {{"p0+", 0}, {"p0-", 0}, {"p1+", 1}, {"p1-", 1}, {"p2+", 2}, {"p2-", 2}};
  d.flow_counts = {{"p1+", "p0+", -1}, {"p1+", "p0-", 1}, {"p1-", "p0+", -1}, {"p1-", "p0-", 1},
                   {"p2+", "p1+", 1},  {"p2+", "p1-", -1}, {"p2-", "p1+", -1}, {"p2-", "p1-", 1}};
  const char* maxima[2] = {"p2+", "p2-"};
  const char* minima[2] = {"p0+", "p0-"};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) d.psi_integrals.push_back({maxima[i], minima[j], c[i][j]});
  d.de_rham = DeRhamData{{1, 0, 1}, std::move(psi_ranks)};
  return d;
}

MorseData sphere_s(double s) {
  const double c[2][2] = {{kPi * s, kPi * s}, {kPi * s, kPi * s}};
  return sphere_data(c, {s != 0.0 ? 1 : 0});
}

MorseData sphere_t(double t) {
  const double c[2][2] = {{kPi * (1 + t), kPi}, {kPi, kPi * (1 - t)}};
  return sphere_data(c, {1});
}

MorseData height_function(double total) {
  MorseData d;
  d.dimension = 2;
  d.psi_degree = 2;
  d.critical_points = {{"p0", 0}, {"p2", 2}};
  d.psi_integrals = {{"p2", "p0", total}};
  d.de_rham = DeRhamData{{1, 0, 1}, {total != 0.0 ? 1 : 0}};
  return d;
}

const InequalityRecord* find(const ConeMorseReport& r, const std::string& check, int degree) {
  for (const auto& rec : r.records)
    if (rec.check == check && rec.degree == degree) return &rec;
  return nullptr;
}

}  // namespace

TEST(AssembleBoundary, SphereRanks) {
  const auto d = assemble_boundary(sphere_s(0.5));
  EXPECT_TRUE(d.integral());
  EXPECT_EQ(conemorse::linalg::rank(d.block(0)).rank, 1u);
  EXPECT_EQ(conemorse::linalg::rank(d.block(1)).rank, 1u);
  EXPECT_EQ(d.block(0), RealMatrix::from_rows({{-1, 1}, {-1, 1}}));
}

TEST(AssembleBoundary, HeightFunctionIsZero) {
  EXPECT_EQ(assemble_boundary(height_function(1.0)).max_abs(), 0.0);
}

TEST(AssembleBoundary, RejectsNonSquareZero) {
  auto d = sphere_s(0.5);
  d.flow_counts[0].n = 1;
  try {
    assemble_boundary(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBoundaryNotSquareZero);
  }
}

TEST(Validate, SchemaErrors) {
  auto d = sphere_s(0.5);
  d.flow_counts.push_back({"p2+", "p0+", 1});
  EXPECT_THROW(validate(d), Error);
  d = sphere_s(0.5);
  d.critical_points.push_back({"p0+", 0});
  EXPECT_THROW(validate(d), Error);
  d = sphere_s(0.5);
  d.psi_integrals.push_back({"p1+", "p0+", 1.0});
  EXPECT_THROW(validate(d), Error);
  d = sphere_s(0.5);
  d.de_rham->psi_ranks = {2};
  try {
    validate(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidRanks);
  }
}

TEST(AssembleCpsi, Families) {
  EXPECT_EQ(assemble_cpsi(sphere_s(0.0)).max_abs(), 0.0);
  const auto cs = assemble_cpsi(sphere_s(0.3)).block(0);
  for (double x : cs.entries()) EXPECT_DOUBLE_EQ(x, kPi * 0.3);
  const auto ct = assemble_cpsi(sphere_t(0.2)).block(0);
  EXPECT_DOUBLE_EQ(ct(0, 0), kPi * 1.2);
  EXPECT_DOUBLE_EQ(ct(1, 1), kPi * 0.8);
  EXPECT_DOUBLE_EQ(ct(0, 1), kPi);
}

TEST(AssembleCpsi, LeibnizViolation) {
  MorseData d = sphere_s(0.0);
  d.psi_degree = 1;
  d.psi_integrals = {{"p1+", "p0+", 1.0}};
  d.de_rham.reset();
  try {
    assemble_cpsi(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLeibnizViolation);
  }
  d.psi_closed = false;
  EXPECT_NO_THROW(assemble_cpsi(d));
}

TEST(ConeMorseComplex, SphereDims) {
  EXPECT_EQ(conemorse::chain::cohomology_dims(cone_morse_complex(sphere_s(0.5))),
            GradedVectorSpace(0, {1, 0, 0, 1}));
  EXPECT_EQ(conemorse::chain::cohomology_dims(cone_morse_complex(sphere_s(0.0))),
            GradedVectorSpace(0, {1, 1, 1, 1}));
}

TEST(LeibnizResidual, ClosedFormVanishes) {
  const auto data = sphere_t(0.3);
  EXPECT_LE(leibniz_residual(assemble_boundary(data), assemble_cpsi(data), 2), 1e-10);
}

TEST(LeibnizResidual, FunctionCase) {
  // l = 0: c(h) is diagonal with h(q); c(dh)_{rq} = n(r,q) (h(r) - h(q)).
  const auto data = sphere_s(0.0);
  const auto d = assemble_boundary(data);
  const auto& space = d.source();
  const double h[3][2] = {{0.3, -0.7}, {1.1, 0.4}, {-0.2, 2.5}};
  conemorse::chain::ChainMap ch(space, space, 0), cdh(space, space, 1);
  for (int k = 0; k <= 2; ++k) {
    RealMatrix m(2, 2);
    m(0, 0) = h[k][0];
    m(1, 1) = h[k][1];
    ch.set_block(k, m);
  }
  for (int k = 0; k < 2; ++k) {
    const RealMatrix n = d.block(k);
    RealMatrix m(2, 2);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t q = 0; q < 2; ++q) m(r, q) = n(r, q) * (h[k + 1][r] - h[k][q]);
    cdh.set_block(k, m);
  }
  EXPECT_LE(leibniz_residual(d, ch, cdh, 0), 1e-14);
  EXPECT_GT(leibniz_residual(d, ch, cdh.scaled(-1.0), 0), 0.1);
}

TEST(BpsiFromDeRham, Sphere) {
  EXPECT_EQ(bpsi_from_de_rham({1, 0, 1}, {1}, 2), MorsePolynomial(0, {1, 0, 0, 1}));
  EXPECT_EQ(bpsi_from_de_rham({1, 0, 1}, {0}, 2), MorsePolynomial(0, {1, 1, 1, 1}));
  // Zero ranks: b_k + b_{k-l+1}.
  EXPECT_EQ(bpsi_from_de_rham({1, 2, 1}, {}, 1), MorsePolynomial(0, {2, 4, 2}));
  EXPECT_THROW(bpsi_from_de_rham({1, 0, 1}, {0, 1}, 2), Error);
}

TEST(InequalityReport, FamilyT) {
  const auto r = inequality_report(sphere_t(0.2));
  EXPECT_EQ(r.v.coefficient(0), 2);
  EXPECT_EQ(find(r, "weak_cone_morse", 1)->rhs, 2);
  EXPECT_EQ(find(r, "weak_cone_morse", 2)->rhs, 2);
  EXPECT_TRUE(r.all_hold());
  const auto r0 = inequality_report(sphere_t(0.0));
  EXPECT_EQ(r0.v.coefficient(0), 1);
  EXPECT_EQ(find(r0, "weak_cone_morse", 1)->rhs, 3);
}

TEST(InequalityReport, FamilySBounds) {
  const auto r = inequality_report(sphere_s(0.0));
  EXPECT_EQ(r.v.coefficient(0), 0);
  EXPECT_EQ(r.b_psi, MorsePolynomial(0, {1, 1, 1, 1}));
  for (int k = 0; k <= 3; ++k) {
    const long long expected[4] = {2, 4, 4, 2};
    EXPECT_EQ(find(r, "weak_cone_morse", k)->rhs, expected[k]);
  }
  const auto rs = inequality_report(sphere_s(0.5));
  ASSERT_TRUE(rs.q.q.has_value());
  EXPECT_EQ(*rs.q.q, MorsePolynomial(0, {1, 2, 1}));
  EXPECT_EQ(find(rs, "weak_cone_morse", 1)->rhs, 3);
}

TEST(InequalityReport, PerfectHeightFunction) {
  const auto r = inequality_report(height_function(4 * kPi));
  EXPECT_TRUE(r.perfect);
  EXPECT_EQ(r.v.coefficient(0), 1);
  EXPECT_EQ(r.r->coefficient(0), 1);
  for (const auto& rec : r.records) {
    if (rec.check == "weak_cone_morse" || rec.check == "strong_cone_morse") {
      EXPECT_EQ(rec.slack(), 0) << rec.check << " " << rec.degree;
    }
  }
  EXPECT_TRUE(r.all_hold());
  ASSERT_TRUE(r.q.q.has_value());
  EXPECT_TRUE(r.q.q->is_zero());
}

TEST(InequalityReport, ExactFormBettiBound) {
  const double c[2][2] = {{1.0, -2.0}, {3.0, -2.0}};
  const auto r = inequality_report(sphere_data(c, {0}));
  EXPECT_EQ(r.v.coefficient(0), 2);
  const auto* rec = find(r, "exact_two_form_betti_bound", 1);
  ASSERT_NE(rec, nullptr);
  EXPECT_EQ(rec->lhs, 0);
  EXPECT_EQ(rec->rhs, 0);
  EXPECT_TRUE(r.all_hold());
}

TEST(InequalityReport, WrongDeRhamDataIsReported) {
  auto d = sphere_s(0.5);
  d.de_rham->psi_ranks = {0};
  const auto r = inequality_report(d);
  EXPECT_FALSE(r.all_hold());
  try {
    require_consistent(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInequalityViolated);
  }
}

TEST(InequalityReport, EmptyManifold) {
  MorseData d;
  d.dimension = 0;
  d.psi_degree = 1;
  const auto r = inequality_report(d);
  EXPECT_TRUE(r.m.is_zero());
  EXPECT_TRUE(r.all_hold());
}

TEST(Linearity, CpsiIsLinearInPsi) {
  const auto a = assemble_cpsi(sphere_s(0.2));
  const auto b = assemble_cpsi(sphere_t(0.1));
  const double ca[2][2] = {{kPi * 0.2 * 3 + kPi * 1.1, kPi * 0.2 * 3 + kPi},
                           {kPi * 0.2 * 3 + kPi, kPi * 0.2 * 3 + kPi * 0.9}};
  const auto combined = assemble_cpsi(sphere_data(ca, {1}));
  EXPECT_LE(conemorse::chain::max_abs_diff(combined, a.scaled(3.0) + b), 1e-12);
}

class GeneratedData : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(GeneratedData, InequalitiesHold) {
  const std::uint64_t seed = GetParam();
  const int ell = static_cast<int>(seed % 4);
  const auto data = generate_dataset(seed, 4, 4, ell, false);
  const auto r = inequality_report(data);
  EXPECT_TRUE(r.all_hold()) << "seed " << seed;
  // Cone Morse cohomology agrees with the de Rham count.
  EXPECT_EQ(r.cone_dims, r.b_psi) << "seed " << seed;
}

TEST_P(GeneratedData, PerfectDataHasZeroSlack) {
  const std::uint64_t seed = GetParam();
  const auto data = generate_dataset(seed + 500, 4, 3, static_cast<int>(seed % 4), true);
  const auto r = inequality_report(data);
  EXPECT_TRUE(r.perfect);
  EXPECT_TRUE(r.all_hold()) << "seed " << seed;
  for (const auto& rec : r.records) {
    if (rec.check == "weak_cone_morse" || rec.check == "strong_cone_morse") {
      EXPECT_EQ(rec.slack(), 0) << rec.check << " " << rec.degree << " seed " << seed;
    }
  }
  ASSERT_TRUE(r.q.q.has_value());
  EXPECT_TRUE(r.q.q->is_zero());
}

INSTANTIATE_TEST_SUITE_P(Seeds, GeneratedData, ::testing::Range<std::uint64_t>(0, 60));
