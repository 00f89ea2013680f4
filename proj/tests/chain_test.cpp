#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "conemorse/chain.hpp"
#include "conemorse/error.hpp"

using conemorse::Error;
using conemorse::ErrorCode;
using conemorse::Rng;
using namespace conemorse::chain;

namespace {

constexpr double kPi = std::numbers::pi;

RealMatrix integral(RealMatrix m) {
  m.mark_integral();
  return m;
}

// Morse complex of x^2 + 2y^2 + 3z^2 on the round sphere, two points per index.
CochainComplex sphere_morse_complex() {
  GradedVectorSpace space(0, {2, 2, 2});
  ChainMap d(space, space, 1);
  d.set_block(0, integral(RealMatrix::from_rows({{-1, 1}, {-1, 1}})));
  d.set_block(1, integral(RealMatrix::from_rows({{1, -1}, {-1, 1}})));
  return CochainComplex(space, d);
}

ComplexMap sphere_psi_map(const RealMatrix& block0) {
  const auto c = sphere_morse_complex();
  ChainMap phi(c.space(), c.space(), 2);
  phi.set_block(0, block0);
  return ComplexMap(c, c, phi, Commutation::kGraded);
}

RealMatrix psi_s(double s) { return kPi * s * RealMatrix::from_rows({{1, 1}, {1, 1}}); }

RealMatrix psi_t(double t) {
  return kPi * RealMatrix::from_rows({{1 + t, 1}, {1, 1 - t}});
}

CochainComplex two_term_identity() {
  GradedVectorSpace space(0, {1, 1});
  ChainMap d(space, space, 1);
  d.set_block(0, RealMatrix::identity(1));
  return CochainComplex(space, d);
}

}  // namespace

TEST(GradedVectorSpace, TrimsZeroEnds) {
  const GradedVectorSpace v(-2, {0, 3, 0, 1, 0});
  EXPECT_EQ(v.min_degree(), -1);
  EXPECT_EQ(v.max_degree(), 1);
  EXPECT_EQ(v.dim(-5), 0u);
  EXPECT_EQ(v.dim(1), 1u);
  EXPECT_EQ(v.euler_characteristic(), -3 - 1);
  EXPECT_EQ(v, GradedVectorSpace(-1, {3, 0, 1}));
}

TEST(ChainMap, ShapeChecked) {
  GradedVectorSpace s(0, {2, 1});
  ChainMap m(s, s, 1);
  EXPECT_THROW(m.set_block(0, RealMatrix(2, 2)), Error);
  EXPECT_NO_THROW(m.set_block(0, RealMatrix(1, 2)));
}

TEST(CochainComplex, RejectsNonSquareZero) {
  GradedVectorSpace s(0, {1, 1, 1});
  ChainMap d(s, s, 1);
  d.set_block(0, integral(RealMatrix::from_rows({{1}})));
  d.set_block(1, integral(RealMatrix::from_rows({{1}})));
  try {
    CochainComplex c(s, d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBoundaryNotSquareZero);
  }
}

TEST(CohomologyDims, AcyclicAndZeroDifferential) {
  EXPECT_TRUE(cohomology_dims(two_term_identity()).is_zero());
  const GradedVectorSpace s(1, {2, 0, 3});
  EXPECT_EQ(cohomology_dims(CochainComplex::with_zero_differential(s)), s);
}

TEST(CohomologyDims, SphereMorseComplex) {
  EXPECT_EQ(cohomology_dims(sphere_morse_complex()), GradedVectorSpace(0, {1, 0, 1}));
}

TEST(Cone, ZeroMapSplits) {
  const auto c = sphere_morse_complex();
  const ComplexMap map(c, c, ChainMap(c.space(), c.space(), 2));
  EXPECT_EQ(cohomology_dims(cone(map)), GradedVectorSpace(0, {1, 1, 1, 1}));
}

TEST(Cone, IdentityIsAcyclic) {
  const auto c = sphere_morse_complex();
  ChainMap id(c.space(), c.space(), 0);
  for (int n = 0; n <= 2; ++n) id.set_block(n, RealMatrix::identity(2));
  const ComplexMap map(c, c, id);
  EXPECT_TRUE(cohomology_dims(cone(map)).is_zero());
}

TEST(Cone, SphereClassJump) {
  EXPECT_EQ(cohomology_dims(cone(sphere_psi_map(psi_s(0.5)))), GradedVectorSpace(0, {1, 0, 0, 1}));
  EXPECT_EQ(cohomology_dims(cone(sphere_psi_map(psi_s(0.0)))), GradedVectorSpace(0, {1, 1, 1, 1}));
}

TEST(Cone, DifferentialIsIntegralForIntegralData) {
  const auto c = sphere_morse_complex();
  const ComplexMap map(c, c, ChainMap(c.space(), c.space(), 1), Commutation::kGraded);
  const auto k = cone(map);
  EXPECT_TRUE(k.differential().integral());
}

TEST(ComplexMap, RejectsNonCommutingMap) {
  const auto c = sphere_morse_complex();
  ChainMap phi(c.space(), c.space(), 0);
  phi.set_block(0, RealMatrix::from_rows({{1, 0}, {0, 0}}));
  try {
    ComplexMap map(c, c, phi);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotAChainMap);
  }
}

TEST(ComplexMap, GradedOddMapNegatesSource) {
  const auto c = sphere_morse_complex();
  // Odd degree: the source differential is stored negated.
  const ComplexMap map(c, c, ChainMap(c.space(), c.space(), 1), Commutation::kGraded);
  EXPECT_EQ(map.source().d(0)(0, 0), 1.0);
  EXPECT_EQ(map.target().d(0)(0, 0), -1.0);
}

TEST(KernelComplex, Examples) {
  const auto c = sphere_morse_complex();
  const ComplexMap zero(c, c, ChainMap(c.space(), c.space(), 2));
  EXPECT_EQ(kernel_complex(zero).complex.space(), c.space());

  const auto k = kernel_complex(sphere_psi_map(psi_s(0.3)));
  EXPECT_EQ(k.complex.space().dim(0), 1u);
  const auto& v = k.basis.at(0);
  EXPECT_NEAR(v(0, 0), -v(1, 0), 1e-14);

  ChainMap id(c.space(), c.space(), 0);
  for (int n = 0; n <= 2; ++n) id.set_block(n, RealMatrix::identity(2));
  EXPECT_TRUE(kernel_complex(ComplexMap(c, c, id)).complex.space().is_zero());
}

TEST(CokernelComplex, Examples) {
  const auto c = sphere_morse_complex();
  const ComplexMap zero(c, c, ChainMap(c.space(), c.space(), 2));
  EXPECT_EQ(cokernel_complex(zero).complex.space(), c.space());
  EXPECT_EQ(cokernel_complex(sphere_psi_map(psi_t(0.2))).complex.space().dim(2), 0u);

  ChainMap id(c.space(), c.space(), 0);
  for (int n = 0; n <= 2; ++n) id.set_block(n, RealMatrix::identity(2));
  EXPECT_TRUE(cokernel_complex(ComplexMap(c, c, id)).complex.space().is_zero());
}

TEST(ImageComplex, Examples) {
  const auto c = sphere_morse_complex();
  const ComplexMap zero(c, c, ChainMap(c.space(), c.space(), 2));
  EXPECT_TRUE(image_complex(zero).complex.space().is_zero());
  EXPECT_EQ(image_complex(sphere_psi_map(psi_s(0.3))).complex.space(),
            GradedVectorSpace(2, {1}));
  ChainMap id(c.space(), c.space(), 0);
  for (int n = 0; n <= 2; ++n) id.set_block(n, RealMatrix::identity(2));
  EXPECT_EQ(image_complex(ComplexMap(c, c, id)).complex.space(), c.space());
}

TEST(SplittingCheck, SphereAndZero) {
  const auto with_class = splitting_check(sphere_psi_map(psi_s(0.5)));
  EXPECT_TRUE(with_class.holds);
  for (const auto& d : with_class.degrees) {
    if (d.degree == 0 || d.degree == 3) EXPECT_EQ(d.lhs, 1u);
    if (d.degree == 1 || d.degree == 2) EXPECT_EQ(d.lhs, 0u);
  }
  EXPECT_TRUE(splitting_check(sphere_psi_map(psi_s(0.0))).holds);
}

TEST(LesExactness, SphereFamilies) {
  EXPECT_TRUE(les_exactness_check(sphere_psi_map(psi_s(0.5))).holds);
  EXPECT_TRUE(les_exactness_check(sphere_psi_map(psi_s(0.0))).holds);
  EXPECT_TRUE(les_exactness_check(sphere_psi_map(psi_t(0.2))).holds);
}

TEST(LesExactness, IdentityHasNoCohomology) {
  const auto c = two_term_identity();
  ChainMap id(c.space(), c.space(), 0);
  for (int n = 0; n <= 1; ++n) id.set_block(n, RealMatrix::identity(1));
  const auto report = les_exactness_check(ComplexMap(c, c, id));
  EXPECT_TRUE(report.holds);
  for (const auto& n : report.nodes) EXPECT_EQ(n.dim, 0u);
}

TEST(CokernelConeIso, TrivialCases) {
  const auto c = sphere_morse_complex();
  EXPECT_TRUE(cokernel_cone_iso_check(ComplexMap(c, c, ChainMap(c.space(), c.space(), 2))).holds);
  ChainMap id(c.space(), c.space(), 0);
  for (int n = 0; n <= 2; ++n) id.set_block(n, RealMatrix::identity(2));
  EXPECT_TRUE(cokernel_cone_iso_check(ComplexMap(c, c, id)).holds);
}

TEST(RandomCommutingMap, ReproducibleAndExact) {
  const auto a = random_commuting_map(5, 6, 5, 2);
  const auto b = random_commuting_map(5, 6, 5, 2);
  EXPECT_EQ(max_abs_diff(a.map.phi(), b.map.phi()), 0.0);
  EXPECT_TRUE(a.map.source().differential().integral());
  EXPECT_TRUE(a.map.target().differential().integral());
  EXPECT_LE(a.map.commutation_residual(), 1e-10);
}

TEST(MorsePolynomialTest, Arithmetic) {
  const MorsePolynomial p(0, {1, 2, 1});
  EXPECT_EQ(p.shifted(-1).min_degree(), -1);
  EXPECT_TRUE((p - p).is_zero());
  EXPECT_EQ(p.to_string(), "1 + 2t + t^2");
  EXPECT_EQ(MorsePolynomial(-1, {-1, 0, 3}).to_string(), "-t^-1 + 3t");
}

TEST(QPolynomial, SphereWithClass) {
  const MorsePolynomial m(0, {2, 2, 2});
  const MorsePolynomial v(0, {1});
  const MorsePolynomial b(0, {1, 0, 0, 1});
  const auto cert = q_polynomial(m, v, b, 2);
  ASSERT_TRUE(cert.q.has_value());
  EXPECT_EQ(*cert.q, MorsePolynomial(0, {1, 2, 1}));
}

TEST(QPolynomial, PerfectDataGivesZero) {
  const MorsePolynomial m(0, {1, 0, 1});
  const MorsePolynomial v(0, {1});
  const MorsePolynomial b(0, {1, 0, 0, 1});
  const auto cert = q_polynomial(m, v, b, 2);
  ASSERT_TRUE(cert.q.has_value());
  EXPECT_TRUE(cert.q->is_zero());
}

TEST(QPolynomial, InflatedBettiFails) {
  const MorsePolynomial m(0, {2, 2, 2});
  const MorsePolynomial v(0, {1});
  const auto inexact = q_polynomial(m, v, MorsePolynomial(0, {1, 1, 0, 1}), 2);
  EXPECT_FALSE(inexact.q.has_value());
  EXPECT_EQ(inexact.failure, ErrorCode::kInexactDivision);
  // Inflating two adjacent degrees keeps divisibility but forces a negative coefficient.
  const auto negative = q_polynomial(MorsePolynomial(0, {1, 0, 1}), v,
                                     MorsePolynomial(0, {2, 1, 0, 1}), 2);
  EXPECT_FALSE(negative.q.has_value());
  EXPECT_EQ(negative.failure, ErrorCode::kNegativeCoefficient);
}

// Property suite over seeded random commuting maps.
class RandomMaps : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(RandomMaps, SplittingExactnessAndIso) {
  const std::uint64_t seed = GetParam();
  const int ell = static_cast<int>(seed % 4);
  const auto r = random_commuting_map(conemorse::mix_seed(99, seed), 6, 5, ell);
  EXPECT_TRUE(splitting_check(r.map).holds) << "seed " << seed;
  EXPECT_TRUE(les_exactness_check(r.map).holds) << "seed " << seed;
  EXPECT_TRUE(cokernel_cone_iso_check(r.map).holds) << "seed " << seed;
}

TEST_P(RandomMaps, ConeEulerCharacteristic) {
  const std::uint64_t seed = GetParam();
  const auto r = random_commuting_map(conemorse::mix_seed(7, seed), 6, 5, static_cast<int>(seed % 4));
  const auto c = cone(r.map);
  EXPECT_EQ(c.space().euler_characteristic(), cohomology_dims(c).euler_characteristic());
}

TEST_P(RandomMaps, ZeroMapConeIsDirectSum) {
  const std::uint64_t seed = GetParam();
  const int ell = static_cast<int>(seed % 4);
  const auto r = random_commuting_map(conemorse::mix_seed(3, seed), 6, 5, ell);
  const auto& a = r.map.target();
  const auto& b = r.map.source();
  const ComplexMap zero(b, a, ChainMap(b.space(), a.space(), ell));
  const auto hc = cohomology_dims(cone(zero));
  const auto ha = cohomology_dims(a);
  const auto hb = cohomology_dims(b);
  for (int n = -10; n <= 10; ++n) EXPECT_EQ(hc.dim(n), ha.dim(n) + hb.dim(n - ell + 1));
}

TEST_P(RandomMaps, DifferentialsSquareToZeroExactly) {
  Rng rng(GetParam());
  std::vector<std::size_t> dims;
  for (int i = 0; i < 6; ++i) dims.push_back(static_cast<std::size_t>(rng.uniform_int(0, 5)));
  const auto c = random_integer_complex(rng, -2, dims);
  for (int n = -3; n <= 4; ++n) {
    const auto dd = conemorse::linalg::compose(c.d(n + 1), c.d(n));
    EXPECT_EQ(dd.max_abs(), 0.0);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomMaps, ::testing::Range<std::uint64_t>(0, 100));
