#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lrdlab/exponents.hpp"

using namespace lrd;

TEST(DeriveExponents, SymmetricCase) {
  const auto e = derive_exponents(1.5, 1.5);
  EXPECT_NEAR(e.Q, 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(e.p1, 1.0, 1e-14);
  EXPECT_NEAR(e.p2, 1.0, 1e-14);
  EXPECT_NEAR(e.P, 2.0, 1e-14);
  EXPECT_NEAR(e.gamma0, 1.0, 1e-14);
}

TEST(DeriveExponents, HeatLikeCase) {
  const auto e = derive_exponents(0.9, 1.8);
  EXPECT_NEAR(e.Q, 5.0 / 3.0, 1e-14);
  EXPECT_NEAR(e.p1, 0.3, 1e-14);
  EXPECT_NEAR(e.p2, 0.6, 1e-14);
  EXPECT_NEAR(e.P, 5.0, 1e-12);
  EXPECT_NEAR(e.gamma0, 0.5, 1e-14);
}

TEST(DeriveExponents, RejectsOutsideRange) {
  EXPECT_THROW(derive_exponents(1.0, 1.0), DomainError);
  EXPECT_THROW(derive_exponents(3.0, 3.0), DomainError);
  EXPECT_THROW(derive_exponents(-1.0, 1.5), DomainError);
  EXPECT_THROW(SubordinationOrder(0), DomainError);
}

TEST(ClassifyRegime, Examples) {
  const auto e = derive_exponents(0.9, 1.8);
  EXPECT_EQ(classify_regime(e, SubordinationOrder(1), 1.0).tag, RegimeTag::UnbalancedPlusSlide);
  EXPECT_EQ(classify_regime(e, SubordinationOrder(2), 1.0).tag, RegimeTag::UnbalancedPlusFBS);
  EXPECT_EQ(classify_regime(e, SubordinationOrder(1), 0.5).tag, RegimeTag::WellBalanced);
  EXPECT_EQ(classify_regime(e, SubordinationOrder(1), 0.25).tag, RegimeTag::UnbalancedMinusSlide);
  const auto e2 = derive_exponents(1.6, 1.6);
  EXPECT_EQ(classify_regime(e2, SubordinationOrder(2), 0.7).tag, RegimeTag::ShortRangeCLT);
  EXPECT_THROW(classify_regime(e, SubordinationOrder(1), 0.0), DomainError);
}

TEST(ClassifyRegime, MinusFBS) {
  // p1 = 0.3: k = 4 gives k p1 = 1.2 > 1 with k < P = 5
  const auto e = derive_exponents(0.9, 1.8);
  const auto r = classify_regime(e, SubordinationOrder(4), 0.3);
  EXPECT_EQ(r.tag, RegimeTag::UnbalancedMinusFBS);
  ASSERT_TRUE(r.hurst_pair.has_value());
  EXPECT_DOUBLE_EQ(r.hurst_pair->H1, 0.5);
}

TEST(ClassifyRegime, BoundaryCases) {
  // k = P exactly: (q1, q2) with P = 2
  const auto e = derive_exponents(1.5, 1.5);
  EXPECT_EQ(classify_regime(e, SubordinationOrder(2), 0.5).tag, RegimeTag::Boundary);
  EXPECT_THROW(theoretical_H(e, SubordinationOrder(2), 0.5), BoundaryError);
  // k p2 = 1 on the gamma > gamma0 side
  const auto [q1, q2] = q_from_p(0.25, 0.5);
  const auto e2 = derive_exponents(q1, q2);
  EXPECT_EQ(classify_regime(e2, SubordinationOrder(2), 1.0).tag, RegimeTag::Boundary);
  EXPECT_NE(classify_regime(e2, SubordinationOrder(2), 0.3).tag, RegimeTag::Boundary);
}

TEST(TheoreticalH, Examples) {
  const auto e = derive_exponents(0.9, 1.8);
  EXPECT_NEAR(theoretical_H(e, SubordinationOrder(1), 0.5), 1.35, 1e-12);
  EXPECT_NEAR(theoretical_H(e, SubordinationOrder(1), 1.0), 1.70, 1e-12);
  EXPECT_NEAR(theoretical_H(e, SubordinationOrder(1), 0.25), 1.10, 1e-12);
  EXPECT_NEAR(theoretical_H(e, SubordinationOrder(2), 1.0), 1.45, 1e-12);
  EXPECT_NEAR(theoretical_H(derive_exponents(1.6, 1.6), SubordinationOrder(2), 2.0), 1.5, 1e-12);
}

TEST(HurstPair, Examples) {
  const auto e = derive_exponents(0.9, 1.8);
  auto hp = hurst_pair(e, SubordinationOrder(1), 1.0);
  EXPECT_NEAR(hp.H1, 1.0, 1e-12);
  EXPECT_NEAR(hp.H2, 0.7, 1e-12);
  hp = hurst_pair(e, SubordinationOrder(2), 1.0);
  EXPECT_NEAR(hp.H1, 0.95, 1e-12);
  EXPECT_NEAR(hp.H2, 0.5, 1e-12);
  hp = hurst_pair(e, SubordinationOrder(1), 0.25);
  EXPECT_NEAR(hp.H1, 0.85, 1e-12);
  EXPECT_NEAR(hp.H2, 1.0, 1e-12);
  EXPECT_THROW(hurst_pair(e, SubordinationOrder(1), 0.5), DomainError);
}

namespace {

struct Triple {
  ModelExponents e;
  int k;
};

// random (q1, q2) with 1 < Q < 2 and an order k < P avoiding k p_i = 1
Triple random_triple(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uq(0.55, 3.0);
  for (;;) {
    const double q1 = uq(rng), q2 = uq(rng);
    const double Q = 1 / q1 + 1 / q2;
    if (!(Q > 1.02 && Q < 1.98)) continue;
    const auto e = derive_exponents(q1, q2);
    const int kmax = static_cast<int>(std::ceil(e.P)) - 1;
    if (kmax < 1) continue;
    std::uniform_int_distribution<int> uk(1, kmax);
    const int k = uk(rng);
    if (std::abs(k - e.P) < 1e-3 || std::abs(k * e.p1 - 1) < 1e-3 || std::abs(k * e.p2 - 1) < 1e-3) continue;
    return {e, k};
  }
}

}  // namespace

TEST(ExponentProperties, ContinuityAtTransition) {
  // each one-sided branch is affine in gamma, so its limit at gamma0 is the
  // branch formula evaluated there
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto [e, k] = random_triple(rng);
    const double hb = theoretical_H(e, SubordinationOrder(k), e.gamma0);
    const auto left = classify_regime(e, SubordinationOrder(k), e.gamma0 * 0.9).tag;
    const auto right = classify_regime(e, SubordinationOrder(k), e.gamma0 * 1.1).tag;
    EXPECT_NEAR(detail::regime_H(e, k, e.gamma0, left), hb, 1e-10);
    EXPECT_NEAR(detail::regime_H(e, k, e.gamma0, right), hb, 1e-10);
    // and the branch is what classify_regime reports just off gamma0
    const double g = e.gamma0 * (1 + 1e-7);
    EXPECT_NEAR(theoretical_H(e, SubordinationOrder(k), g), hb, 1e-6);
  }
}

TEST(ExponentProperties, Sandwich) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> ug(0.05, 4.0);
  for (int i = 0; i < 300; ++i) {
    const auto [e, k] = random_triple(rng);
    const double g = ug(rng);
    const auto r = classify_regime(e, SubordinationOrder(k), g);
    if (r.tag == RegimeTag::Boundary) continue;
    EXPECT_GT(r.H, (1 + g) / 2) << "q=(" << e.q1 << "," << e.q2 << ") k=" << k << " g=" << g;
    EXPECT_LT(r.H, 1 + g);
  }
}

TEST(ExponentProperties, ShortRangeIsExactlyCLT) {
  const auto e = derive_exponents(1.6, 1.6);
  for (double g : {0.3, 1.0, 2.5}) EXPECT_EQ(theoretical_H(e, SubordinationOrder(2), g), (1 + g) / 2);
}

TEST(ExponentProperties, RoundTrip) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const auto [e, k] = random_triple(rng);
    (void)k;
    const auto [q1, q2] = q_from_p(e.p1, e.p2);
    EXPECT_NEAR(q1 / e.q1, 1.0, 1e-12);
    EXPECT_NEAR(q2 / e.q2, 1.0, 1e-12);
    EXPECT_NEAR(e.gamma0, e.p1 / e.p2, 1e-12);
  }
}
