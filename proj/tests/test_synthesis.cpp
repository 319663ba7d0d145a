#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include "lrdlab/circulant.hpp"
#include "lrdlab/kernels.hpp"
#include "lrdlab/model_covariance.hpp"
#include "lrdlab/rng.hpp"
#include "lrdlab/synthesis.hpp"

using namespace lrd;

TEST(Philox, KnownAnswerVectors) {
  using C = Philox4x32::Counter;
  EXPECT_EQ(Philox4x32::generate({0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, DerivedKeysSeparateStreams) {
  EXPECT_NE(derive_key(1, 0), derive_key(1, 1));
  EXPECT_NE(derive_key(1, 0), derive_key(2, 0));
  EXPECT_NE(derive_key(1, 2, 3), derive_key(1, 3, 2));
  EXPECT_EQ(derive_key(7, 4, 5), derive_key(7, 4, 5));
}

TEST(Noise, MomentsOfLaws) {
  const NoiseSpec g{NoiseLaw::StandardNormal}, r{NoiseLaw::Rademacher}, u{NoiseLaw::CenteredUniform};
  EXPECT_DOUBLE_EQ(g.moment(4), 3.0);
  EXPECT_DOUBLE_EQ(g.moment(6), 15.0);
  EXPECT_DOUBLE_EQ(r.moment(4), 1.0);
  EXPECT_NEAR(u.moment(2), 1.0, 1e-15);
  EXPECT_NEAR(u.moment(4), 9.0 / 5.0, 1e-14);
  const auto kg = g.cumulants(6);
  for (int j = 3; j <= 6; ++j) EXPECT_NEAR(kg[j], 0.0, 1e-12);
  EXPECT_NEAR(r.cumulants(4)[4], -2.0, 1e-14);
  EXPECT_NEAR(u.cumulants(4)[4], -1.2, 1e-14);
}

TEST(Noise, CumulantMomentRoundTrip) {
  const std::vector<double> m{1, 0, 1.3, 0.4, 5.1, 2.2, 40.0};
  const auto back = moments_from_cumulants(cumulants_from_moments(m));
  for (std::size_t j = 0; j < m.size(); ++j) EXPECT_NEAR(back[j], m[j], 1e-12);
}

TEST(Noise, EmpiricalMomentsAndDeterminism) {
  for (auto law : {NoiseLaw::StandardNormal, NoiseLaw::Rademacher, NoiseLaw::CenteredUniform}) {
    const NoiseSpec spec{law};
    const auto f = sample_noise(300, 300, spec, 11);
    double m1 = 0, m2 = 0, m4 = 0;
    for (double x : f.values) {
      m1 += x;
      m2 += x * x;
      m4 += x * x * x * x;
    }
    const double n = static_cast<double>(f.values.size());
    m1 /= n;
    m2 /= n;
    m4 /= n;
    EXPECT_NEAR(m1, 0.0, 5.0 / std::sqrt(n)) << to_string(law);
    EXPECT_NEAR(m2, 1.0, 5.0 * std::sqrt((spec.moment(4) - 1.0) / n) + 1e-12) << to_string(law);
    EXPECT_NEAR(m4, spec.moment(4), 5.0 * std::sqrt((spec.moment(8) - spec.moment(4) * spec.moment(4)) / n) + 1e-12)
        << to_string(law);
    const auto again = sample_noise(300, 300, spec, 11);
    EXPECT_EQ(f.values, again.values);
  }
}

TEST(Noise, OverlappingWindowsAgree) {
  const NoiseSpec spec{};
  const auto big = sample_noise(20, 20, spec, 5);
  const auto sub = sample_noise(8, 9, spec, 5, 7, 4);
  for (int t = 0; t < 8; ++t)
    for (int s = 0; s < 9; ++s) EXPECT_EQ(sub.at(t, s), big.at(t + 7, s + 4));
  set_default_threads(3);
  const auto threaded = sample_noise(20, 20, spec, 5);
  set_default_threads(1);
  EXPECT_EQ(threaded.values, big.values);
}

static CoefficientKernel small_kernel(int M, unsigned seed) {
  CoefficientKernel k;
  k.M = M;
  k.values.assign(static_cast<std::size_t>(k.width()) * k.width(), 0.0);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (double& x : k.values) x = U(gen);
  return k;
}

static double direct_convolution(const CoefficientKernel& k, const LatticeField& noise, int t, int s) {
  double acc = 0;
  for (int u = -k.M; u <= k.M; ++u)
    for (int v = -k.M; v <= k.M; ++v) acc += k(u, v) * noise.at(t + k.M - u, s + k.M - v);
  return acc;
}

TEST(MovingAverage, DeltaKernelReproducesNoise) {
  const auto noise = sample_noise(16, 13, NoiseSpec{}, 3);
  const auto y = moving_average(CoefficientKernel::delta(), noise);
  ASSERT_EQ(y.Nt, 16);
  ASSERT_EQ(y.Ns, 13);
  for (std::size_t i = 0; i < y.values.size(); ++i) EXPECT_NEAR(y.values[i], noise.values[i], 1e-14);
}

TEST(MovingAverage, MatchesDirectConvolution) {
  const auto k = small_kernel(3, 1);
  const auto noise = sample_noise(25, 19, NoiseSpec{NoiseLaw::Rademacher}, 4);
  const auto y = moving_average(k, noise);
  ASSERT_EQ(y.Nt, 19);
  ASSERT_EQ(y.Ns, 13);
  for (int t = 0; t < y.Nt; ++t)
    for (int s = 0; s < y.Ns; ++s) EXPECT_NEAR(y.at(t, s), direct_convolution(k, noise, t, s), 1e-12);
}

TEST(MovingAverage, LinearityAndDimensionChecks) {
  const auto k = small_kernel(2, 2);
  const auto n1 = sample_noise(12, 12, NoiseSpec{}, 1), n2 = sample_noise(12, 12, NoiseSpec{}, 2);
  LatticeField sum = n1;
  for (std::size_t i = 0; i < sum.values.size(); ++i) sum.values[i] = 2.0 * n1.values[i] - 0.5 * n2.values[i];
  const MovingAverage ma(k, 12, 12);
  const auto y1 = ma.apply(n1), y2 = ma.apply(n2), ys = ma.apply(sum);
  for (std::size_t i = 0; i < ys.values.size(); ++i)
    EXPECT_NEAR(ys.values[i], 2.0 * y1.values[i] - 0.5 * y2.values[i], 1e-12);
  EXPECT_THROW(ma.apply(sample_noise(11, 12, NoiseSpec{}, 1)), DimensionMismatch);
  EXPECT_THROW(MovingAverage(k, 4, 12), DimensionMismatch);
}

TEST(MovingAverage, EmpiricalVarianceMatchesKernelNorm) {
  const auto k = small_kernel(2, 9);
  const auto y = moving_average(k, sample_noise(404, 404, NoiseSpec{NoiseLaw::CenteredUniform}, 8));
  double v = 0;
  for (double x : y.values) v += x * x;
  v /= static_cast<double>(y.values.size());
  const double target = k.power_sum(2);
  // neighbouring outputs overlap; 0.05 relative is many standard errors here
  EXPECT_NEAR(v / target, 1.0, 0.05);
}

TEST(Cumulants, RademacherFourthCumulantOfY) {
  const auto k = small_kernel(1, 5);
  const auto kap = cumulants_of_Y(k, NoiseSpec{NoiseLaw::Rademacher}, 2);
  EXPECT_NEAR(kap[2], k.power_sum(2), 1e-14);
  EXPECT_NEAR(kap[4], -2.0 * k.power_sum(4), 1e-14);
  EXPECT_NEAR(kap[3], 0.0, 1e-15);
  // exact enumeration of the 2^9 sign patterns
  double m2 = 0, m4 = 0;
  for (int mask = 0; mask < 512; ++mask) {
    double y = 0;
    for (int i = 0; i < 9; ++i) y += k.values[i] * ((mask >> i) & 1 ? 1.0 : -1.0);
    m2 += y * y / 512.0;
    m4 += y * y * y * y / 512.0;
  }
  EXPECT_NEAR(m4 - 3.0 * m2 * m2, kap[4], 1e-12);
}

TEST(Appell, HermiteExamples) {
  const auto h3 = hermite_polynomial(3);
  EXPECT_NEAR(h3(2.0), 8.0 - 6.0, 1e-14);
  const auto h4 = hermite_polynomial(4);
  EXPECT_NEAR(h4(1.5), std::pow(1.5, 4) - 6 * 1.5 * 1.5 + 3, 1e-13);
  for (int k = 0; k <= 6; ++k) {
    HermiteExpansion e;
    e.coeffs.assign(static_cast<std::size_t>(k) + 1, 0.0);
    double fact = 1;
    for (int f = 2; f <= k; ++f) fact *= f;
    e.coeffs[k] = fact;
    const auto hk = hermite_polynomial(k);
    for (double x : {-2.3, -0.4, 0.0, 0.7, 3.1}) EXPECT_NEAR(hk(x), e(x), 1e-10 * (1 + std::abs(e(x))));
  }
}

TEST(Appell, RademacherAndUniformExamples) {
  // Rademacher: A_2 = x^2 - 1, A_3 = x^3 - 3x, A_4 = x^4 - 6x^2 + 5
  const auto r = NoiseSpec{NoiseLaw::Rademacher}.moments(4);
  const auto a4 = appell_from_moments(r, 4);
  EXPECT_NEAR(a4(0.0), 5.0, 1e-14);
  EXPECT_NEAR(a4(2.0), 16.0 - 24.0 + 5.0, 1e-13);
  EXPECT_NEAR(appell_from_moments(r, 3)(2.0), 2.0, 1e-14);
  EXPECT_THROW(appell_from_moments({1.0, 0.5, 1.0}, 2), DomainError);
}

TEST(Appell, DerivativePropertyAndZeroMean) {
  for (auto law : {NoiseLaw::StandardNormal, NoiseLaw::Rademacher, NoiseLaw::CenteredUniform}) {
    const NoiseSpec spec{law};
    const auto m = spec.moments(12);
    for (int k = 1; k <= 6; ++k) {
      const auto ak = appell_from_moments(m, k), akm = appell_from_moments(m, k - 1);
      for (int i = 1; i <= k; ++i) EXPECT_NEAR(i * ak.coeffs[i], k * akm.coeffs[i - 1], 1e-9);
      double mean = 0;
      for (int i = 0; i <= k; ++i) mean += ak.coeffs[i] * m[i];
      EXPECT_NEAR(mean, 0.0, 1e-9) << to_string(law) << " k=" << k;
    }
  }
}

TEST(Hermite, GeneralExpansionExamplesAndRank) {
  HermiteExpansion g{{0.0, 0.0, 2.0, 0.0, 24.0}};
  EXPECT_EQ(g.rank(), 2);
  const double x = 0.8;
  EXPECT_NEAR(g(x), (x * x - 1) + (x * x * x * x - 6 * x * x + 3), 1e-13);
  EXPECT_NEAR(g.second_moment(), 4.0 / 2.0 + 576.0 / 24.0, 1e-12);
  LatticeField f(1, 3);
  f.values = {0.0, 1.0, 2.0};
  const auto out = subordinate_general(f, g, 2, 2.0);
  EXPECT_NEAR(out.at(0, 2), g(1.0), 1e-14);
  EXPECT_THROW(subordinate_general(f, g, 1), RankError);
  EXPECT_THROW(subordinate_general(f, HermiteExpansion{{0.0, 0.0}}, 1), RankError);
}

TEST(Hermite, SecondMomentMatchesQuadrature) {
  HermiteExpansion g{{0.0, 0.3, -1.1, 0.0, 0.7}};
  const auto rule = gauss_legendre<64>();
  double acc = 0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double z = 10.0 * rule.nodes[i];
    acc += 10.0 * rule.weights[i] * g(z) * g(z) * std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi);
  }
  EXPECT_NEAR(acc, g.second_moment(), 1e-10);
}

TEST(OffDiagonal, DecompositionIsExact) {
  const auto k = small_kernel(2, 3);
  for (auto law : {NoiseLaw::StandardNormal, NoiseLaw::Rademacher, NoiseLaw::CenteredUniform}) {
    const NoiseSpec spec{law};
    const auto noise = sample_noise(8, 8, spec, 21);
    for (int order : {1, 2, 3}) {
      const auto dec = offdiag_decomposition_oracle(k, noise, spec, order);
      for (std::size_t i = 0; i < dec.appell.values.size(); ++i) {
        const double lhs = dec.appell.values[i], rhs = dec.offdiag.values[i] + dec.diagonal.values[i];
        EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(lhs))) << to_string(law) << " k=" << order;
      }
      if (order == 1) {
        for (double x : dec.diagonal.values) EXPECT_EQ(x, 0.0);
      }
    }
  }
}

TEST(OffDiagonal, GaussianOrder2DiagonalIsSumOfHermite) {
  // for Gaussian noise the diagonal part of k = 2 is sum_i w_i^2 (eps_i^2 - 1)
  const auto k = small_kernel(1, 8);
  const auto noise = sample_noise(5, 5, NoiseSpec{}, 2);
  const auto dec = offdiag_decomposition_oracle(k, noise, NoiseSpec{}, 2);
  for (int t = 0; t < dec.diagonal.Nt; ++t)
    for (int s = 0; s < dec.diagonal.Ns; ++s) {
      double want = 0;
      for (int u = -1; u <= 1; ++u)
        for (int v = -1; v <= 1; ++v) {
          const double e = noise.at(t + 1 - u, s + 1 - v);
          want += k(u, v) * k(u, v) * (e * e - 1.0);
        }
      EXPECT_NEAR(dec.diagonal.at(t, s), want, 1e-12);
    }
}

TEST(OffDiagonal, TermsAreOrthogonalInMeanSquare) {
  // E[offdiag * diagonal] = 0 by exact enumeration of Rademacher signs on a 3x3 window
  const auto k = small_kernel(1, 4);
  const NoiseSpec spec{NoiseLaw::Rademacher};
  double cross = 0, off2 = 0;
  for (int mask = 0; mask < 512; ++mask) {
    LatticeField noise(3, 3);
    for (int i = 0; i < 9; ++i) noise.values[i] = (mask >> i) & 1 ? 1.0 : -1.0;
    const auto dec = offdiag_decomposition_oracle(k, noise, spec, 3);
    cross += dec.offdiag.values[0] * dec.diagonal.values[0] / 512.0;
    off2 += dec.offdiag.values[0] * dec.offdiag.values[0] / 512.0;
  }
  EXPECT_GT(off2, 0.0);
  EXPECT_NEAR(cross, 0.0, 1e-12);
}

TEST(OffDiagonal, SizeCaps) {
  const auto noise = sample_noise(13, 13, NoiseSpec{}, 1);
  EXPECT_THROW(offdiag_decomposition_oracle(small_kernel(1, 1), noise, NoiseSpec{}, 2), SizeCapError);
  const auto ok = sample_noise(8, 8, NoiseSpec{}, 1);
  EXPECT_THROW(offdiag_decomposition_oracle(small_kernel(4, 1), ok, NoiseSpec{}, 2), SizeCapError);
  EXPECT_THROW(offdiag_decomposition_oracle(small_kernel(1, 1), ok, NoiseSpec{}, 4), SizeCapError);
}

TEST(Circulant, EmbeddingSizes) {
  EXPECT_EQ(even_fast_size(1), 2);
  EXPECT_EQ(even_fast_size(2), 2);
  EXPECT_EQ(even_fast_size(11), 12);
  EXPECT_EQ(even_fast_size(22), 24);
  EXPECT_EQ(even_fast_size(26), 28);
}

TEST(Circulant, EmpiricalCovarianceMatchesTarget) {
  auto cov = std::make_shared<SeparableCovariance>(0.3, 0.2);
  CovarianceTable table(cov);
  const CirculantSampler sampler(table, 6, 5);
  EXPECT_TRUE(sampler.exact());
  const int pairs = 20000;
  const std::vector<std::pair<int, int>> lags{{0, 0}, {1, 0}, {0, 1}, {3, 2}, {5, 4}};
  std::vector<double> acc(lags.size(), 0.0), acc2(lags.size(), 0.0);
  double cross = 0;
  for (int p = 0; p < pairs; ++p) {
    const auto [re, im] = sampler.sample_pair(derive_key(17, p));
    for (std::size_t l = 0; l < lags.size(); ++l)
      for (const auto* f : {&re, &im}) {
        const double x = f->at(0, 0) * f->at(lags[l].first, lags[l].second);
        acc[l] += x;
        acc2[l] += x * x;
      }
    cross += re.at(0, 0) * im.at(2, 1);
  }
  const double n = 2.0 * pairs;
  for (std::size_t l = 0; l < lags.size(); ++l) {
    const double mean = acc[l] / n, se = std::sqrt((acc2[l] / n - mean * mean) / n);
    EXPECT_NEAR(mean, (*cov)(lags[l].first, lags[l].second), 4.5 * se) << l;
  }
  EXPECT_NEAR(cross / pairs, 0.0, 4.5 * cov->variance() / std::sqrt(pairs));
}

TEST(Circulant, ReproducibleAndReusesTable) {
  auto cov = std::make_shared<IsoCovariance>(0.2);
  CovarianceTable table(cov);
  const CirculantSampler big(table, 20, 20);
  const int nt = table.nt();
  const CirculantSampler small(table, 9, 9);
  EXPECT_EQ(table.nt(), nt);
  const auto a = big.sample_pair(99), b = big.sample_pair(99);
  EXPECT_EQ(a.first.values, b.first.values);
  EXPECT_EQ(a.second.values, b.second.values);
  EXPECT_NE(a.first.values, big.sample_pair(100).first.values);
  EXPECT_THROW(CirculantSampler(table, 0, 4), DomainError);
}
