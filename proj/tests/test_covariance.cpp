#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "lrdlab/kernels.hpp"
#include "lrdlab/model_covariance.hpp"
#include "lrdlab/special.hpp"

using namespace lrd;

namespace {

// Limit of partial sums S(J) ~ S + J^e0 (c0 + c1/J + c2/J^2) from S at J, 2J, 4J, 8J.
double richardson4(const std::vector<double>& partial, double J, double e0) {
  Eigen::Matrix4d A;
  Eigen::Vector4d b;
  for (int i = 0; i < 4; ++i) {
    const double x = J * std::pow(2.0, i);
    A(i, 0) = 1.0;
    for (int j = 1; j < 4; ++j) A(i, j) = std::pow(x, e0 - (j - 1));
    b(i) = partial[i];
  }
  return A.colPivHouseholderQr().solve(b)(0);
}

// psi_u(-d) by the Gamma-ratio closed form
double psi_lgamma(long u, double d) { return std::exp(std::lgamma(u + d) - std::lgamma(d) - std::lgamma(u + 1.0)); }

// Lazy-walk distribution of the n-step sum, by dynamic programming, truncated where mass is negligible.
class WalkDP {
 public:
  WalkDP(double theta, int n_max, int v_keep) : n_max_(n_max) {
    const double c = 1.0 - theta;
    const int width = std::min(n_max, v_keep + static_cast<int>(40.0 * std::sqrt(c * n_max)) + 10);
    rows_.assign(static_cast<std::size_t>(n_max) + 1, std::vector<double>(static_cast<std::size_t>(v_keep) + 1, 0.0));
    std::vector<double> cur(static_cast<std::size_t>(2 * width + 3), 0.0), nxt(cur.size(), 0.0);
    const int off = width + 1;
    cur[off] = 1.0;
    for (int n = 0; n <= n_max; ++n) {
      for (int v = 0; v <= v_keep && v <= width; ++v) rows_[n][v] = cur[off + v];
      if (n == n_max) break;
      for (std::size_t i = 1; i + 1 < cur.size(); ++i) nxt[i] = theta * cur[i] + 0.5 * c * (cur[i - 1] + cur[i + 1]);
      std::swap(cur, nxt);
    }
  }
  double operator()(int n, int v) const { return rows_[n][v]; }

 private:
  int n_max_;
  std::vector<std::vector<double>> rows_;
};

}  // namespace

TEST(SeparableCovariance, ClosedFormMatchesDirectSum) {
  for (double d : {0.1, 0.25, 0.4}) {
    for (int t : {0, 1, 5, 40}) {
      std::vector<double> partial;
      const double J = 4000;
      for (int lvl = 0; lvl < 4; ++lvl) {
        const long n = static_cast<long>(J) << lvl;
        double acc = 0;
        for (long u = 0; u < n; ++u) acc += psi_lgamma(u, d) * psi_lgamma(u + t, d);
        partial.push_back(acc);
      }
      const double want = richardson4(partial, J, 2 * d - 1);
      EXPECT_NEAR(SeparableCovariance::autocov(t, d) / want, 1.0, 1e-7) << "d=" << d << " t=" << t;
    }
  }
  const SeparableCovariance c(0.2, 0.3);
  EXPECT_NEAR(c(3, -4), SeparableCovariance::autocov(3, 0.2) * SeparableCovariance::autocov(4, 0.3), 1e-15);
  const auto q = c.quadrant(4, 3);
  EXPECT_NEAR(q[2 * 3 + 1], c(2, 1), 1e-15);
  EXPECT_THROW(SeparableCovariance(0.5, 0.1), DomainError);
}

TEST(SeparableCovariance, PowerLawDecay) {
  // r(t) t^{1-2d} -> Gamma(1-2d) / (Gamma(d) Gamma(1-d))
  const double d = 0.3;
  const double lim = std::tgamma(1 - 2 * d) / (std::tgamma(d) * std::tgamma(1 - d));
  EXPECT_NEAR(SeparableCovariance::autocov(100000, d) * std::pow(100000.0, 1 - 2 * d) / lim, 1.0, 1e-5);
}

TEST(IsoCovariance, SymmetryAndQuadrant) {
  const IsoCovariance c(0.2);
  EXPECT_NEAR(c(3, 7), c(7, 3), 1e-15);
  EXPECT_NEAR(c(-3, 7), c(3, -7), 1e-15);
  const auto q = c.quadrant(5, 9);
  for (int t = 0; t < 5; ++t)
    for (int s = 0; s < 9; ++s) EXPECT_NEAR(q[t * 9 + s], c(t, s), 1e-15);
  EXPECT_THROW(IsoCovariance(0.5), DomainError);
}

TEST(IsoCovariance, AngularConstant) {
  const double d = 0.15;
  const IsoCovariance c(d);
  const double A = std::tgamma(1 - 2 * d) / (std::numbers::pi * std::tgamma(2 * d));
  EXPECT_NEAR(c.angular_constant(), A, 1e-14);
  // the walk parity makes r oscillate between (t+s) even and odd; the pair average is smooth
  for (int rho : {200, 400}) {
    const double avg = 0.5 * (c(rho, 0) + c(rho + 1, 0));
    EXPECT_NEAR(avg * std::pow(rho + 0.5, 2 * (1 - 2 * d)) / A, 1.0, 0.02) << rho;
  }
}

TEST(IsoCovariance, EqualsAutocovarianceOfKernel) {
  // the truncated kernel's autocovariance approaches the series as M grows
  const double d = 0.1;
  const IsoCovariance c(d);
  double prev = 1.0;
  for (int M : {40, 80, 160}) {
    const auto k = iso_frac_kernel(d, M);
    double worst = 0;
    for (auto [t, s] : std::vector<std::pair<int, int>>{{0, 0}, {1, 0}, {2, 3}, {5, 1}}) {
      worst = std::max(worst, std::abs(kernel_autocovariance(k, t, s) / c(t, s) - 1.0));
    }
    EXPECT_LT(worst, prev);
    prev = worst;
  }
  EXPECT_LT(prev, 0.01);
}

TEST(HeatCovariance, MatchesBruteForceSeries) {
  const double d = 0.2, theta = 0.3;
  const HeatCovariance c(d, theta, 64, 64, 512);
  const int J = 1500;
  const int t_max = 20, s_max = 10;
  const WalkDP walk(theta, 2 * 8 * J + t_max, s_max);
  const double p = 2.5 - 2 * d;
  for (auto [t, s] : std::vector<std::pair<int, int>>{{0, 0}, {1, 0}, {0, 1}, {3, 4}, {20, 10}, {7, 2}}) {
    std::vector<double> partial;
    double acc = 0;
    long u = 0;
    for (int lvl = 0; lvl < 4; ++lvl) {
      const long n = static_cast<long>(J) << lvl;
      for (; u < n; ++u) acc += psi_lgamma(u, d) * psi_lgamma(u + t, d) * walk(static_cast<int>(2 * u + t), s);
      partial.push_back(acc);
    }
    const double want = richardson4(partial, J, 1 - p);
    EXPECT_NEAR(c(t, s) / want, 1.0, 2e-6) << t << "," << s;
    EXPECT_NEAR(c(-t, -s), c(t, s), 1e-15);
  }
}

TEST(HeatCovariance, FarLagsUseSaddleContinuation) {
  // lags outside the exact tables agree with the tabled evaluator
  const double d = 0.3, theta = 0.5;
  const HeatCovariance tabled(d, theta, 300, 300), small(d, theta, 16, 16);
  for (auto [t, s] : std::vector<std::pair<int, int>>{{100, 40}, {250, 250}, {30, 200}}) {
    EXPECT_NEAR(small(t, s) / tabled(t, s), 1.0, 1e-5) << t << "," << s;
  }
}

TEST(HeatCovariance, EqualsAutocovarianceOfKernel) {
  const double d = 0.15, theta = 0.4;
  const HeatCovariance c(d, theta, 16, 16);
  double prev = 1.0;
  for (int M : {64, 256}) {
    const auto k = heat_frac_kernel(d, theta, M);
    double worst = 0;
    for (auto [t, s] : std::vector<std::pair<int, int>>{{0, 0}, {1, 0}, {2, 3}, {4, 1}}) {
      worst = std::max(worst, std::abs(kernel_autocovariance(k, t, s) / c(t, s) - 1.0));
    }
    EXPECT_LT(worst, prev);
    prev = worst;
  }
  EXPECT_LT(prev, 0.02);
}

TEST(HeatCovariance, Domain) {
  EXPECT_THROW(HeatCovariance(0.8, 0.5), DomainError);
  EXPECT_THROW(HeatCovariance(0.2, 1.0), DomainError);
}

TEST(KernelCovariance, DirectSumExample) {
  CoefficientKernel k(1, KernelFamily::Custom);
  k.at(0, 0) = 1.0;
  k.at(1, 0) = 0.5;
  k.at(0, -1) = -0.25;
  const KernelCovariance c(std::make_shared<const CoefficientKernel>(k));
  EXPECT_NEAR(c(0, 0), 1.0 + 0.25 + 0.0625, 1e-15);
  EXPECT_NEAR(c(1, 0), 0.5, 1e-15);
  EXPECT_NEAR(c(0, 1), -0.25, 1e-15);
  EXPECT_NEAR(c(1, 1), -0.125, 1e-15);
  EXPECT_NEAR(c(2, 0), 0.0, 1e-15);
}
