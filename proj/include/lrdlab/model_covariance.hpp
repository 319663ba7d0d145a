#pragma once
// Covariances r(t,s) = E Y(0,0) Y(t,s) of the untruncated model fields, as
// convergent lag series: exact terms on small indices, an integral of the
// smooth continuation of the summand for the remainder.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lrdlab/error.hpp"
#include "lrdlab/kernels.hpp"
#include "lrdlab/parallel.hpp"
#include "lrdlab/quadrature.hpp"
#include "lrdlab/special.hpp"

namespace lrd {

/// Covariance with r(t,s) = r(|t|,|s|), so a quadrant determines it.
class QuadrantCovariance {
 public:
  virtual ~QuadrantCovariance() = default;
  virtual double operator()(std::int64_t t, std::int64_t s) const = 0;
  virtual std::string name() const = 0;

  double variance() const { return (*this)(0, 0); }

  /// r(t, s) for 0 <= t < nt, 0 <= s < ns, row-major in t.
  virtual std::vector<double> quadrant(int nt, int ns) const {
    check_memory(8.0 * nt * ns, kDefaultMemoryCapBytes, "covariance table");
    std::vector<double> out(static_cast<std::size_t>(nt) * ns);
    parallel_for(0, static_cast<std::size_t>(nt), [&](std::size_t t) {
      for (int s = 0; s < ns; ++s) out[t * ns + s] = (*this)(static_cast<std::int64_t>(t), s);
    });
    return out;
  }
};

/// Fractionally integrated field on the square lattice: r = sum_n psi_n(-2d) p_n.
class IsoCovariance final : public QuadrantCovariance {
 public:
  explicit IsoCovariance(double d) : d_(d), series_(check(d) * 2.0) {}

  double operator()(std::int64_t t, std::int64_t s) const override {
    return series_(static_cast<int>(std::abs(t)), static_cast<int>(std::abs(s)));
  }
  std::string name() const override { return "iso"; }

  std::vector<double> quadrant(int nt, int ns) const override {
    check_memory(8.0 * nt * ns, kDefaultMemoryCapBytes, "covariance table");
    std::vector<double> out(static_cast<std::size_t>(nt) * ns);
    // r(t, s) = r(s, t): evaluate s <= t and mirror
    parallel_for(0, static_cast<std::size_t>(std::max(nt, ns)), [&](std::size_t row) {
      const int t = static_cast<int>(row);
      for (int s = 0; s <= t; ++s) {
        const bool a = t < nt && s < ns, b = s < nt && t < ns;
        if (!a && !b) continue;
        const double v = series_(t, s);
        if (a) out[static_cast<std::size_t>(t) * ns + s] = v;
        if (b) out[static_cast<std::size_t>(s) * ns + t] = v;
      }
    });
    return out;
  }

  /// Limit of rho^{2(1-2d)} r.
  double angular_constant() const { return series_.angular_constant(); }

 private:
  static double check(double d) {
    if (!(d > 0 && d < 0.5)) throw DomainError("iso covariance: d must lie in (0, 1/2)");
    return d;
  }
  double d_;
  IsoWalkSeries series_;
};

/// Product of ARFIMA(0, d_i, 0) autocovariances.
class SeparableCovariance final : public QuadrantCovariance {
 public:
  SeparableCovariance(double d1, double d2) : d1_(d1), d2_(d2) {
    if (!(d1 > 0 && d1 < 0.5) || !(d2 > 0 && d2 < 0.5)) throw DomainError("separable covariance: d_i in (0, 1/2)");
  }

  /// sum_u psi_u(-d) psi_{u+t}(-d) = Gamma(1-2d) Gamma(t+d) / (Gamma(d) Gamma(1-d) Gamma(t+1-d)).
  static double autocov(std::int64_t t, double d) {
    t = t < 0 ? -t : t;
    const double c0 = std::tgamma(1 - 2 * d) / std::pow(std::tgamma(1 - d), 2);
    if (t == 0) return c0;
    const double lr = std::lgamma(t + d) - std::lgamma(t + 1 - d) + std::lgamma(1 - d) - std::lgamma(d);
    return c0 * std::exp(lr);
  }

  double operator()(std::int64_t t, std::int64_t s) const override { return autocov(t, d1_) * autocov(s, d2_); }
  std::string name() const override { return "separable"; }

  std::vector<double> quadrant(int nt, int ns) const override {
    check_memory(8.0 * nt * ns, kDefaultMemoryCapBytes, "covariance table");
    std::vector<double> r1(nt), r2(ns), out(static_cast<std::size_t>(nt) * ns);
    for (int t = 0; t < nt; ++t) r1[t] = autocov(t, d1_);
    for (int s = 0; s < ns; ++s) r2[s] = autocov(s, d2_);
    for (int t = 0; t < nt; ++t)
      for (int s = 0; s < ns; ++s) out[static_cast<std::size_t>(t) * ns + s] = r1[t] * r2[s];
    return out;
  }

 private:
  double d1_, d2_;
};

/// Fractional heat field: r(t,s) = sum_{u>=0} psi_u(-d) psi_{u+t}(-d) q_{2u+t}(s), t >= 0.
class HeatCovariance final : public QuadrantCovariance {
 public:
  /// Exact tables cover the lags [0, t_max] x [0, s_max]; other lags fall back
  /// to the saddle-point walk density in the exact part as well.
  HeatCovariance(double d, double theta, int t_max = 1024, int s_max = 1024, int u_exact = 512)
      : d_(d), theta_(theta), u0_(u_exact), weight_(d) {
    if (!(d > 0 && d < 0.75)) throw DomainError("heat covariance: d must lie in (0, 3/4)");
    if (!(theta > 0 && theta < 1)) throw DomainError("heat covariance: theta must lie in (0,1)");
    psi_ = frac_binomial_table(static_cast<std::size_t>(u0_) + t_max + 1, -d);
    walk_ = LazyWalkTable(theta, 2 * u0_ + t_max, s_max);
  }

  std::string name() const override { return "heat"; }

  double operator()(std::int64_t t, std::int64_t s) const override {
    t = t < 0 ? -t : t;
    s = s < 0 ? -s : s;
    return exact_part(t, s) + tail_part(t, s);
  }

 private:
  double walk(std::int64_t n, std::int64_t v) const {
    if (v > n) return 0.0;
    if (n <= walk_.n_max() && v <= walk_.v_max()) return walk_(static_cast<int>(n), static_cast<int>(v));
    if (n == 0) return v == 0 ? 1.0 : 0.0;
    return LazyWalk{theta_}.probability(static_cast<double>(n), static_cast<double>(v));
  }

  double psi(std::int64_t u) const {
    return u < static_cast<std::int64_t>(psi_.size()) ? psi_[static_cast<std::size_t>(u)]
                                                       : weight_(static_cast<double>(u));
  }

  double exact_part(std::int64_t t, std::int64_t s) const {
    double acc = 0;
    const std::int64_t ustart = std::max<std::int64_t>(0, (s - t + 1) / 2);  // q_n(s) = 0 for n < s
    const bool tabled = 2 * (u0_ - 1) + t <= walk_.n_max() && s <= walk_.v_max() &&
                        u0_ - 1 + t < static_cast<std::int64_t>(psi_.size());
    if (tabled) {
      for (std::int64_t u = ustart; u < u0_; ++u)
        acc += psi_[static_cast<std::size_t>(u)] * psi_[static_cast<std::size_t>(u + t)] *
               walk_(static_cast<int>(2 * u + t), static_cast<int>(s));
    } else {
      for (std::int64_t u = ustart; u < u0_; ++u) acc += psi(u) * psi(u + t) * walk(2 * u + t, s);
    }
    return acc;
  }

  double summand(double u, double t, double s) const {
    return weight_(u) * weight_(u + t) * LazyWalk{theta_}.probability(2.0 * u + t, s);
  }

  // sum_{u >= u0} by the integral over [u0 - 1/2, inf) of the continued summand
  double tail_part(std::int64_t ti, std::int64_t si) const {
    const double t = static_cast<double>(ti), s = static_cast<double>(si);
    const double c = 1.0 - theta_;
    const double a = u0_ - 0.5;
    // q_n(s) <= exp(-s^2 / (2n)) makes n < s^2/92 negligible
    const double lo = std::max(a, 0.5 * (s * s / 92.0 - t));
    const double hi = std::max(lo, 8.0 * (s * s / c + t));
    const auto& gl = gauss_legendre<8>();
    double acc = 0;
    if (hi > lo) {
      const double span = std::log(hi / lo);
      const int panels = std::max(1, static_cast<int>(std::ceil(span)));
      const double h = span / panels;
      for (int p = 0; p < panels; ++p) {
        const double w0 = std::log(lo) + p * h;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
          const double u = std::exp(w0 + 0.5 * h * (gl.nodes[i] + 1.0));
          acc += 0.5 * h * gl.weights[i] * summand(u, t, s) * u;
        }
      }
    }
    // power tail: summand ~ u^{-p}, p = 5/2 - 2d; u = hi x^{-beta} flattens it
    const double beta = 1.0 / (1.5 - 2.0 * d_);
    const auto& gl16 = gauss_legendre<16>();
    for (std::size_t i = 0; i < gl16.nodes.size(); ++i) {
      const double x = 0.5 * (gl16.nodes[i] + 1.0);
      const double u = hi * std::pow(x, -beta);
      acc += 0.5 * gl16.weights[i] * summand(u, t, s) * hi * beta * std::pow(x, -beta - 1.0);
    }
    return acc;
  }

  double d_, theta_;
  int u0_;
  FracWeight weight_;
  std::vector<double> psi_;
  LazyWalkTable walk_;
};

/// Exact autocovariance of a truncated kernel, sum_{u,v} a(u,v) a(u+t, v+s), by direct summation.
inline double kernel_autocovariance(const CoefficientKernel& k, int t, int s) {
  const int M = k.M;
  double acc = 0;
  const int u_lo = std::max(-M, -M - t), u_hi = std::min(M, M - t);
  const int v_lo = std::max(-M, -M - s), v_hi = std::min(M, M - s);
  for (int u = u_lo; u <= u_hi; ++u) {
    const double* row = &k.values[k.index(u, 0)];
    const double* row2 = &k.values[k.index(u + t, 0)];
    for (int v = v_lo; v <= v_hi; ++v) acc += row[v] * row2[v + s];
  }
  return acc;
}

class KernelCovariance final : public QuadrantCovariance {
 public:
  explicit KernelCovariance(std::shared_ptr<const CoefficientKernel> k) : k_(std::move(k)) {}
  double operator()(std::int64_t t, std::int64_t s) const override {
    return kernel_autocovariance(*k_, static_cast<int>(t), static_cast<int>(s));
  }
  std::string name() const override { return "kernel"; }

 private:
  std::shared_ptr<const CoefficientKernel> k_;
};

}  // namespace lrd
