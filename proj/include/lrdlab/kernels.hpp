#pragma once
// Moving-average coefficient arrays a(t,s) of the anisotropic model and the
// quasi-norm / angular-function primitives they are built from.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "lrdlab/error.hpp"
#include "lrdlab/exponents.hpp"
#include "lrdlab/parallel.hpp"
#include "lrdlab/quadrature.hpp"
#include "lrdlab/special.hpp"

namespace lrd {

inline constexpr double kDefaultTruncationTol = 0.05;

/// Anisotropic radius (|t|^2 + |s|^{2/varpi})^{1/2}.
inline double quasi_norm(double t, double s, double varpi) {
  if (!(varpi > 0)) throw DomainError("quasi_norm: varpi must be positive");
  const double as = std::abs(s);
  const double ss = varpi == 1.0 ? as * as : std::pow(as, 2.0 / varpi);
  return std::sqrt(t * t + ss);
}

inline double quasi_norm_plus(double t, double s, double varpi) {
  return std::max(1.0, quasi_norm(t, s, varpi));
}

/// Bounded, nonnegative direction profile on [-1, 1].
struct AngularFunction {
  std::function<double(double)> eval;
  bool continuous = true;
  bool even = false;
  double operator()(double z) const { return eval(std::clamp(z, -1.0, 1.0)); }

  static AngularFunction constant(double value) {
    return {[value](double) { return value; }, true, true};
  }
};

/// Angular profile of the fractional heat kernel; zero for z <= 0.
inline double heat_angular_L0(double z, double d, double theta) {
  if (!(theta > 0 && theta < 1)) throw DomainError("heat_angular_L0: theta must lie in (0,1)");
  if (z <= 0.0) return 0.0;
  z = std::min(z, 1.0);
  const double c = 1.0 - theta;
  const double root = std::sqrt(std::max(0.0, 1.0 / (z * z) - 1.0));
  const double lg = std::log(z) * (d - 1.5) - root / (2.0 * c);
  return std::exp(lg) / (std::tgamma(d) * std::sqrt(2.0 * std::numbers::pi * c));
}

inline AngularFunction heat_angular_function(double d, double theta) {
  return {[d, theta](double z) { return heat_angular_L0(z, d, theta); }, true, false};
}

/// rho(t,s)^{-q1} L0(t / rho(t,s)) with varpi = q1/q2.
inline double a_infinity(double t, double s, const ModelExponents& e, const AngularFunction& L0) {
  if (t == 0.0 && s == 0.0) throw SingularityError("a_infinity is singular at the origin");
  const double rho = quasi_norm(t, s, e.gamma0);
  return std::pow(rho, -e.q1) * L0(t / rho);
}

/// int over the unit quasi-circle of L(z)^2 against the area element of
/// quasi-polar coordinates: sum over the two signs of s of
/// int_{-1}^{1} varpi L(z)^2 (1 - z^2)^{varpi/2 - 1} dz.
inline double angular_area_integral(const AngularFunction& L, double varpi, double power = 2.0) {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [&](double z) {
    const double l = L(z);
    if (l == 0.0) return 0.0;
    return varpi * std::pow(l, power) * std::pow(std::max(1e-300, 1.0 - z * z), varpi / 2.0 - 1.0);
  };
  return 2.0 * ts.integrate(f, -1.0, 1.0);
}

/// Estimate of sum over rho > M of (rho^{-q1} L)^2; finite only when 2 q1 > 1 + varpi.
inline double l2_tail_estimate(double q1, double varpi, const AngularFunction& L, int M) {
  const double h = 2.0 * q1;
  if (h <= 1.0 + varpi) return std::numeric_limits<double>::infinity();
  return angular_area_integral(L, varpi) * std::pow(static_cast<double>(M), 1.0 + varpi - h) / (h - 1.0 - varpi);
}

enum class KernelFamily { GenericAngular, IsoFrac, HeatFrac, Separable, Custom };

inline std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::GenericAngular: return "generic";
    case KernelFamily::IsoFrac: return "iso";
    case KernelFamily::HeatFrac: return "heat";
    case KernelFamily::Separable: return "separable";
    case KernelFamily::Custom: return "custom";
  }
  return "?";
}

/// Dense coefficients on [-M, M]^2, row-major in t, origin at index (M, M).
struct CoefficientKernel {
  int M = 0;
  KernelFamily family = KernelFamily::Custom;
  std::map<std::string, double> params;
  double truncated_l2_tail = 0;
  std::vector<double> values;

  CoefficientKernel() = default;
  CoefficientKernel(int half_width, KernelFamily fam, double mem_cap = kDefaultMemoryCapBytes)
      : M(half_width), family(fam) {
    if (half_width < 0) throw DomainError("kernel half-width must be >= 0");
    const double w = 2.0 * half_width + 1.0;
    check_memory(8.0 * w * w, mem_cap, "kernel array");
    values.assign(static_cast<std::size_t>(w * w), 0.0);
  }

  int width() const { return 2 * M + 1; }
  std::size_t index(int t, int s) const {
    return static_cast<std::size_t>(t + M) * static_cast<std::size_t>(width()) + static_cast<std::size_t>(s + M);
  }
  bool contains(int t, int s) const { return std::abs(t) <= M && std::abs(s) <= M; }
  double operator()(int t, int s) const { return contains(t, s) ? values[index(t, s)] : 0.0; }
  double& at(int t, int s) {
    if (!contains(t, s)) throw OutOfBounds("kernel index outside [-M, M]^2");
    return values[index(t, s)];
  }

  /// sum of a^j over the array
  double power_sum(int j) const {
    double acc = 0;
    for (double a : values) acc += std::pow(a, j);
    return acc;
  }

  static CoefficientKernel delta() {
    CoefficientKernel k(0, KernelFamily::Custom);
    k.values[0] = 1.0;
    return k;
  }
};

/// a(t,s) = rho_+^{-q1} L0(t / rho_+) on [-M, M]^2 with varpi = q1/q2.
inline CoefficientKernel generic_kernel(const ModelExponents& e, const AngularFunction& L0, int M,
                                        double trunc_tol = kDefaultTruncationTol) {
  if (M < 1) throw DomainError("generic_kernel: M must be >= 1");
  CoefficientKernel k(M, KernelFamily::GenericAngular);
  k.params = {{"q1", e.q1}, {"q2", e.q2}};
  const double varpi = e.gamma0;
  parallel_for(0, static_cast<std::size_t>(k.width()), [&](std::size_t row) {
    const int t = static_cast<int>(row) - M;
    for (int s = -M; s <= M; ++s) {
      const double rp = quasi_norm_plus(t, s, varpi);
      k.values[k.index(t, s)] = std::pow(rp, -e.q1) * L0(t / rp);
    }
  });
  double inside = 0;
  for (double a : k.values) inside += a * a;
  const double tail = l2_tail_estimate(e.q1, varpi, L0, M);
  k.truncated_l2_tail = tail / (inside + tail);
  if (!(k.truncated_l2_tail <= trunc_tol)) {
    throw TruncationError("estimated relative l2 tail " + std::to_string(k.truncated_l2_tail) +
                          " exceeds tolerance " + std::to_string(trunc_tol) + " at M = " + std::to_string(M));
  }
  return k;
}

/// j-step transition probabilities of the simple nearest-neighbour walk on Z^2.
inline std::map<std::pair<int, int>, double> rw2d_transitions(int j) {
  if (j < 0) throw DomainError("rw2d_transitions: j must be >= 0");
  const int w = 2 * j + 1;
  std::vector<double> cur(static_cast<std::size_t>(w) * w, 0.0), nxt(cur.size());
  auto idx = [&](int u, int v) { return static_cast<std::size_t>(u + j) * w + static_cast<std::size_t>(v + j); };
  cur[idx(0, 0)] = 1.0;
  for (int step = 0; step < j; ++step) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (int u = -step; u <= step; ++u) {
      for (int v = -step; v <= step; ++v) {
        const double p = cur[idx(u, v)];
        if (p == 0.0) continue;
        nxt[idx(u + 1, v)] += 0.25 * p;
        nxt[idx(u - 1, v)] += 0.25 * p;
        nxt[idx(u, v + 1)] += 0.25 * p;
        nxt[idx(u, v - 1)] += 0.25 * p;
      }
    }
    std::swap(cur, nxt);
  }
  std::map<std::pair<int, int>, double> out;
  for (int u = -j; u <= j; ++u)
    for (int v = -j; v <= j; ++v)
      if (cur[idx(u, v)] != 0.0) out[{u, v}] = cur[idx(u, v)];
  return out;
}

/// q_u(v) for |v| <= u, returned with index v + u.
inline std::vector<double> heat_rw_transitions(int u, double theta) {
  if (u < 0) throw DomainError("heat_rw_transitions: u must be >= 0");
  if (!(theta > 0 && theta < 1)) throw DomainError("heat_rw_transitions: theta must lie in (0,1)");
  LazyWalkTable tab(theta, u, u);
  std::vector<double> out(2 * static_cast<std::size_t>(u) + 1);
  for (int v = -u; v <= u; ++v) out[static_cast<std::size_t>(v + u)] = tab(u, v);
  return out;
}

/// sum_{j >= 0} psi_j(-delta) p_j(u, v) for the simple walk on Z^2, 0 < delta < 1.
/// With delta = d this is the fractional Laplacian kernel; with delta = 2d it is
/// that kernel's exact covariance. Small |(u,v)|: exact terms j < J0 plus an
/// integral for the remainder; large |(u,v)|: Gauss-Laguerre in x = rho^2 / j.
class IsoWalkSeries {
 public:
  explicit IsoWalkSeries(double delta, int near_radius = 48, int j_exact = 1024, int laguerre_nodes = 12)
      : delta_(delta), near_(near_radius), j0_(j_exact), weight_(delta) {
    if (!(delta > 0 && delta < 1)) throw DomainError("IsoWalkSeries: delta must lie in (0,1)");
    psi_ = frac_binomial_table(static_cast<std::size_t>(j0_) + 2, -delta);
    walk_ = LazyWalkTable(0.0, j0_ + 2, 2 * near_ + 4);
    laguerre_ = gauss_laguerre(laguerre_nodes, -delta);
    gamma_delta_ = std::tgamma(delta);
  }

  double delta() const { return delta_; }

  /// Limit of rho^{2(1 - delta)} times the series.
  double angular_constant() const { return std::tgamma(1.0 - delta_) / (std::numbers::pi * gamma_delta_); }

  double operator()(int u, int v) const {
    u = std::abs(u);
    v = std::abs(v);
    const double rho2 = static_cast<double>(u) * u + static_cast<double>(v) * v;
    if (rho2 < static_cast<double>(near_) * near_) return near_value(u, v);
    return far_value(u, v, rho2);
  }

 private:
  // continuous summand: psi(j) P_j(x1) P_j(x2) where P are parity-point probabilities
  double summand(double j, int x1, int x2) const {
    const LazyWalk w{0.0};
    const double p1 = w.probability(j, x1);
    if (p1 == 0.0) return 0.0;
    return weight_(j) * p1 * w.probability(j, x2);
  }

  double near_value(int u, int v) const {
    const int x1 = u + v, x2 = u - v;
    const int parity = (u + v) & 1;
    double acc = 0;
    int j = x1;  // p_j vanishes for j < |u| + |v|
    for (; j < j0_; j += 2) acc += psi_[j] * walk_(j, x1) * walk_(j, x2);
    if ((j & 1) != parity) ++j;
    // remaining terms j, j+2, ...: (1/2) int_{j-1}^inf, with x = a/j and x = y^{1/(1-delta)}
    const double a = j - 1.0;
    const double beta = 1.0 / (1.0 - delta_);
    const auto& gl = gauss_legendre<20>();
    double tail = 0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double y = 0.5 * (gl.nodes[i] + 1.0);
      const double x = std::pow(y, beta);
      const double dxdy = beta * std::pow(y, beta - 1.0);
      const double jj = a / x;
      tail += 0.5 * gl.weights[i] * summand(jj, x1, x2) * a / (x * x) * dxdy;
    }
    return acc + 0.5 * tail;
  }

  double far_value(int u, int v, double rho2) const {
    const int x1 = u + v, x2 = u - v;
    double acc = 0;
    for (std::size_t i = 0; i < laguerre_.nodes.size(); ++i) {
      const double x = laguerre_.nodes[i];
      const double j = rho2 / x;
      const double f = summand(j, x1, x2) * rho2 / (x * x);
      acc += laguerre_.weights[i] * f * std::exp(x) * std::pow(x, delta_);
    }
    return 0.5 * acc;
  }

  double delta_;
  int near_;
  int j0_;
  std::vector<double> psi_;
  FracWeight weight_;
  LazyWalkTable walk_;
  QuadratureRule laguerre_;
  double gamma_delta_ = 1;
};

/// Kernel of the lattice fractional Laplacian inverse, a = sum_j psi_j(-d) p_j.
inline CoefficientKernel iso_frac_kernel(double d, int M) {
  if (!(d > 0 && d < 0.5)) throw DomainError("iso_frac_kernel: d must lie in (0, 1/2)");
  if (M < 1) throw DomainError("iso_frac_kernel: M must be >= 1");
  CoefficientKernel k(M, KernelFamily::IsoFrac);
  k.params = {{"d", d}};
  const IsoWalkSeries series(d);
  // fill the octant 0 <= s <= t and reflect
  parallel_for(0, static_cast<std::size_t>(M) + 1, [&](std::size_t row) {
    const int t = static_cast<int>(row);
    for (int s = 0; s <= t; ++s) {
      const double a = series(t, s);
      for (int sg1 : {-1, 1})
        for (int sg2 : {-1, 1}) {
          k.values[k.index(sg1 * t, sg2 * s)] = a;
          k.values[k.index(sg1 * s, sg2 * t)] = a;
        }
    }
  });
  double inside = 0;
  for (double a : k.values) inside += a * a;
  const double q1 = 2.0 * (1.0 - d);
  const double tail = l2_tail_estimate(q1, 1.0, AngularFunction::constant(series.angular_constant()), M);
  k.truncated_l2_tail = tail / (inside + tail);
  return k;
}

/// a(u, v) = psi_u(-d) q_u(v): exact tables for u <= u_exact, saddle point beyond.
class HeatCoefficients {
 public:
  HeatCoefficients(double d, double theta, int u_exact = 2048, int v_exact = 512)
      : d_(d), theta_(theta), u_exact_(u_exact), weight_(d) {
    if (!(d > 0 && d < 0.75)) throw DomainError("heat kernel: d must lie in (0, 3/4)");
    if (!(theta > 0 && theta < 1)) throw DomainError("heat kernel: theta must lie in (0,1)");
    psi_ = frac_binomial_table(static_cast<std::size_t>(u_exact), -d);
    walk_ = LazyWalkTable(theta, u_exact, v_exact);
  }

  double operator()(std::int64_t u, std::int64_t v) const {
    if (u < 0) return 0.0;
    v = v < 0 ? -v : v;
    if (v > u) return 0.0;
    if (u <= u_exact_ && v <= walk_.v_max()) return psi_[static_cast<std::size_t>(u)] * walk_(static_cast<int>(u), static_cast<int>(v));
    const double uu = static_cast<double>(u);
    const double w = u <= u_exact_ ? psi_[static_cast<std::size_t>(u)] : weight_(uu);
    return w * LazyWalk{theta_}.probability(uu, static_cast<double>(v));
  }

  double d() const { return d_; }
  double theta() const { return theta_; }

 private:
  double d_, theta_;
  int u_exact_;
  FracWeight weight_;
  std::vector<double> psi_;
  LazyWalkTable walk_;
};

/// One-sided kernel of the fractional heat operator on [-M, M]^2 (zero for u < 0).
inline CoefficientKernel heat_frac_kernel(double d, double theta, int M) {
  if (M < 1) throw DomainError("heat_frac_kernel: M must be >= 1");
  const HeatCoefficients coef(d, theta, std::max(M, 1), std::max(1, std::min(M, 512)));
  CoefficientKernel k(M, KernelFamily::HeatFrac);
  k.params = {{"d", d}, {"theta", theta}};
  parallel_for(0, static_cast<std::size_t>(M) + 1, [&](std::size_t row) {
    const int u = static_cast<int>(row);
    for (int v = 0; v <= std::min(u, M); ++v) {
      const double a = coef(u, v);
      k.values[k.index(u, v)] = a;
      k.values[k.index(u, -v)] = a;
    }
  });
  double inside = 0;
  for (double a : k.values) inside += a * a;
  const double q1 = 1.5 - d;
  const double tail = l2_tail_estimate(q1, 0.5, heat_angular_function(d, theta), M);
  k.truncated_l2_tail = std::isfinite(tail) ? tail / (inside + tail) : 1.0;
  return k;
}

/// a(u, v) = psi_u(-d1) psi_v(-d2) on Z_+^2.
inline CoefficientKernel separable_kernel(double d1, double d2, int M) {
  if (!(d1 > 0 && d1 < 0.5) || !(d2 > 0 && d2 < 0.5)) {
    throw DomainError("separable_kernel: d1, d2 must lie in (0, 1/2)");
  }
  if (M < 1) throw DomainError("separable_kernel: M must be >= 1");
  CoefficientKernel k(M, KernelFamily::Separable);
  k.params = {{"d1", d1}, {"d2", d2}};
  const auto p1 = frac_binomial_table(static_cast<std::size_t>(M), -d1);
  const auto p2 = frac_binomial_table(static_cast<std::size_t>(M), -d2);
  double s1 = 0, s2 = 0;
  for (int u = 0; u <= M; ++u) {
    s1 += p1[u] * p1[u];
    s2 += p2[u] * p2[u];
    for (int v = 0; v <= M; ++v) k.values[k.index(u, v)] = p1[u] * p2[v];
  }
  // exact square sums sum_u psi_u(-d)^2 = Gamma(1-2d)/Gamma(1-d)^2
  const double t1 = std::tgamma(1 - 2 * d1) / std::pow(std::tgamma(1 - d1), 2);
  const double t2 = std::tgamma(1 - 2 * d2) / std::pow(std::tgamma(1 - d2), 2);
  k.truncated_l2_tail = 1.0 - (s1 * s2) / (t1 * t2);
  return k;
}

}  // namespace lrd
