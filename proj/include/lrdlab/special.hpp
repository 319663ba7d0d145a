#pragma once
// Fractional binomial weights and one-dimensional walk probabilities,
// exact on small indices and by saddle-point expansion on large ones.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "lrdlab/error.hpp"

namespace lrd {

/// psi_j(d): coefficient of z^j in (1 - z)^d, by psi_0 = 1, psi_j = psi_{j-1} (j-1-d)/j.
inline double frac_binomial_psi(std::int64_t j, double d) {
  if (j < 0) throw DomainError("frac_binomial_psi: j must be >= 0");
  double psi = 1.0;
  for (std::int64_t i = 1; i <= j; ++i) psi *= (static_cast<double>(i) - 1.0 - d) / static_cast<double>(i);
  return psi;
}

/// psi_0(d) .. psi_n(d).
inline std::vector<double> frac_binomial_table(std::size_t n, double d) {
  std::vector<double> psi(n + 1);
  psi[0] = 1.0;
  for (std::size_t i = 1; i <= n; ++i) {
    psi[i] = psi[i - 1] * (static_cast<double>(i) - 1.0 - d) / static_cast<double>(i);
  }
  return psi;
}

/// Continuous extension of psi_x(-delta) = Gamma(x + delta) / (Gamma(delta) Gamma(x + 1)), x >= 0, delta > 0.
class FracWeight {
 public:
  explicit FracWeight(double delta) : delta_(delta), inv_gamma_(1.0 / std::tgamma(delta)) {}

  double operator()(double x) const {
    double scale = inv_gamma_;
    // shift into the range where the Stirling series is accurate
    while (x < 10.0) {
      scale *= (x + 1.0) / (x + delta_);
      x += 1.0;
    }
    return scale * std::exp(log_ratio(x));
  }

 private:
  // log Gamma(x + delta) - log Gamma(x + 1) for x >= 10
  double log_ratio(double x) const {
    const double z1 = x + delta_, z2 = x + 1.0;
    const double main = (z1 - 0.5) * std::log1p((delta_ - 1.0) / z2) + (delta_ - 1.0) * std::log(z2) - (delta_ - 1.0);
    return main + stirling_tail(z1) - stirling_tail(z2);
  }
  static double stirling_tail(double z) {
    const double r = 1.0 / z, r2 = r * r;
    return r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 / 1680.0)));
  }

  double delta_;
  double inv_gamma_;
};

inline double frac_weight(double x, double delta) { return FracWeight(delta)(x); }

/// One-dimensional walk with P(step = 0) = theta and P(step = +-1) = (1 - theta)/2.
/// theta = 0 is the simple +-1 walk, which lives on the parity class n + v even.
struct LazyWalk {
  double theta = 0.5;

  /// Saddle-point approximation of P(W_n = v) for n >= 1 with the first correction term.
  /// For theta = 0 the value is the probability at a point of the right parity.
  double probability(double n, double v) const {
    const double m = std::abs(v) / n;
    if (m >= 1.0) return 0.0;
    const double c = 1.0 - theta;
    double tau;
    if (theta == 0.0) {
      tau = std::atanh(m);
    } else {
      const double num = m * theta + std::sqrt(m * m * theta * theta + c * c * (1.0 - m * m));
      tau = std::log(num / (c * (1.0 - m)));
    }
    const double ch = std::cosh(tau);
    const double g = theta + c * ch;
    const double A = c * ch / g;
    const double B = m;  // c sinh(tau) / g at the saddle
    const double k2 = A - B * B;
    const double k3 = B - 3.0 * A * B + 2.0 * B * B * B;
    const double k4 = k2 - 3.0 * ((B - A * B) * B + A * k2) + 6.0 * B * B * k2;
    const double corr = 1.0 + (k4 / (8.0 * k2 * k2) - 5.0 * k3 * k3 / (24.0 * k2 * k2 * k2)) / n;
    const double expo = n * (std::log(g) - tau * m);
    double p = std::exp(expo) / std::sqrt(2.0 * std::numbers::pi * n * k2) * corr;
    if (theta == 0.0) p *= 2.0;
    return p;
  }
};

/// Exact table of P(W_n = v), 0 <= n <= n_max, 0 <= v <= v_max (symmetric in v),
/// built by the one-step recursion.
class LazyWalkTable {
 public:
  LazyWalkTable() = default;
  LazyWalkTable(double theta, int n_max, int v_max) : theta_(theta), n_max_(n_max), v_max_(v_max) {
    if (n_max < 0 || v_max < 0) throw DomainError("LazyWalkTable: negative size");
    if (theta < 0.0 || theta >= 1.0) throw DomainError("LazyWalkTable: theta must lie in [0,1)");
    check_memory(8.0 * (n_max + 1.0) * (v_max + 1.0), kDefaultMemoryCapBytes, "walk table");
    const std::size_t w = static_cast<std::size_t>(v_max) + 1;
    data_.assign(static_cast<std::size_t>(n_max + 1) * w, 0.0);
    const double half = 0.5 * (1.0 - theta);
    std::vector<double> cur(static_cast<std::size_t>(n_max) + 2, 0.0), nxt(cur.size(), 0.0);
    cur[0] = 1.0;
    for (int n = 0;; ++n) {
      const int hi = std::min(n, v_max);
      std::copy(cur.begin(), cur.begin() + hi + 1, data_.begin() + static_cast<std::ptrdiff_t>(n * w));
      if (n == n_max) break;
      // only v <= v_max + (n_max - n) can still influence stored entries
      const int reach = std::min(n + 1, v_max + n_max - n);
      nxt[0] = theta * cur[0] + 2.0 * half * cur[1];
      for (int v = 1; v <= reach; ++v) nxt[v] = theta * cur[v] + half * (cur[v - 1] + cur[v + 1]);
      // clear what this buffer held two steps ago past the new reach
      const auto stale_end = std::min<std::ptrdiff_t>(reach + 3, static_cast<std::ptrdiff_t>(nxt.size()));
      std::fill(nxt.begin() + reach + 1, nxt.begin() + stale_end, 0.0);
      std::swap(cur, nxt);
    }
  }

  double operator()(int n, int v) const {
    v = std::abs(v);
    if (n < 0 || n > n_max_ || v > v_max_ || v > n) return 0.0;
    return data_[static_cast<std::size_t>(n) * (v_max_ + 1) + v];
  }
  int n_max() const { return n_max_; }
  int v_max() const { return v_max_; }
  double theta() const { return theta_; }

 private:
  double theta_ = 0.5;
  int n_max_ = 0;
  int v_max_ = 0;
  std::vector<double> data_;
};

}  // namespace lrd
