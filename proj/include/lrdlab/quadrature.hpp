#pragma once
// Thin wrappers over Boost.Math quadrature plus generalized Gauss-Laguerre
// rules from the Golub-Welsch eigenproblem.

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lrdlab/error.hpp"

namespace lrd {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// N-point Gauss-Legendre rule on [-1, 1].
template <unsigned N>
const QuadratureRule& gauss_legendre() {
  static const QuadratureRule rule = [] {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    QuadratureRule r;
    for (std::size_t i = x.size(); i-- > 0;) {
      if (x[i] == 0.0) continue;
      r.nodes.push_back(-x[i]);
      r.weights.push_back(w[i]);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      r.nodes.push_back(x[i]);
      r.weights.push_back(w[i]);
    }
    return r;
  }();
  return rule;
}

/// n-point rule for the weight x^alpha e^{-x} on (0, inf), alpha > -1.
inline QuadratureRule gauss_laguerre(int n, double alpha) {
  if (n < 1 || !(alpha > -1.0)) throw DomainError("gauss_laguerre: need n >= 1 and alpha > -1");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    J(i, i) = 2.0 * i + 1.0 + alpha;
    if (i > 0) {
      const double b = std::sqrt(static_cast<double>(i) * (i + alpha));
      J(i, i - 1) = b;
      J(i - 1, i) = b;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  const double mu0 = std::tgamma(alpha + 1.0);
  QuadratureRule r;
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(es.eigenvalues()(i));
    const double v0 = es.eigenvectors()(0, i);
    r.weights.push_back(mu0 * v0 * v0);
  }
  return r;
}

/// Cached variant keyed by (n, alpha).
inline const QuadratureRule& gauss_laguerre_cached(int n, double alpha) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n, alpha);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, gauss_laguerre(n, alpha)).first;
  return it->second;
}

struct IntegralResult {
  double value = 0;
  double error = 0;
};

/// Adaptive 15-point Gauss-Kronrod on [a, b] (either end may be infinite).
inline IntegralResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                         double rel_tol = 1e-9, unsigned max_depth = 18) {
  double err = 0, l1 = 0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth, rel_tol, &err, &l1);
  if (!std::isfinite(v)) throw QuadratureError("non-finite integral");
  return {v, err};
}

}  // namespace lrd
