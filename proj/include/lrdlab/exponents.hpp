#pragma once
// Exponent algebra of the anisotropic moving-average model and the
// regime map of partial-sum scaling limits of A_k(Y).

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "lrdlab/error.hpp"

namespace lrd {

inline constexpr double kDefaultBoundaryTol = 1e-9;

/// Derived parameter set of a kernel decaying like
/// (|t|^2 + |s|^{2 q2/q1})^{-q1/2}.
struct ModelExponents {
  double q1 = 0;      // horizontal kernel decay
  double q2 = 0;      // vertical kernel decay
  double Q = 0;       // 1/q1 + 1/q2, in (1,2)
  double p1 = 0;      // covariance decay, q1 (2 - Q)
  double p2 = 0;      // covariance decay, q2 (2 - Q)
  double P = 0;       // 1/p1 + 1/p2
  double gamma0 = 0;  // q1/q2 = p1/p2, the transition point
};

inline ModelExponents derive_exponents(double q1, double q2) {
  if (!(q1 > 0) || !(q2 > 0)) {
    throw DomainError("q1 and q2 must be positive (got " + std::to_string(q1) + ", " +
                      std::to_string(q2) + ")");
  }
  ModelExponents e;
  e.q1 = q1;
  e.q2 = q2;
  e.Q = 1.0 / q1 + 1.0 / q2;
  if (!(e.Q > 1.0 && e.Q < 2.0)) {
    throw DomainError("Q = 1/q1 + 1/q2 = " + std::to_string(e.Q) +
                      " outside (1,2): the field is either not long-range dependent "
                      "or not square summable");
  }
  e.p1 = q1 * (2.0 - e.Q);
  e.p2 = q2 * (2.0 - e.Q);
  e.P = 1.0 / e.p1 + 1.0 / e.p2;
  e.gamma0 = q1 / q2;
  return e;
}

/// Inverse map (p1, p2) -> (q1, q2): q_i = (p_i / 2)(1 + P).
inline std::pair<double, double> q_from_p(double p1, double p2) {
  if (!(p1 > 0) || !(p2 > 0)) throw DomainError("p1 and p2 must be positive");
  const double P = 1.0 / p1 + 1.0 / p2;
  return {0.5 * p1 * (1.0 + P), 0.5 * p2 * (1.0 + P)};
}

struct SubordinationOrder {
  int k = 1;
  explicit SubordinationOrder(int order) : k(order) {
    if (order < 1) throw DomainError("subordination order k must be >= 1");
  }
};

enum class RegimeTag {
  WellBalanced,
  UnbalancedPlusSlide,
  UnbalancedPlusFBS,
  UnbalancedMinusSlide,
  UnbalancedMinusFBS,
  ShortRangeCLT,
  Boundary,
};

inline std::string_view to_string(RegimeTag tag) {
  switch (tag) {
    case RegimeTag::WellBalanced: return "WellBalanced";
    case RegimeTag::UnbalancedPlusSlide: return "UnbalancedPlusSlide";
    case RegimeTag::UnbalancedPlusFBS: return "UnbalancedPlusFBS";
    case RegimeTag::UnbalancedMinusSlide: return "UnbalancedMinusSlide";
    case RegimeTag::UnbalancedMinusFBS: return "UnbalancedMinusFBS";
    case RegimeTag::ShortRangeCLT: return "ShortRangeCLT";
    case RegimeTag::Boundary: return "Boundary";
  }
  return "?";
}

struct HurstPair {
  double H1 = 0;
  double H2 = 0;
};

struct Regime {
  RegimeTag tag = RegimeTag::Boundary;
  double H = std::nan("");              // NaN for Boundary
  std::optional<HurstPair> hurst_pair;  // unbalanced regimes only
};

namespace detail {

inline RegimeTag regime_tag(const ModelExponents& e, int k, double gamma, double tol) {
  const double kd = static_cast<double>(k);
  if (std::abs(kd - e.P) <= tol) return RegimeTag::Boundary;
  if (kd > e.P) return RegimeTag::ShortRangeCLT;
  if (std::abs(gamma - e.gamma0) <= tol) return RegimeTag::WellBalanced;
  if (gamma > e.gamma0) {
    const double kp2 = kd * e.p2;
    if (std::abs(kp2 - 1.0) <= tol) return RegimeTag::Boundary;
    return kp2 < 1.0 ? RegimeTag::UnbalancedPlusSlide : RegimeTag::UnbalancedPlusFBS;
  }
  const double kp1 = kd * e.p1;
  if (std::abs(kp1 - 1.0) <= tol) return RegimeTag::Boundary;
  return kp1 < 1.0 ? RegimeTag::UnbalancedMinusSlide : RegimeTag::UnbalancedMinusFBS;
}

inline double regime_H(const ModelExponents& e, int k, double gamma, RegimeTag tag) {
  const double kd = static_cast<double>(k);
  switch (tag) {
    case RegimeTag::WellBalanced: return 1.0 + e.gamma0 - kd * e.p1 / 2.0;
    case RegimeTag::UnbalancedPlusSlide: return 1.0 + gamma * (1.0 - kd * e.p2 / 2.0);
    case RegimeTag::UnbalancedPlusFBS: return (1.0 + e.gamma0 / 2.0 - kd * e.p1 / 2.0) + gamma / 2.0;
    case RegimeTag::UnbalancedMinusSlide: return gamma + 1.0 - kd * e.p1 / 2.0;
    case RegimeTag::UnbalancedMinusFBS:
      return gamma * (1.0 + 1.0 / (2.0 * e.gamma0) - kd * e.p2 / 2.0) + 0.5;
    case RegimeTag::ShortRangeCLT: return (1.0 + gamma) / 2.0;
    case RegimeTag::Boundary: break;
  }
  return std::nan("");
}

inline std::optional<HurstPair> regime_pair(const ModelExponents& e, int k, RegimeTag tag) {
  const double kd = static_cast<double>(k);
  switch (tag) {
    case RegimeTag::UnbalancedPlusSlide: return HurstPair{1.0, 1.0 - kd * e.p2 / 2.0};
    case RegimeTag::UnbalancedPlusFBS: return HurstPair{1.0 + e.gamma0 / 2.0 - kd * e.p1 / 2.0, 0.5};
    case RegimeTag::UnbalancedMinusSlide: return HurstPair{1.0 - kd * e.p1 / 2.0, 1.0};
    case RegimeTag::UnbalancedMinusFBS:
      return HurstPair{0.5, 1.0 + 1.0 / (2.0 * e.gamma0) - kd * e.p2 / 2.0};
    default: return std::nullopt;
  }
}

}  // namespace detail

/// Regime of the partial sums of A_k(Y) over rectangles lambda x lambda^gamma.
/// Boundary covers k = P and, on the side of gamma0 where it matters, k p_i = 1.
inline Regime classify_regime(const ModelExponents& e, SubordinationOrder k, double gamma,
                              double boundary_tol = kDefaultBoundaryTol) {
  if (!(gamma > 0)) throw DomainError("gamma must be positive");
  Regime r;
  r.tag = detail::regime_tag(e, k.k, gamma, boundary_tol);
  r.H = detail::regime_H(e, k.k, gamma, r.tag);
  r.hurst_pair = detail::regime_pair(e, k.k, r.tag);
  return r;
}

/// Variance exponent: Var S ~ c lambda^{2 H(gamma)}.
inline double theoretical_H(const ModelExponents& e, SubordinationOrder k, double gamma,
                            double boundary_tol = kDefaultBoundaryTol) {
  const Regime r = classify_regime(e, k, gamma, boundary_tol);
  if (r.tag == RegimeTag::Boundary) {
    throw BoundaryError("k = " + std::to_string(k.k) + ", gamma = " + std::to_string(gamma) +
                        " lies on a regime boundary (k p_i = 1 or k = P)");
  }
  return r.H;
}

/// (H1, H2) of the FBS-type covariance of the unbalanced limit.
inline HurstPair hurst_pair(const ModelExponents& e, SubordinationOrder k, double gamma,
                            double boundary_tol = kDefaultBoundaryTol) {
  const Regime r = classify_regime(e, k, gamma, boundary_tol);
  if (r.tag == RegimeTag::Boundary) throw BoundaryError("regime boundary");
  if (!r.hurst_pair) {
    throw DomainError(std::string("no FBS-type Hurst pair in regime ") +
                      std::string(to_string(r.tag)));
  }
  return *r.hurst_pair;
}

}  // namespace lrd
