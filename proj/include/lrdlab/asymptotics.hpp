#pragma once
// Convolutions of generalized homogeneous functions, angular limits, lattice
// sums over rectangle pairs and their power-law asymptotics, covariance
// profiles and fractional Brownian sheet covariances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "lrdlab/error.hpp"
#include "lrdlab/exponents.hpp"
#include "lrdlab/fft.hpp"
#include "lrdlab/kernels.hpp"
#include "lrdlab/model_covariance.hpp"
#include "lrdlab/models.hpp"
#include "lrdlab/parallel.hpp"
#include "lrdlab/quadrature.hpp"

namespace lrd {

/// f(t, s) = rho(t,s)^{-h} L(t / rho(t,s)), so that f(l t, l^varpi s) = l^{-h} f(t, s).
struct HomogeneousSpec {
  double h = 1;
  double varpi = 1;
  AngularFunction L = AngularFunction::constant(1.0);

  double operator()(double t, double s) const {
    const double r = quasi_norm(t, s, varpi);
    return std::pow(r, -h) * L(t / r);
  }
};

struct QuadValue {
  double value = 0;
  double error = 0;
};

namespace detail {

/// int_a^b by adaptive Gauss-Kronrod; the error estimate is accumulated into *err.
inline double gk(const std::function<double(double)>& f, double a, double b, double tol, double* err,
                 unsigned depth = 12) {
  const auto r = integrate_adaptive(f, a, b, tol, depth);
  if (err) *err += r.error;
  return r.value;
}

/// int over R^2 of g(c + x) against the quasi-polar area element around c:
/// x = (+-rho cos phi, +-rho^varpi sin^varpi phi), dx = varpi rho^varpi sin^{varpi-1} phi.
/// `near` is the decay order of g at c (g ~ rho^{-near}), `far` its order at infinity.
inline double quasi_polar_plane(const std::function<double(double, double)>& g, double ct, double cs, double varpi,
                                double near, double far, double tol, double* err) {
  const double alpha = 1.0 + varpi - near, beta = far - 1.0 - varpi;
  if (!(alpha > 0) || !(beta > 0)) throw DomainError("quasi-polar integral diverges at the centre or at infinity");
  const double r_in = 0.5, r_out = 2.0;
  auto angular = [&](double yphi) {
    // phi = (pi/2) y^{1/varpi} flattens sin^{varpi-1} phi at phi = 0
    const double phi = 0.5 * std::numbers::pi * std::pow(yphi, 1.0 / varpi);
    const double dphi = 0.5 * std::numbers::pi / varpi * std::pow(yphi, 1.0 / varpi - 1.0);
    const double c = std::cos(phi), sn = std::sin(phi);
    const double ang = varpi * std::pow(sn, varpi - 1.0) * dphi;
    auto ring = [&](double rho) {
      const double u = rho * c, v = std::pow(rho, varpi) * std::pow(sn, varpi);
      double acc = 0;
      for (int su : {-1, 1})
        for (int sv : {-1, 1}) acc += g(ct + su * u, cs + sv * v);
      return acc * std::pow(rho, varpi);
    };
    double e = 0;
    // rho = r_in y^{1/alpha} on (0, r_in)
    const double inner = gk(
        [&](double y) {
          if (y <= 0) return 0.0;
          const double rho = r_in * std::pow(y, 1.0 / alpha);
          return ring(rho) * r_in / alpha * std::pow(y, 1.0 / alpha - 1.0);
        },
        0.0, 1.0, tol, &e);
    const double middle = gk(ring, r_in, r_out, tol, &e);
    // rho = r_out y^{-1/beta} on (r_out, inf)
    const double outer = gk(
        [&](double y) {
          if (y <= 0) return 0.0;
          const double rho = r_out * std::pow(y, -1.0 / beta);
          return ring(rho) * r_out / beta * std::pow(y, -1.0 / beta - 1.0);
        },
        0.0, 1.0, tol, &e);
    return ang * (inner + middle + outer);
  };
  return gk(angular, 0.0, 1.0, tol, err, 10);
}

inline void check_convolution(const HomogeneousSpec& f1, const HomogeneousSpec& f2) {
  if (std::abs(f1.varpi - f2.varpi) > 1e-14) throw DomainError("convolution factors must share varpi");
  const double v = f1.varpi;
  if (!(f1.h > 0 && f1.h < 1 + v && f2.h > 0 && f2.h < 1 + v)) throw DomainError("convolution needs 0 < h_i < 1 + varpi");
  if (!(f1.h + f2.h > 1 + v)) throw DomainError("convolution needs h_1 + h_2 > 1 + varpi");
}

/// (f1 * f2)(p) at a point p of the unit quasi-circle, at one tolerance.
inline QuadValue unit_convolution(const HomogeneousSpec& f1, const HomogeneousSpec& f2, double pt, double ps, double tol) {
  const double varpi = f1.varpi;
  constexpr double m = 8.0;  // sharpness of the partition of unity
  // integrand f1(x) f2(x + p); x = 0 and x = -p are the singular points
  auto part = [&](bool around_origin) {
    return [&, around_origin](double ut, double us) {
      const double da = quasi_norm(ut, us, varpi), db = quasi_norm(ut + pt, us + ps, varpi);
      if (da == 0.0 || db == 0.0) return 0.0;
      const double wa = std::pow(db, m), wb = std::pow(da, m);
      const double w = around_origin ? wa / (wa + wb) : wb / (wa + wb);
      if (w == 0.0) return 0.0;
      return w * std::pow(da, -f1.h) * f1.L(ut / da) * std::pow(db, -f2.h) * f2.L((ut + pt) / db);
    };
  };
  double err = 0;
  const double far = f1.h + f2.h;
  const double a = quasi_polar_plane(part(true), 0.0, 0.0, varpi, f1.h, far, tol, &err);
  const double b = quasi_polar_plane(part(false), -pt, -ps, varpi, f2.h, far, tol, &err);
  return {a + b, err};
}

}  // namespace detail

/// (f1 * f2)(t, s) = int f1(u, v) f2(u + t, v + s) du dv. Computed at the unit
/// quasi-circle point and rescaled by rho^{1 + varpi - h1 - h2}; the error is
/// the change between the two finest tolerances of a refinement sequence.
inline QuadValue continuous_convolution(const HomogeneousSpec& f1, const HomogeneousSpec& f2, double t, double s,
                                        double rel_tol = 1e-6) {
  detail::check_convolution(f1, f2);
  if (t == 0.0 && s == 0.0) throw SingularityError("convolution evaluated at the origin");
  const double varpi = f1.varpi;
  const double rho = quasi_norm(t, s, varpi);
  const double pt = t / rho, ps = s / std::pow(rho, varpi);
  QuadValue prev = detail::unit_convolution(f1, f2, pt, ps, 1e-5);
  for (double tol : {1e-7, 1e-9}) {
    const QuadValue cur = detail::unit_convolution(f1, f2, pt, ps, tol);
    const double change = std::abs(cur.value - prev.value);
    prev = cur;
    prev.error = std::max(change, cur.error);
    if (change <= rel_tol * std::abs(cur.value)) break;
  }
  if (!(prev.error <= 1e-3 * std::abs(prev.value))) {
    throw QuadratureError("convolution quadrature did not stabilise (error " + std::to_string(prev.error) + ")");
  }
  const double scale = std::pow(rho, 1.0 + varpi - f1.h - f2.h);
  return {prev.value * scale, prev.error * scale};
}

/// L12(z) = (f1 * f2)(z, (1 - z^2)^{varpi/2}).
inline QuadValue angular_L12(double z, const HomogeneousSpec& f1, const HomogeneousSpec& f2, double rel_tol = 1e-6) {
  if (!(z >= -1.0 && z <= 1.0)) throw DomainError("angular_L12: z must lie in [-1, 1]");
  return continuous_convolution(f1, f2, z, std::pow(std::max(0.0, 1.0 - z * z), f1.varpi / 2.0), rel_tol);
}

/// Piecewise-linear interpolant of an angular function on a grid uniform in arccos z.
class AngularTable {
 public:
  AngularTable(const std::function<double(double)>& f, int n) : n_(n), values_(static_cast<std::size_t>(n) + 1) {
    if (n < 2) throw DomainError("angular table needs at least 2 intervals");
    parallel_for(0, values_.size(), [&](std::size_t i) { values_[i] = f(std::cos(std::numbers::pi * i / n_)); });
  }

  double operator()(double z) const {
    const double x = std::acos(std::clamp(z, -1.0, 1.0)) / std::numbers::pi * n_;
    const int i = std::min(static_cast<int>(x), n_ - 1);
    const double f = x - i;
    return (1 - f) * values_[i] + f * values_[i + 1];
  }

  int intervals() const { return n_; }
  const std::vector<double>& values() const { return values_; }

 private:
  int n_;
  std::vector<double> values_;
};

/// B = sum over (t_i, s_i) in K, i = 1, 2 of b(t_1 - t_2, s_1 - s_2), as the
/// weighted lag sum sum_{|t|<N1, |s|<N2} (N1 - |t|)(N2 - |s|) b(t, s).
/// `b` is called with t, s >= 0 when `quadrant_symmetric`.
inline double weighted_lag_sum(const std::function<double(std::int64_t, std::int64_t)>& b, std::int64_t N1,
                               std::int64_t N2, bool quadrant_symmetric) {
  const std::int64_t t0 = quadrant_symmetric ? 0 : -(N1 - 1);
  std::vector<double> rows(static_cast<std::size_t>(N1 - t0));
  parallel_for(0, rows.size(), [&](std::size_t i) {
    const std::int64_t t = t0 + static_cast<std::int64_t>(i);
    double acc = 0;
    if (quadrant_symmetric) {
      acc = static_cast<double>(N2) * b(t, 0);
      for (std::int64_t s = 1; s < N2; ++s) acc += 2.0 * static_cast<double>(N2 - s) * b(t, s);
    } else {
      for (std::int64_t s = -(N2 - 1); s < N2; ++s) acc += static_cast<double>(N2 - std::abs(s)) * b(t, s);
    }
    const double wt = static_cast<double>(N1 - std::abs(t));
    rows[i] = (quadrant_symmetric && t > 0 ? 2.0 : 1.0) * wt * acc;
  });
  double total = 0;
  for (double r : rows) total += r;
  return total;
}

inline constexpr double kDefaultLagSumCap = 2e9;

/// Lattice version b(t,s) = rho_+^{-h} L(t / rho_+) of a homogeneous spec.
inline double blambda_bruteforce(const HomogeneousSpec& b, double lambda, double gamma, double cap = kDefaultLagSumCap) {
  const std::int64_t N1 = static_cast<std::int64_t>(std::floor(lambda * (1.0 + 1e-12)));
  const std::int64_t N2 = static_cast<std::int64_t>(std::floor(std::pow(lambda, gamma) * (1.0 + 1e-12)));
  if (N1 < 1 || N2 < 1) throw DomainError("blambda: empty rectangle");
  if (static_cast<double>(N1) * static_cast<double>(N2) > cap) {
    throw SizeCapError("blambda: floor(lambda) * floor(lambda^gamma) exceeds the lag-sum cap");
  }
  std::vector<double> s_term(static_cast<std::size_t>(N2));
  for (std::int64_t s = 0; s < N2; ++s) s_term[s] = std::pow(static_cast<double>(s), 2.0 / b.varpi);
  auto f = [&](std::int64_t t, std::int64_t s) {
    const double r = std::max(1.0, std::sqrt(static_cast<double>(t) * t + s_term[static_cast<std::size_t>(std::abs(s))]));
    return std::pow(r, -b.h) * b.L(static_cast<double>(t) / r);
  };
  return weighted_lag_sum(f, N1, N2, b.L.even);
}

/// Same sum as blambda_bruteforce with the s-sum beyond `direct_s` replaced by
/// the midpoint Euler-Maclaurin formula (integral plus first- and third-derivative
/// end corrections). The summand varies on scale s, so the tail is accurate to
/// about direct_s^{-5} relative.
inline double blambda_lattice(const HomogeneousSpec& b, double lambda, double gamma, std::int64_t direct_s = 256) {
  const std::int64_t N1 = static_cast<std::int64_t>(std::floor(lambda * (1.0 + 1e-12)));
  const double N2 = std::floor(std::pow(lambda, gamma) * (1.0 + 1e-12));
  if (N1 < 1 || N2 < 1) throw DomainError("blambda: empty rectangle");
  if (N2 > 9e15) throw SizeCapError("blambda_lattice: floor(lambda^gamma) exceeds exact integer range");
  if (static_cast<double>(N1) * std::min<double>(N2, direct_s) > kDefaultLagSumCap) {
    throw SizeCapError("blambda_lattice: direct part exceeds the lag-sum cap");
  }
  const std::int64_t n2 = static_cast<std::int64_t>(N2);
  const std::int64_t s_direct = std::min<std::int64_t>(n2, direct_s);
  auto f = [&](double t, double s) {
    const double r = std::max(1.0, std::sqrt(t * t + std::pow(std::abs(s), 2.0 / b.varpi)));
    return std::pow(r, -b.h) * b.L(t / r);
  };
  const bool fold = b.L.even;
  const std::int64_t t0 = fold ? 0 : -(N1 - 1);
  std::vector<double> rows(static_cast<std::size_t>(N1 - t0));
  parallel_for(0, rows.size(), [&](std::size_t i) {
    const double t = static_cast<double>(t0 + static_cast<std::int64_t>(i));
    double acc = N2 * f(t, 0.0);
    for (std::int64_t s = 1; s < s_direct; ++s) acc += 2.0 * (N2 - s) * f(t, static_cast<double>(s));
    if (s_direct < n2) {
      auto g = [&](double s) { return (N2 - s) * f(t, s); };
      const double a = s_direct - 0.5, z = N2 - 0.5;
      double e = 0;
      const double integral = detail::gk(
          [&](double u) {
            const double s = std::exp(u);
            return g(s) * s;
          },
          std::log(a), std::log(z), 1e-14, &e, 30);
      auto d1 = [&](double x) {
        return (g(x - 2) - 8 * g(x - 1) + 8 * g(x + 1) - g(x + 2)) / 12.0;
      };
      auto d3 = [&](double x) { return (-g(x - 4) + 2 * g(x - 2) - 2 * g(x + 2) + g(x + 4)) / 16.0; };
      double tail = integral - (d1(z) - d1(a)) / 24.0 + 7.0 / 5760.0 * (d3(z) - d3(a));
      if (n2 - s_direct < 8) {
        tail = 0;
        for (std::int64_t s = s_direct; s < n2; ++s) tail += g(static_cast<double>(s));
      }
      acc += 2.0 * tail;
    }
    const double wt = static_cast<double>(N1) - std::abs(t);
    rows[i] = (fold && t > 0 ? 2.0 : 1.0) * wt * acc;
  });
  double total = 0;
  for (double r : rows) total += r;
  return total;
}

enum class HCCase { I, II, III, IV, V };

inline std::string to_string(HCCase c) {
  switch (c) {
    case HCCase::I: return "I";
    case HCCase::II: return "II";
    case HCCase::III: return "III";
    case HCCase::IV: return "IV";
    case HCCase::V: return "V";
  }
  return "?";
}

struct HCPrediction {
  HCCase which = HCCase::I;
  double Hcal = 0;
  double Ccal = 0;
  double quadrature_error = 0;
};

namespace detail {

/// int_0^1 (1 - x) x^a dx
inline double triangle_moment(double a) { return 1.0 / ((a + 1.0) * (a + 2.0)); }

/// int_R g(x) dx for g ~ |x|^{-decay} at infinity, split at |x| = 1.
inline double line_integral(const std::function<double(double)>& g, double decay, double tol, double* err) {
  if (!(decay > 1)) throw DomainError("line integral diverges");
  const double beta = decay - 1.0;
  double acc = 0;
  for (int sg : {-1, 1}) {
    acc += gk([&](double x) { return g(sg * x); }, 0.0, 1.0, tol, err);
    acc += gk(
        [&](double y) {
          if (y <= 0) return 0.0;
          const double x = std::pow(y, -1.0 / beta);
          return g(sg * x) / beta * std::pow(y, -1.0 / beta - 1.0);
        },
        0.0, 1.0, tol, err);
  }
  return acc;
}

}  // namespace detail

/// Case, exponent and constant of B_lambda(gamma) ~ C lambda^{2H} for
/// b = rho^{-h} L(t / rho): (I) gamma = varpi; (II) gamma > varpi, h < varpi;
/// (III) gamma > varpi, h > varpi; (IV) gamma < varpi, h < 1; (V) gamma < varpi, h > 1.
inline HCPrediction hc_prediction(double h, double varpi, double gamma, const AngularFunction& L,
                                  double boundary_tol = 1e-9, double tol = 1e-10) {
  if (!(varpi > 0 && gamma > 0)) throw DomainError("hc_prediction: varpi and gamma must be positive");
  if (!(h > 0 && h < 1 + varpi)) throw DomainError("hc_prediction needs 0 < h < 1 + varpi");
  HCPrediction out;
  const HomogeneousSpec b{h, varpi, L};
  double err = 0;
  if (std::abs(gamma - varpi) <= boundary_tol) {
    out.which = HCCase::I;
    out.Hcal = 1 + varpi - h / 2;
    // int over [-1,1]^2 of (1 - |t|)(1 - |s|) b(t, s) in quasi-polar coordinates;
    // the square is rho <= 1 / max(cos phi, sin phi)
    auto angular = [&](double phi, double dphi) {
      const double c = std::cos(phi), sn = std::sin(phi);
      const double R = 1.0 / std::max(c, sn);
      const double alpha = 1 + varpi - h;
      const double Lsum = L(c) + L(-c);
      const double radial = detail::gk(
          [&](double y) {
            if (y <= 0) return 0.0;
            const double rho = R * std::pow(y, 1.0 / alpha);
            const double u = rho * c, v = std::pow(rho * sn, varpi);
            // rho^{varpi - h} d rho = R^alpha / alpha dy
            return (1 - u) * (1 - std::min(1.0, v));
          },
          0.0, 1.0, tol, &err);
      return 2.0 * Lsum * varpi * std::pow(sn, varpi - 1.0) * dphi * std::pow(R, alpha) / alpha * radial;
    };
    const double lo = detail::gk(
        [&](double y) {
          if (y <= 0) return 0.0;
          const double phi = std::numbers::pi / 4 * std::pow(y, 1.0 / varpi);
          return angular(phi, std::numbers::pi / 4 / varpi * std::pow(y, 1.0 / varpi - 1.0));
        },
        0.0, 1.0, tol, &err);
    const double hi = detail::gk([&](double phi) { return angular(phi, 1.0); }, std::numbers::pi / 4,
                                 std::numbers::pi / 2, tol, &err);
    out.Ccal = lo + hi;
  } else if (gamma > varpi) {
    if (std::abs(h - varpi) <= boundary_tol) throw BoundaryError("hc_prediction: h = varpi is a case boundary");
    if (h < varpi) {
      out.which = HCCase::II;
      out.Hcal = 1 + gamma - gamma * h / (2 * varpi);
      // int_{-1}^{1} (1 - |s|) |s|^{-h/varpi} L(0) ds, with s = y^{1/(1 - h/varpi)}
      const double a = 1 - h / varpi;
      const double I = detail::gk(
          [&](double y) {
            if (y <= 0) return 0.0;
            return (1 - std::pow(y, 1.0 / a)) / a;
          },
          0.0, 1.0, tol, &err);
      out.Ccal = 2.0 * L(0.0) * I;
    } else {
      out.which = HCCase::III;
      out.Hcal = 1 + gamma / 2 - (h - varpi) / 2;
      // int_R b(+-|t|, s) ds = |t|^{varpi - h} int_R b(+-1, sigma) d sigma
      double G = 0;
      for (double sg : {-1.0, 1.0}) G += detail::line_integral([&](double x) { return b(sg, x); }, h / varpi, tol, &err);
      out.Ccal = G * detail::triangle_moment(varpi - h);
    }
  } else {
    if (std::abs(h - 1) <= boundary_tol) throw BoundaryError("hc_prediction: h = 1 is a case boundary");
    if (h < 1) {
      out.which = HCCase::IV;
      out.Hcal = 1 + gamma - h / 2;
      out.Ccal = (L(1.0) + L(-1.0)) * detail::triangle_moment(-h);
    } else {
      out.which = HCCase::V;
      out.Hcal = 0.5 + gamma - gamma * (h - 1) / (2 * varpi);
      // int_R b(t, s) dt = |s|^{(1 - h)/varpi} int_R b(tau, 1) d tau
      const double G = detail::line_integral([&](double x) { return b(x, 1.0); }, h, tol, &err);
      out.Ccal = 2.0 * G * detail::triangle_moment((1 - h) / varpi);
    }
  }
  out.quadrature_error = err;
  return out;
}

/// Angular function of r_X: L_X(z) = k! L12(z)^k with L12 the unit-circle
/// self-convolution of the kernel limit rho^{-q1} L0.
class CovarianceAngular {
 public:
  CovarianceAngular(const ModelExponents& e, int k, const AngularFunction& L0, int intervals = 48)
      : k_(k),
        table_(
            [&](double z) {
              const HomogeneousSpec a{e.q1, e.gamma0, L0};
              return angular_L12(z, a, a).value;
            },
            intervals) {
    fact_ = 1;
    for (int i = 2; i <= k; ++i) fact_ *= i;
  }

  double L12(double z) const { return table_(z); }
  double operator()(double z) const { return fact_ * std::pow(table_(z), k_); }
  AngularFunction as_function() const {
    auto self = *this;
    return {[self](double z) { return self(z); }, true, false};
  }

 private:
  int k_;
  double fact_ = 1;
  AngularTable table_;
};

/// Limit constant c(gamma) of Var S^X ~ c lambda^{2 H(gamma)}: the constant of
/// the lattice-sum asymptotics for b = r_X ~ rho^{-k p1} L_X.
inline HCPrediction limit_constant_c(const ModelExponents& e, int k, double gamma, const AngularFunction& L0,
                                     int intervals = 48) {
  if (!(k < e.P)) throw DomainError("limit_constant_c requires k < P");
  const Regime reg = classify_regime(e, SubordinationOrder(k), gamma);
  if (reg.tag == RegimeTag::Boundary) throw BoundaryError("limit constant undefined on a regime boundary");
  const CovarianceAngular LX(e, k, L0, intervals);
  return hc_prediction(k * e.p1, e.gamma0, gamma, LX.as_function());
}

/// E B(x1,y1) B(x2,y2) of the fractional Brownian sheet.
inline double fbs_covariance(double H1, double H2, double x1, double y1, double x2, double y2) {
  if (!(H1 > 0 && H1 <= 1 && H2 > 0 && H2 <= 1)) throw DomainError("fbs_covariance: H_i must lie in (0, 1]");
  if (!(x1 > 0 && y1 > 0 && x2 > 0 && y2 > 0)) throw DomainError("fbs_covariance: coordinates must be positive");
  const double a = std::pow(x1, 2 * H1) + std::pow(x2, 2 * H1) - std::pow(std::abs(x1 - x2), 2 * H1);
  const double b = std::pow(y1, 2 * H2) + std::pow(y2, 2 * H2) - std::pow(std::abs(y1 - y2), 2 * H2);
  return 0.25 * a * b;
}

/// r(t, s) on the window |t| <= T, |s| <= S.
struct CovarianceProfile {
  std::string source;
  int T = 0;
  int S = 0;
  std::vector<double> r;
  std::vector<double> se;  // empty for exact profiles
  double kp1 = std::nan("");

  std::size_t index(int t, int s) const {
    return static_cast<std::size_t>(t + T) * static_cast<std::size_t>(2 * S + 1) + static_cast<std::size_t>(s + S);
  }
  bool contains(int t, int s) const { return std::abs(t) <= T && std::abs(s) <= S; }
  double at(int t, int s) const {
    if (!contains(t, s)) throw OutOfBounds("lag outside the covariance window");
    return r[index(t, s)];
  }
  double se_at(int t, int s) const { return se.empty() ? 0.0 : se[index(t, s)]; }
};

/// Autocovariance of a truncated kernel by FFT, exact for the truncated field.
inline CovarianceProfile covariance_exact(const CoefficientKernel& k, int T, int S, double mem_cap = kDefaultMemoryCapBytes) {
  const int w = k.width();
  const int L0 = fast_fft_size(w + T), L1 = fast_fft_size(w + S);
  const std::size_t nr = static_cast<std::size_t>(L0) * L1, nc = static_cast<std::size_t>(L0) * (L1 / 2 + 1);
  check_memory(8.0 * nr + 16.0 * nc + 8.0 * (2.0 * T + 1) * (2.0 * S + 1), mem_cap, "covariance_exact FFT");
  auto buf = alloc_real(nr);
  auto spec = alloc_complex(nc);
  std::fill(buf.get(), buf.get() + nr, 0.0);
  for (int i = 0; i < w; ++i)
    for (int j = 0; j < w; ++j) buf[static_cast<std::size_t>(i) * L1 + j] = k.values[static_cast<std::size_t>(i) * w + j];
  fft_r2c(L0, L1, buf.get(), spec.get());
  for (std::size_t i = 0; i < nc; ++i) {
    spec[i][0] = spec[i][0] * spec[i][0] + spec[i][1] * spec[i][1];
    spec[i][1] = 0.0;
  }
  fft_c2r(L0, L1, spec.get(), buf.get());
  const double scale = 1.0 / static_cast<double>(nr);
  CovarianceProfile p;
  p.source = "exact-kernel";
  p.T = T;
  p.S = S;
  p.r.assign(static_cast<std::size_t>(2 * T + 1) * (2 * S + 1), 0.0);
  // circular correlation: lag (t, s) sits at index (t mod L0, s mod L1); lags beyond 2M are zero
  for (int t = -T; t <= T; ++t)
    for (int s = -S; s <= S; ++s) {
      if (std::abs(t) >= w || std::abs(s) >= w) continue;
      const int i = (t % L0 + L0) % L0, j = (s % L1 + L1) % L1;
      p.r[p.index(t, s)] = buf[static_cast<std::size_t>(i) * L1 + j] * scale;
    }
  return p;
}

/// r at individual lags by direct summation, for kernels too large for the FFT.
inline std::vector<double> covariance_exact_lags(const CoefficientKernel& k, const std::vector<std::pair<int, int>>& lags) {
  std::vector<double> out(lags.size());
  parallel_for(0, lags.size(), [&](std::size_t i) { out[i] = kernel_autocovariance(k, lags[i].first, lags[i].second); });
  return out;
}

/// k! r_Y^k on the window: the covariance of A_k(Y) for Gaussian Y.
inline CovarianceProfile covariance_model(const QuadrantCovariance& rY, int k, int T, int S) {
  double fact = 1;
  for (int i = 2; i <= k; ++i) fact *= i;
  const auto q = rY.quadrant(T + 1, S + 1);
  CovarianceProfile p;
  p.source = "model-" + rY.name();
  p.T = T;
  p.S = S;
  p.r.resize(static_cast<std::size_t>(2 * T + 1) * (2 * S + 1));
  for (int t = -T; t <= T; ++t)
    for (int s = -S; s <= S; ++s)
      p.r[p.index(t, s)] = fact * std::pow(q[static_cast<std::size_t>(std::abs(t)) * (S + 1) + std::abs(s)], k);
  return p;
}

/// Replica-averaged sample autocovariance of X on N x N fields, normalised by the
/// number of valid pairs at each lag (E X = 0, so no centring).
inline CovarianceProfile covariance_empirical(FieldGenerator& gen, int T, int S, int N, int R, std::uint64_t seed) {
  if (R < 2) throw DomainError("covariance_empirical needs R >= 2");
  if (T >= N || S >= N) throw DomainError("lag window must be smaller than the field");
  const int L0 = fast_fft_size(N + T), L1 = fast_fft_size(N + S);
  const std::size_t nr = static_cast<std::size_t>(L0) * L1, nc = static_cast<std::size_t>(L0) * (L1 / 2 + 1);
  const std::size_t nw = static_cast<std::size_t>(2 * T + 1) * (2 * S + 1);
  const int pairs = (R + 1) / 2;
  std::vector<std::vector<double>> per(static_cast<std::size_t>(2 * pairs), std::vector<double>(nw));
  gen.prepare(N, N);
  parallel_for(0, static_cast<std::size_t>(pairs), [&](std::size_t p) {
    const auto fields = gen.pair(N, N, derive_key(seed, p));
    auto buf = alloc_real(nr);
    auto spec = alloc_complex(nc);
    for (int b = 0; b < 2; ++b) {
      const LatticeField& f = b == 0 ? fields.first : fields.second;
      std::fill(buf.get(), buf.get() + nr, 0.0);
      for (int t = 0; t < N; ++t)
        for (int s = 0; s < N; ++s) buf[static_cast<std::size_t>(t) * L1 + s] = f.at(t, s);
      fft_r2c(L0, L1, buf.get(), spec.get());
      for (std::size_t i = 0; i < nc; ++i) {
        spec[i][0] = spec[i][0] * spec[i][0] + spec[i][1] * spec[i][1];
        spec[i][1] = 0.0;
      }
      fft_c2r(L0, L1, spec.get(), buf.get());
      auto& out = per[2 * p + b];
      for (int t = -T; t <= T; ++t)
        for (int s = -S; s <= S; ++s) {
          const int i = (t % L0 + L0) % L0, j = (s % L1 + L1) % L1;
          const double count = static_cast<double>(N - std::abs(t)) * (N - std::abs(s));
          out[static_cast<std::size_t>(t + T) * (2 * S + 1) + (s + S)] = buf[static_cast<std::size_t>(i) * L1 + j] / (count * nr);
        }
    }
  });
  per.resize(static_cast<std::size_t>(R));
  CovarianceProfile prof;
  prof.source = "empirical";
  prof.T = T;
  prof.S = S;
  prof.r.assign(nw, 0.0);
  prof.se.assign(nw, 0.0);
  for (std::size_t i = 0; i < nw; ++i) {
    double m = 0, m2 = 0;
    for (const auto& v : per) {
      m += v[i];
      m2 += v[i] * v[i];
    }
    m /= R;
    m2 /= R;
    prof.r[i] = m;
    prof.se[i] = std::sqrt(std::max(0.0, m2 - m * m) / (R - 1));
  }
  return prof;
}

struct RayRatio {
  double z_target = 0;
  double rho_target = 0;
  int t = 0;
  int s = 0;
  double z = 0;
  double rho = 0;
  double ratio = 0;  // rho^{k p1} r(t, s) / L_X(z)
};

struct SummabilityProxy {
  std::string axis;       // "t" or "s"
  double exponent = 0;    // k p_i along this axis
  std::vector<int> N;     // dyadic cut-offs
  std::vector<double> partial;  // sum_{|x| <= N} |r|
  double growth_slope = 0;      // log-log slope of the partial sums over the last doubling
  double condensation_ratio = 0;  // last ratio of successive dyadic block sums
  bool divergent = false;         // verdict: condensation ratio >= 1
  bool expected_divergent = false;  // k p_i <= 1
};

struct AsymptoteCheck {
  std::vector<RayRatio> rays;
  std::vector<SummabilityProxy> axes;
};

/// Lattice point nearest to the quasi-polar point (rho z, rho^varpi (1 - z^2)^{varpi/2}).
inline std::pair<int, int> ray_point(double z, double rho, double varpi) {
  const double t = rho * z, s = std::pow(rho, varpi) * std::pow(std::max(0.0, 1.0 - z * z), varpi / 2.0);
  return {static_cast<int>(std::lround(t)), static_cast<int>(std::lround(s))};
}

/// Partial sums of |r| along one axis over dyadic cut-offs 2^j - 1 <= max_lag and
/// the divergence verdict from the ratio of the last two dyadic block sums.
inline SummabilityProxy axis_summability(const std::function<double(int)>& r, int max_lag, double exponent, const std::string& axis) {
  SummabilityProxy p;
  p.axis = axis;
  p.exponent = exponent;
  p.expected_divergent = exponent <= 1.0;
  double acc = std::abs(r(0));
  std::vector<double> blocks;  // sum over 2^j <= |x| < 2^{j+1}
  int lo = 1;
  while (2 * lo - 1 <= max_lag) {
    double blk = 0;
    for (int x = lo; x < 2 * lo; ++x) blk += 2.0 * std::abs(r(x));
    blocks.push_back(blk);
    acc += blk;
    p.N.push_back(2 * lo - 1);
    p.partial.push_back(acc);
    lo *= 2;
  }
  if (blocks.size() < 3) throw DomainError("summability proxy needs lags up to at least 7");
  const std::size_t n = blocks.size();
  p.condensation_ratio = blocks[n - 1] / blocks[n - 2];
  p.growth_slope = std::log(p.partial[n - 1] / p.partial[n - 2]) / std::log(static_cast<double>(p.N[n - 1]) / p.N[n - 2]);
  p.divergent = p.condensation_ratio >= 1.0;
  return p;
}


/// Ratios rho^{k p1} r / L_X along rays and axis summability verdicts.
inline AsymptoteCheck covariance_asymptote_check(const CovarianceProfile& prof, const ModelExponents& e, int k,
                                                 const std::function<double(double)>& LX,
                                                 const std::vector<double>& zs, const std::vector<double>& radii) {
  AsymptoteCheck out;
  const double varpi = e.gamma0;
  for (double z : zs)
    for (double rho : radii) {
      const auto [t, s] = ray_point(z, rho, varpi);
      if (!prof.contains(t, s)) continue;
      RayRatio rr;
      rr.z_target = z;
      rr.rho_target = rho;
      rr.t = t;
      rr.s = s;
      rr.rho = quasi_norm(t, s, varpi);
      rr.z = t / rr.rho;
      rr.ratio = std::pow(rr.rho, k * e.p1) * prof.at(t, s) / LX(rr.z);
      out.rays.push_back(rr);
    }
  out.axes.push_back(axis_summability([&](int x) { return prof.at(x, 0); }, prof.T, k * e.p1, "t"));
  out.axes.push_back(axis_summability([&](int x) { return prof.at(0, x); }, prof.S, k * e.p2, "s"));
  return out;
}

}  // namespace lrd
