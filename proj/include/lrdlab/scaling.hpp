#pragma once
// Partial sums over rectangles lambda x lambda^gamma, Monte Carlo variance
// scans, log-log exponent fits, scaling-transition detection and normality
// diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lrdlab/error.hpp"
#include "lrdlab/models.hpp"
#include "lrdlab/parallel.hpp"
#include "lrdlab/rng.hpp"
#include "lrdlab/synthesis.hpp"

namespace lrd {

/// Rectangle K = {1 <= t <= lambda x, 1 <= s <= lambda^gamma y}.
struct PartialSumRequest {
  double lambda = 1;
  double gamma = 1;
  double x = 1;
  double y = 1;

  // floor with a relative guard so that e.g. 1024^{0.5} * 1 counts 32 cells
  int nt() const { return static_cast<int>(std::floor(lambda * x * (1.0 + 1e-12))); }
  int ns() const { return static_cast<int>(std::floor(std::pow(lambda, gamma) * y * (1.0 + 1e-12))); }

  void validate() const {
    if (!(lambda > 0 && gamma > 0 && x > 0 && y > 0)) throw DomainError("partial sum: lambda, gamma, x, y must be positive");
    if (nt() < 1 || ns() < 1) throw DomainError("partial sum rectangle is empty");
  }
};

/// Field cell (i, j) holds X(i + 1, j + 1).
inline double partial_sum(const LatticeField& field, const PartialSumRequest& req) {
  req.validate();
  const int nt = req.nt(), ns = req.ns();
  if (nt > field.Nt || ns > field.Ns) {
    throw OutOfBounds("rectangle " + std::to_string(nt) + "x" + std::to_string(ns) + " exceeds the field " +
                      std::to_string(field.Nt) + "x" + std::to_string(field.Ns));
  }
  double acc = 0;
  for (int t = 0; t < nt; ++t) {
    const double* row = &field.values[static_cast<std::size_t>(t) * field.Ns];
    double r = 0;
    for (int s = 0; s < ns; ++s) r += row[s];
    acc += r;
  }
  return acc;
}

/// Inclusive prefix sums: sum(nt, ns) is the sum over [0, nt) x [0, ns).
class PrefixSum2D {
 public:
  explicit PrefixSum2D(const LatticeField& f) : nt_(f.Nt), ns_(f.Ns), p_((f.Nt + 1) * static_cast<std::size_t>(f.Ns + 1), 0.0) {
    for (int t = 0; t < nt_; ++t) {
      double row = 0;
      for (int s = 0; s < ns_; ++s) {
        row += f.at(t, s);
        p_[idx(t + 1, s + 1)] = p_[idx(t, s + 1)] + row;
      }
    }
  }

  double sum(int nt, int ns) const {
    if (nt < 0 || ns < 0 || nt > nt_ || ns > ns_) throw OutOfBounds("prefix sum corner outside the field");
    return p_[idx(nt, ns)];
  }

  /// Partial sums for every corner (x_i, y_j) of a grid at one (lambda, gamma).
  std::vector<double> grid(double lambda, double gamma, const std::vector<double>& xs, const std::vector<double>& ys) const {
    std::vector<double> out;
    out.reserve(xs.size() * ys.size());
    for (double x : xs)
      for (double y : ys) {
        const PartialSumRequest r{lambda, gamma, x, y};
        r.validate();
        out.push_back(sum(r.nt(), r.ns()));
      }
    return out;
  }

 private:
  std::size_t idx(int t, int s) const { return static_cast<std::size_t>(t) * (ns_ + 1) + s; }
  int nt_, ns_;
  std::vector<double> p_;
};

struct VarianceCurve {
  double gamma = 1;
  std::vector<double> lambda_grid;
  std::vector<double> var_hat;  // mean of S^2 (E S = 0 by construction)
  std::vector<double> se;       // sqrt((m4 - m2^2) / R)
  std::vector<double> mean;     // sample mean of S
  std::vector<double> mean_se;
  int R = 0;
  std::vector<std::vector<double>> sums;  // per lambda, the R replica sums
  std::vector<std::string> warnings;
};

struct ScanOptions {
  double x = 1;
  double y = 1;
  double mem_cap = kDefaultMemoryCapBytes;
  int threads = 0;  // 0: default_threads()
};

/// Default geometric grid 64 ... 1024 with ratio sqrt(2), rounded to integers.
inline std::vector<double> default_lambda_grid() { return {64, 91, 128, 181, 256, 362, 512, 724, 1024}; }

namespace detail {

inline void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw DomainError("empty lambda grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 1)) throw DomainError("lambda values must be >= 1");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("lambda grid must be strictly increasing");
  }
}

/// Bytes held per worker for one replica pair of an nt x ns rectangle.
inline double pair_bytes(const ModelSpec& m, int nt, int ns) {
  if (m.gaussian() && m.family != ModelFamily::White) {
    return 16.0 * even_fast_size(2 * (nt - 1)) * even_fast_size(2 * (ns - 1)) + 16.0 * nt * ns;
  }
  const double w0 = nt + 4.0 * m.M, w1 = ns + 4.0 * m.M;
  return 8.0 * 4.0 * w0 * w1;
}

}  // namespace detail

/// Var S over the lambda grid from R replicas of X; replica 2p + b of lambda
/// index i is component b of pair p drawn with key (seed, p, i).
inline VarianceCurve variance_scan(FieldGenerator& gen, double gamma, std::vector<double> lambda_grid, int R,
                                   std::uint64_t seed, const ScanOptions& opt = {}) {
  if (R < 30) throw DomainError("variance_scan needs R >= 30 replicas");
  if (!(gamma > 0)) throw DomainError("gamma must be positive");
  detail::check_grid(lambda_grid);
  const int threads = opt.threads > 0 ? opt.threads : default_threads();
  VarianceCurve curve;
  curve.gamma = gamma;
  curve.R = R;
  // memory guard: drop the largest lambdas that do not fit, with a warning
  while (!lambda_grid.empty()) {
    const PartialSumRequest req{lambda_grid.back(), gamma, opt.x, opt.y};
    const double need = detail::pair_bytes(gen.model(), req.nt(), req.ns()) * std::min(threads, (R + 1) / 2);
    if (need <= opt.mem_cap) break;
    curve.warnings.push_back("lambda = " + std::to_string(lambda_grid.back()) + " dropped: needs " +
                             std::to_string(need / 1048576.0) + " MiB");
    lambda_grid.pop_back();
  }
  if (lambda_grid.empty()) throw MemoryCapError("no lambda of the grid fits the memory cap");
  curve.lambda_grid = lambda_grid;
  const int pairs = (R + 1) / 2;
  for (std::size_t li = 0; li < lambda_grid.size(); ++li) {
    const PartialSumRequest req{lambda_grid[li], gamma, opt.x, opt.y};
    req.validate();
    const int nt = req.nt(), ns = req.ns();
    gen.prepare(nt, ns);
    std::vector<double> sums(static_cast<std::size_t>(2 * pairs));
    parallel_for(
        0, static_cast<std::size_t>(pairs),
        [&](std::size_t p) {
          const auto fields = gen.pair(nt, ns, derive_key(seed, p, li));
          sums[2 * p] = partial_sum(fields.first, req);
          sums[2 * p + 1] = partial_sum(fields.second, req);
        },
        threads);
    sums.resize(static_cast<std::size_t>(R));
    double m1 = 0, m2 = 0, m4 = 0;
    for (double s : sums) {
      m1 += s;
      m2 += s * s;
      m4 += s * s * s * s;
    }
    m1 /= R;
    m2 /= R;
    m4 /= R;
    if (!(m2 > 0) || !std::isfinite(m2)) {
      throw DegenerateVariance("sample variance of S is zero at lambda = " + std::to_string(lambda_grid[li]));
    }
    curve.var_hat.push_back(m2);
    curve.se.push_back(std::sqrt(std::max(m4 - m2 * m2, 1e-300) / R));
    curve.mean.push_back(m1);
    curve.mean_se.push_back(std::sqrt(std::max(m2 - m1 * m1, 0.0) / R));
    curve.sums.push_back(std::move(sums));
  }
  for (const auto& w : gen.warnings()) curve.warnings.push_back(w);
  return curve;
}

inline VarianceCurve variance_scan(const ModelSpec& model, double gamma, const std::vector<double>& lambda_grid, int R,
                                   std::uint64_t seed, const ScanOptions& opt = {}) {
  detail::check_grid(lambda_grid);
  const PartialSumRequest big{lambda_grid.back(), gamma, opt.x, opt.y};
  FieldGenerator gen(model, big.nt(), big.ns(), opt.mem_cap);
  return variance_scan(gen, gamma, lambda_grid, R, seed, opt);
}

struct ScalingEstimate {
  double gamma = 1;
  double H_hat = 0;
  double H_se = 0;
  double intercept = 0;
  double r_squared = 0;
  double chi2 = 0;  // weighted residual sum of squares
  int points = 0;
};

/// Weighted least squares of log var_hat on log lambda, weights (var_hat / se)^2.
/// H_se is the known-variance slope error inflated by sqrt(chi2 / dof) when that exceeds 1.
inline ScalingEstimate fit_H(const VarianceCurve& c) {
  const std::size_t n = c.lambda_grid.size();
  if (c.var_hat.size() != n || c.se.size() != n) throw DimensionMismatch("variance curve arrays differ in length");
  std::vector<double> xs;
  for (double l : c.lambda_grid) {
    if (std::find_if(xs.begin(), xs.end(), [&](double v) { return std::abs(v - std::log(l)) < 1e-12; }) == xs.end()) {
      xs.push_back(std::log(l));
    }
  }
  if (xs.size() < 2) throw SingularFit("lambda grid has fewer than 2 distinct values");
  if (n < 4) throw SingularFit("fit_H needs at least 4 lambda points");
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  std::vector<double> x(n), y(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(c.var_hat[i] > 0) || !(c.se[i] > 0)) throw DegenerateVariance("fit_H needs positive var_hat and se");
    x[i] = std::log(c.lambda_grid[i]);
    y[i] = std::log(c.var_hat[i]);
    const double sl = c.se[i] / c.var_hat[i];
    w[i] = 1.0 / (sl * sl);
    sw += w[i];
    swx += w[i] * x[i];
    swy += w[i] * y[i];
    swxx += w[i] * x[i] * x[i];
    swxy += w[i] * x[i] * y[i];
  }
  const double det = sw * swxx - swx * swx;
  if (!(det > 0)) throw SingularFit("degenerate weighted design");
  const double slope = (sw * swxy - swx * swy) / det;
  const double icpt = (swy - slope * swx) / sw;
  double chi2 = 0, tss = 0;
  const double ybar = swy / sw;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - icpt - slope * x[i];
    chi2 += w[i] * r * r;
    tss += w[i] * (y[i] - ybar) * (y[i] - ybar);
  }
  const double inflate = std::max(1.0, chi2 / static_cast<double>(n - 2));
  ScalingEstimate est;
  est.gamma = c.gamma;
  est.H_hat = slope / 2.0;
  est.H_se = 0.5 * std::sqrt(sw / det * inflate);
  est.intercept = icpt;
  est.r_squared = tss > 0 ? 1.0 - chi2 / tss : 1.0;
  est.chi2 = chi2;
  est.points = static_cast<int>(n);
  return est;
}

/// Continuous two-piece linear fit of y(x) with a kink at x0 versus one line.
struct HingeFit {
  double kink = std::nan("");
  double chi2_line = 0;
  double chi2_hinge = 0;
  double slope_left = 0, slope_right = 0;
  double improvement() const { return chi2_line - chi2_hinge; }
};

namespace detail {

inline double weighted_ls(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, const Eigen::VectorXd& w, Eigen::VectorXd* beta) {
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd Aw = sw.asDiagonal() * A;
  const Eigen::VectorXd yw = sw.cwiseProduct(y);
  *beta = Aw.colPivHouseholderQr().solve(yw);
  return (Aw * *beta - yw).squaredNorm();
}

}  // namespace detail

/// Exhaustive search over midpoints between consecutive x values leaving at
/// least two points on each side.
inline HingeFit hinge_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& sigma) {
  const int n = static_cast<int>(x.size());
  if (n < 4) throw SingularFit("hinge fit needs at least 4 points");
  Eigen::VectorXd Y(n), W(n);
  for (int i = 0; i < n; ++i) {
    Y(i) = y[i];
    W(i) = 1.0 / (sigma[i] * sigma[i]);
  }
  Eigen::MatrixXd L(n, 2);
  for (int i = 0; i < n; ++i) L.row(i) << 1.0, x[i];
  Eigen::VectorXd beta;
  HingeFit best;
  best.chi2_line = detail::weighted_ls(L, Y, W, &beta);
  best.chi2_hinge = std::numeric_limits<double>::infinity();
  for (int i = 1; i + 2 < n; ++i) {
    const double c = 0.5 * (x[i] + x[i + 1]);
    Eigen::MatrixXd A(n, 3);
    for (int j = 0; j < n; ++j) A.row(j) << 1.0, std::min(x[j] - c, 0.0), std::max(x[j] - c, 0.0);
    const double chi2 = detail::weighted_ls(A, Y, W, &beta);
    if (chi2 < best.chi2_hinge) {
      best.chi2_hinge = chi2;
      best.kink = c;
      best.slope_left = beta(1);
      best.slope_right = beta(2);
    }
  }
  return best;
}

/// Chi-square improvement of the hinge over one line above which a kink is reported.
inline constexpr double kKinkDetectionThreshold = 9.0;

struct TransitionRow {
  ScalingEstimate estimate;
  double H_theory = std::nan("");
  std::string regime;
  std::vector<std::string> warnings;
};

struct TransitionReport {
  std::vector<double> gamma_grid;
  std::vector<TransitionRow> rows;
  double gamma0_hat = std::nan("");
  double gamma0_theory = std::nan("");
  double kink_significance = 0;  // chi-square improvement of the hinge fit
  bool kink_detected = false;
  HingeFit hinge;
};

inline TransitionReport transition_scan(const ModelSpec& model, const std::vector<double>& gamma_grid,
                                        const std::vector<double>& lambda_grid, int R, std::uint64_t seed,
                                        const ScanOptions& opt = {}) {
  if (gamma_grid.size() < 4) throw DomainError("transition scan needs at least 4 gamma values");
  for (std::size_t i = 1; i < gamma_grid.size(); ++i)
    if (!(gamma_grid[i] > gamma_grid[i - 1])) throw DomainError("gamma grid must be strictly increasing");
  detail::check_grid(lambda_grid);
  int max_nt = 0, max_ns = 0;
  for (double g : gamma_grid) {
    const PartialSumRequest big{lambda_grid.back(), g, opt.x, opt.y};
    max_nt = std::max(max_nt, big.nt());
    max_ns = std::max(max_ns, big.ns());
  }
  FieldGenerator gen(model, max_nt, max_ns, opt.mem_cap);
  TransitionReport rep;
  rep.gamma_grid = gamma_grid;
  if (const auto e = model.exponents()) rep.gamma0_theory = e->gamma0;
  std::vector<double> h, se;
  for (double g : gamma_grid) {
    const auto curve = variance_scan(gen, g, lambda_grid, R, seed, opt);
    TransitionRow row;
    row.estimate = fit_H(curve);
    std::tie(row.H_theory, row.regime) = model.theory(g);
    row.warnings = curve.warnings;
    h.push_back(row.estimate.H_hat);
    se.push_back(row.estimate.H_se);
    rep.rows.push_back(std::move(row));
  }
  rep.hinge = hinge_fit(gamma_grid, h, se);
  rep.gamma0_hat = rep.hinge.kink;
  rep.kink_significance = rep.hinge.improvement();
  rep.kink_detected = rep.kink_significance > kKinkDetectionThreshold;
  return rep;
}

struct NormalityReport {
  double skewness = 0;
  double excess_kurtosis = 0;
  double ks_distance = 0;
  bool degenerate = false;    // constant sample
  bool small_sample = false;  // fewer than 200 values
};

/// Moment statistics of the standardized sample and the Kolmogorov-Smirnov
/// distance to the normal law with the sample mean and variance.
inline NormalityReport normality_diagnostics(std::vector<double> x) {
  NormalityReport r;
  const double n = static_cast<double>(x.size());
  r.small_sample = x.size() < 200;
  if (x.empty()) {
    r.degenerate = true;
    r.ks_distance = 0.5;
    return r;
  }
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    const double c = v - mean;
    m2 += c * c;
    m3 += c * c * c;
    m4 += c * c * c * c;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 1e-28 * mean * mean) || m2 == 0.0) {
    r.degenerate = true;
    r.ks_distance = 0.5;
    return r;
  }
  r.skewness = m3 / std::pow(m2, 1.5);
  r.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  const double sd = std::sqrt(m2);
  std::sort(x.begin(), x.end());
  double D = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = 0.5 * std::erfc(-(x[i] - mean) / (sd * std::numbers::sqrt2));
    D = std::max({D, (static_cast<double>(i) + 1.0) / n - F, F - static_cast<double>(i) / n});
  }
  r.ks_distance = D;
  return r;
}

}  // namespace lrd
