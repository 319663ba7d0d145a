#pragma once
// Model descriptions and the replica generator that turns a (model, size, key)
// triple into independent realizations of the subordinated field X.

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lrdlab/circulant.hpp"
#include "lrdlab/error.hpp"
#include "lrdlab/exponents.hpp"
#include "lrdlab/fft.hpp"
#include "lrdlab/kernels.hpp"
#include "lrdlab/model_covariance.hpp"
#include "lrdlab/rng.hpp"
#include "lrdlab/synthesis.hpp"

namespace lrd {

enum class ModelFamily { Heat, Iso, Separable, Generic, White };

inline std::string to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::Heat: return "heat";
    case ModelFamily::Iso: return "iso";
    case ModelFamily::Separable: return "separable";
    case ModelFamily::Generic: return "generic";
    case ModelFamily::White: return "white";
  }
  return "?";
}

inline ModelFamily model_family_from_string(const std::string& s) {
  if (s == "heat") return ModelFamily::Heat;
  if (s == "iso") return ModelFamily::Iso;
  if (s == "separable") return ModelFamily::Separable;
  if (s == "generic") return ModelFamily::Generic;
  if (s == "white") return ModelFamily::White;
  throw ValidationError("unknown model family '" + s + "'");
}

inline NoiseLaw noise_law_from_string(const std::string& s) {
  if (s == "normal") return NoiseLaw::StandardNormal;
  if (s == "rademacher") return NoiseLaw::Rademacher;
  if (s == "uniform") return NoiseLaw::CenteredUniform;
  throw ValidationError("unknown noise law '" + s + "'");
}

/// Full description of X = A_k(Y) (or G(Y / sigma)) with Y = a * eps.
struct ModelSpec {
  ModelFamily family = ModelFamily::Heat;
  double d = 0.2;       // heat / iso memory parameter
  double theta = 0.5;   // heat walk laziness
  double d1 = 0.3;      // separable, horizontal
  double d2 = 0.2;      // separable, vertical
  double q1 = 1.2;      // generic kernel decay
  double q2 = 2.4;
  NoiseLaw noise = NoiseLaw::StandardNormal;
  int k = 1;
  std::vector<double> hermite;  // optional G = sum c_j He_j / j!; empty means A_k
  int M = 256;                  // kernel half-width for the moving-average path
  double trunc_tol = kDefaultTruncationTol;

  void validate() const {
    if (k < 1) throw ValidationError("model.k must be >= 1");
    switch (family) {
      case ModelFamily::Heat:
        if (!(d > 0 && d < 0.75)) throw ValidationError("heat family requires 0 < d < 3/4");
        if (!(theta > 0 && theta < 1)) throw ValidationError("heat family requires 0 < theta < 1");
        break;
      case ModelFamily::Iso:
        if (!(d > 0 && d < 0.5)) throw ValidationError("iso family requires 0 < d < 1/2");
        break;
      case ModelFamily::Separable:
        if (!(d1 > 0 && d1 < 0.5 && d2 > 0 && d2 < 0.5)) throw ValidationError("separable family requires d1, d2 in (0, 1/2)");
        break;
      case ModelFamily::Generic:
        try {
          (void)derive_exponents(q1, q2);
        } catch (const DomainError& e) {
          throw ValidationError(e.what());
        }
        break;
      case ModelFamily::White: break;
    }
    if (!hermite.empty() && noise != NoiseLaw::StandardNormal) {
      throw ValidationError("a Hermite expansion G requires Gaussian noise");
    }
    if (M < 1) throw ValidationError("numerics.M must be >= 1");
  }

  bool gaussian() const { return noise == NoiseLaw::StandardNormal; }

  /// Exponents of the power-law kernel class; empty for the separable and white families.
  std::optional<ModelExponents> exponents() const {
    switch (family) {
      case ModelFamily::Heat: return derive_exponents(1.5 - d, 3.0 - 2.0 * d);
      case ModelFamily::Iso: return derive_exponents(2.0 * (1.0 - d), 2.0 * (1.0 - d));
      case ModelFamily::Generic: return derive_exponents(q1, q2);
      default: return std::nullopt;
    }
  }

  /// Angular profile L0 of the kernel class.
  AngularFunction angular() const {
    switch (family) {
      case ModelFamily::Heat: return heat_angular_function(d, theta);
      case ModelFamily::Iso: return AngularFunction::constant(std::tgamma(1 - d) / (std::numbers::pi * std::tgamma(d)));
      default: return AngularFunction::constant(1.0);
    }
  }

  /// Order of the subordination (Hermite rank when G is given).
  int order() const {
    if (hermite.empty()) return k;
    for (std::size_t j = 1; j < hermite.size(); ++j)
      if (hermite[j] != 0.0) return static_cast<int>(j);
    return -1;
  }

  /// Truncated kernel used by the moving-average path.
  CoefficientKernel kernel(int half_width) const {
    switch (family) {
      case ModelFamily::Heat: return heat_frac_kernel(d, theta, half_width);
      case ModelFamily::Iso: return iso_frac_kernel(d, half_width);
      case ModelFamily::Separable: return separable_kernel(d1, d2, half_width);
      case ModelFamily::Generic: return generic_kernel(derive_exponents(q1, q2), angular(), half_width, trunc_tol);
      case ModelFamily::White: return CoefficientKernel::delta();
    }
    return CoefficientKernel::delta();
  }

  /// Theoretical H(gamma) of the partial sums, with a regime label; NaN at boundaries.
  std::pair<double, std::string> theory(double gamma) const {
    const int r = order();
    if (family == ModelFamily::White) return {0.5 * (1.0 + gamma), "white"};
    if (family == ModelFamily::Separable) {
      if (r != 1) return {std::nan(""), "separable"};
      return {(d1 + 0.5) + gamma * (d2 + 0.5), "separable"};
    }
    const auto e = *exponents();
    try {
      const auto reg = classify_regime(e, SubordinationOrder(r), gamma);
      return {reg.H, std::string(to_string(reg.tag))};
    } catch (const BoundaryError&) {
      return {std::nan(""), "boundary"};
    }
  }
};

/// Quadrant covariance read from a stored table, zero beyond it.
class TabulatedCovariance final : public QuadrantCovariance {
 public:
  TabulatedCovariance(std::vector<double> table, int nt, int ns, std::string label)
      : table_(std::move(table)), nt_(nt), ns_(ns), label_(std::move(label)) {}
  double operator()(std::int64_t t, std::int64_t s) const override {
    t = t < 0 ? -t : t;
    s = s < 0 ? -s : s;
    if (t >= nt_ || s >= ns_) return 0.0;
    return table_[static_cast<std::size_t>(t) * ns_ + static_cast<std::size_t>(s)];
  }
  std::string name() const override { return label_; }

 private:
  std::vector<double> table_;
  int nt_, ns_;
  std::string label_;
};

/// Autocovariance of a truncated kernel on lags [0, 2M] x [0, 2M] by FFT;
/// assumes r(t, s) = r(|t|, |s|), which holds for every family here.
inline std::shared_ptr<TabulatedCovariance> kernel_covariance_table(const CoefficientKernel& k,
                                                                    double mem_cap = kDefaultMemoryCapBytes) {
  const int w = k.width();
  const int L0 = fast_fft_size(2 * w - 1), L1 = fast_fft_size(2 * w - 1);
  const std::size_t nr = static_cast<std::size_t>(L0) * L1, nc = static_cast<std::size_t>(L0) * (L1 / 2 + 1);
  check_memory(8.0 * nr + 16.0 * nc, mem_cap, "kernel autocovariance FFT");
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
  std::vector<double> table(static_cast<std::size_t>(w) * w);
  for (int t = 0; t < w; ++t)
    for (int s = 0; s < w; ++s) table[static_cast<std::size_t>(t) * w + s] = buf[static_cast<std::size_t>(t) * L1 + s] * scale;
  return std::make_shared<TabulatedCovariance>(std::move(table), w, w, "kernel");
}

/// Independent replicas of X on rectangles of any size. Gaussian models are
/// sampled exactly from the untruncated covariance by circulant embedding;
/// other noise laws go through the truncated moving average.
class FieldGenerator {
 public:
  /// `max_nt`, `max_ns` size the exact covariance tables of the heat family.
  FieldGenerator(ModelSpec model, int max_nt, int max_ns, double mem_cap = kDefaultMemoryCapBytes)
      : model_(std::move(model)), mem_cap_(mem_cap) {
    model_.validate();
    const int r = model_.order();
    if (r < 1) throw RankError("all Hermite coefficients of G vanish");
    if (model_.family == ModelFamily::White) {
      variance_ = 1.0;
    } else if (model_.gaussian()) {
      std::shared_ptr<QuadrantCovariance> cov;
      switch (model_.family) {
        case ModelFamily::Heat: {
          const int nt = even_fast_size(2 * std::max(1, max_nt - 1)) / 2 + 1;
          const int ns = even_fast_size(2 * std::max(1, max_ns - 1)) / 2 + 1;
          cov = std::make_shared<HeatCovariance>(model_.d, model_.theta, nt, ns);
          break;
        }
        case ModelFamily::Iso: cov = std::make_shared<IsoCovariance>(model_.d); break;
        case ModelFamily::Separable: cov = std::make_shared<SeparableCovariance>(model_.d1, model_.d2); break;
        default: cov = kernel_covariance_table(model_.kernel(model_.M), mem_cap_); break;
      }
      variance_ = cov->variance();
      table_ = std::make_unique<CovarianceTable>(cov);
    } else {
      kernel_ = std::make_shared<CoefficientKernel>(model_.kernel(model_.M));
      variance_ = kernel_->power_sum(2);
    }
    // subordination polynomial in terms of Y
    if (model_.hermite.empty()) {
      std::vector<double> moments;
      if (model_.family == ModelFamily::White || !model_.gaussian()) {
        const auto& kern = model_.family == ModelFamily::White ? CoefficientKernel::delta() : *kernel_;
        moments = moments_from_cumulants(cumulants_of_Y(kern, NoiseSpec{model_.noise}, model_.k));
      } else {
        moments.assign(static_cast<std::size_t>(model_.k) + 1, 0.0);
        moments[0] = 1.0;
        for (int j = 2; j <= model_.k; j += 2) moments[j] = moments[j - 2] * (j - 1) * variance_;
      }
      appell_ = appell_from_moments(moments, model_.k);
    } else {
      G_.coeffs = model_.hermite;
      G_.coeffs[0] = 0.0;  // centred mode: E G(Z) = c_0 is removed
    }
  }

  const ModelSpec& model() const { return model_; }
  double variance_Y() const { return variance_; }
  const QuadrantCovariance* covariance() const { return table_ ? &table_->covariance() : nullptr; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Prepares the sampler for an nt x ns rectangle (thread-safe, cached).
  void prepare(int nt, int ns) {
    if (table_) {
      (void)sampler(nt, ns);
    } else if (kernel_) {
      (void)moving_average_for(nt, ns);
    }
  }

  /// Two independent replicas of X for this key.
  std::pair<LatticeField, LatticeField> pair(int nt, int ns, std::uint64_t key) {
    std::pair<LatticeField, LatticeField> y;
    if (model_.family == ModelFamily::White) {
      const NoiseSpec spec{model_.noise};
      y = {sample_noise_keyed(nt, ns, spec, derive_key(key, 0)), sample_noise_keyed(nt, ns, spec, derive_key(key, 1))};
    } else if (table_) {
      y = sampler(nt, ns)->sample_pair(key);
    } else {
      const auto ma = moving_average_for(nt, ns);
      const int M = kernel_->M;
      const NoiseSpec spec{model_.noise};
      y = {ma->apply(sample_noise_keyed(nt + 2 * M, ns + 2 * M, spec, derive_key(key, 0))),
           ma->apply(sample_noise_keyed(nt + 2 * M, ns + 2 * M, spec, derive_key(key, 1)))};
    }
    subordinate_in_place(y.first);
    subordinate_in_place(y.second);
    return y;
  }

  double subordinate_value(double y) const {
    return model_.hermite.empty() ? appell_(y) : G_(y / std::sqrt(variance_));
  }

 private:
  static LatticeField sample_noise_keyed(int nt, int ns, const NoiseSpec& spec, std::uint64_t key) {
    LatticeField f(nt, ns);
    const CellRng rng(key);
    for (int t = 0; t < nt; ++t)
      for (int s = 0; s < ns; ++s) f.at(t, s) = spec.sample(rng, t, s);
    return f;
  }

  void subordinate_in_place(LatticeField& f) const {
    if (model_.hermite.empty() && model_.k == 1) return;
    for (double& x : f.values) x = subordinate_value(x);
  }

  std::shared_ptr<const CirculantSampler> sampler(int nt, int ns) {
    std::lock_guard<std::mutex> lock(mu_);
    const auto key = std::make_pair(nt, ns);
    auto it = samplers_.find(key);
    if (it != samplers_.end()) return it->second;
    auto s = std::make_shared<const CirculantSampler>(*table_, nt, ns, 2, mem_cap_);
    if (!s->exact()) {
      warnings_.push_back("circulant embedding for " + std::to_string(nt) + "x" + std::to_string(ns) +
                          " clipped negative eigenvalues (share " + std::to_string(s->negative_mass()) + ")");
    }
    samplers_.emplace(key, s);
    return s;
  }

  std::shared_ptr<const MovingAverage> moving_average_for(int nt, int ns) {
    std::lock_guard<std::mutex> lock(mu_);
    const auto key = std::make_pair(nt, ns);
    auto it = averages_.find(key);
    if (it != averages_.end()) return it->second;
    const int M = kernel_->M;
    auto ma = std::make_shared<const MovingAverage>(*kernel_, nt + 2 * M, ns + 2 * M, mem_cap_);
    averages_.emplace(key, ma);
    return ma;
  }

  ModelSpec model_;
  double mem_cap_;
  double variance_ = 1.0;
  std::unique_ptr<CovarianceTable> table_;
  std::shared_ptr<CoefficientKernel> kernel_;
  AppellPolynomial appell_;
  HermiteExpansion G_;
  std::mutex mu_;
  std::map<std::pair<int, int>, std::shared_ptr<const CirculantSampler>> samplers_;
  std::map<std::pair<int, int>, std::shared_ptr<const MovingAverage>> averages_;
  std::vector<std::string> warnings_;
};

}  // namespace lrd
