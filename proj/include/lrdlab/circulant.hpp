#pragma once
// Exact Gaussian synthesis of a stationary field on a rectangle by embedding
// its covariance in a symmetric circulant (one FFT yields two replicas).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "lrdlab/error.hpp"
#include "lrdlab/fft.hpp"
#include "lrdlab/model_covariance.hpp"
#include "lrdlab/rng.hpp"
#include "lrdlab/synthesis.hpp"

namespace lrd {

/// Grows-on-demand quadrant table of a covariance, shared by samplers of different sizes.
class CovarianceTable {
 public:
  explicit CovarianceTable(std::shared_ptr<const QuadrantCovariance> cov) : cov_(std::move(cov)) {}

  /// Ensures lags [0, nt) x [0, ns) are available.
  void reserve(int nt, int ns) {
    std::lock_guard<std::mutex> lock(mu_);
    if (nt <= nt_ && ns <= ns_) return;
    const int NT = std::max(nt, nt_), NS = std::max(ns, ns_);
    auto fresh = cov_->quadrant(NT, NS);
    table_ = std::move(fresh);
    nt_ = NT;
    ns_ = NS;
  }

  double operator()(int t, int s) const { return table_[static_cast<std::size_t>(t) * ns_ + s]; }
  int nt() const { return nt_; }
  int ns() const { return ns_; }
  const QuadrantCovariance& covariance() const { return *cov_; }

 private:
  std::shared_ptr<const QuadrantCovariance> cov_;
  std::mutex mu_;
  std::vector<double> table_;
  int nt_ = 0, ns_ = 0;
};

inline int even_fast_size(int n) {
  int m = fast_fft_size(std::max(2, n));
  while (m % 2 != 0) m = fast_fft_size(m + 1);
  return m;
}

class CirculantSampler {
 public:
  /// Embeds the Nt x Ns rectangle; the embedding is enlarged up to `max_growth`
  /// times while the spectrum has negative eigenvalues, which are then clipped.
  CirculantSampler(CovarianceTable& table, int Nt, int Ns, int max_growth = 2,
                   double mem_cap = kDefaultMemoryCapBytes)
      : Nt_(Nt), Ns_(Ns) {
    if (Nt < 1 || Ns < 1) throw DomainError("circulant sampler: empty rectangle");
    mt_ = even_fast_size(2 * (Nt - 1));
    ms_ = even_fast_size(2 * (Ns - 1));
    for (int round = 0;; ++round) {
      check_memory(16.0 * mt_ * ms_ + 8.0 * (mt_ / 2 + 1) * (ms_ / 2 + 1), mem_cap, "circulant embedding");
      const int nt = mt_ / 2 + 1, ns = ms_ / 2 + 1;
      table.reserve(nt, ns);
      auto eig = alloc_real(static_cast<std::size_t>(nt) * ns);
      for (int i = 0; i < nt; ++i)
        for (int j = 0; j < ns; ++j) eig[static_cast<std::size_t>(i) * ns + j] = table(i, j);
      dct1_2d(nt, ns, eig.get());
      double lo = 0, hi = 0, neg = 0, tot = 0;
      for (std::size_t i = 0; i < static_cast<std::size_t>(nt) * ns; ++i) {
        lo = std::min(lo, eig[i]);
        hi = std::max(hi, eig[i]);
        tot += std::abs(eig[i]);
        if (eig[i] < 0) neg -= eig[i];
      }
      if (lo >= -1e-12 * hi || round >= max_growth) {
        negative_mass_ = tot > 0 ? neg / tot : 0.0;
        sqrt_eig_.assign(static_cast<std::size_t>(nt) * ns, 0.0);
        const double norm = 1.0 / (static_cast<double>(mt_) * ms_);
        for (std::size_t i = 0; i < sqrt_eig_.size(); ++i) sqrt_eig_[i] = std::sqrt(std::max(0.0, eig[i]) * norm);
        break;
      }
      mt_ = even_fast_size(2 * mt_);
      ms_ = even_fast_size(2 * ms_);
    }
  }

  int embed_t() const { return mt_; }
  int embed_s() const { return ms_; }
  /// Share of |eigenvalue| mass that was negative and clipped (0 when exact).
  double negative_mass() const { return negative_mass_; }
  bool exact() const { return negative_mass_ == 0.0; }

  /// Two independent zero-mean Gaussian fields with the target covariance.
  std::pair<LatticeField, LatticeField> sample_pair(std::uint64_t key) const {
    const std::size_t n = static_cast<std::size_t>(mt_) * ms_;
    auto w = alloc_complex(n);
    const CellRng rng(key);
    const int ns = ms_ / 2 + 1;
    for (int i = 0; i < mt_; ++i) {
      const int fi = std::min(i, mt_ - i);
      for (int j = 0; j < ms_; ++j) {
        const int fj = std::min(j, ms_ - j);
        const double a = sqrt_eig_[static_cast<std::size_t>(fi) * ns + fj];
        const auto z = rng.normals(i, j);
        w[static_cast<std::size_t>(i) * ms_ + j][0] = a * z[0];
        w[static_cast<std::size_t>(i) * ms_ + j][1] = a * z[1];
      }
    }
    fft_c2c(mt_, ms_, w.get(), true);
    LatticeField re(Nt_, Ns_), im(Nt_, Ns_);
    re.seed = im.seed = key;
    for (int t = 0; t < Nt_; ++t)
      for (int s = 0; s < Ns_; ++s) {
        const auto& c = w[static_cast<std::size_t>(t) * ms_ + s];
        re.at(t, s) = c[0];
        im.at(t, s) = c[1];
      }
    return {std::move(re), std::move(im)};
  }

 private:
  int Nt_, Ns_;
  int mt_ = 0, ms_ = 0;
  std::vector<double> sqrt_eig_;
  double negative_mass_ = 0;
};

}  // namespace lrd
