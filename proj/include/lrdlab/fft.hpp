#pragma once
// RAII buffers and a plan cache over FFTW. Plans use FFTW_ESTIMATE so the
// chosen algorithm, and therefore every output bit, is reproducible.

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "lrdlab/error.hpp"

namespace lrd {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline RealBuffer alloc_real(std::size_t n) {
  auto* p = static_cast<double*>(fftw_malloc(sizeof(double) * (n ? n : 1)));
  if (!p) throw MemoryCapError("fftw_malloc failed for " + std::to_string(n) + " doubles");
  return RealBuffer(p);
}

inline ComplexBuffer alloc_complex(std::size_t n) {
  auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n ? n : 1)));
  if (!p) throw MemoryCapError("fftw_malloc failed for " + std::to_string(n) + " complex values");
  return ComplexBuffer(p);
}

enum class FftKind { R2C, C2R, C2CForward, C2CBackward, DctI };

/// Process-wide cache; FFTW's planner is not thread-safe, execution is.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan get(FftKind kind, int n0, int n1) {
    std::lock_guard<std::mutex> lock(mu_);
    const auto key = std::make_tuple(static_cast<int>(kind), n0, n1);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    const std::size_t nr = static_cast<std::size_t>(n0) * n1;
    const std::size_t nc = static_cast<std::size_t>(n0) * (n1 / 2 + 1);
    fftw_plan plan = nullptr;
    switch (kind) {
      case FftKind::R2C: {
        auto in = alloc_real(nr);
        auto out = alloc_complex(nc);
        plan = fftw_plan_dft_r2c_2d(n0, n1, in.get(), out.get(), FFTW_ESTIMATE);
        break;
      }
      case FftKind::C2R: {
        auto in = alloc_complex(nc);
        auto out = alloc_real(nr);
        plan = fftw_plan_dft_c2r_2d(n0, n1, in.get(), out.get(), FFTW_ESTIMATE);
        break;
      }
      case FftKind::C2CForward:
      case FftKind::C2CBackward: {
        auto buf = alloc_complex(nr);
        plan = fftw_plan_dft_2d(n0, n1, buf.get(), buf.get(),
                                kind == FftKind::C2CForward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
        break;
      }
      case FftKind::DctI: {
        auto buf = alloc_real(nr);
        plan = fftw_plan_r2r_2d(n0, n1, buf.get(), buf.get(), FFTW_REDFT00, FFTW_REDFT00, FFTW_ESTIMATE);
        break;
      }
    }
    if (!plan) throw Error(ErrorFamily::MemoryCap, "FFTW could not create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;
  ~FftPlanCache() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }

 private:
  FftPlanCache() = default;
  std::mutex mu_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

// Buffers passed below must come from alloc_real / alloc_complex (alignment).

inline void fft_r2c(int n0, int n1, double* in, fftw_complex* out) {
  fftw_execute_dft_r2c(FftPlanCache::instance().get(FftKind::R2C, n0, n1), in, out);
}

/// Unnormalized inverse; destroys `in`.
inline void fft_c2r(int n0, int n1, fftw_complex* in, double* out) {
  fftw_execute_dft_c2r(FftPlanCache::instance().get(FftKind::C2R, n0, n1), in, out);
}

inline void fft_c2c(int n0, int n1, fftw_complex* inout, bool forward) {
  fftw_execute_dft(FftPlanCache::instance().get(forward ? FftKind::C2CForward : FftKind::C2CBackward, n0, n1),
                   inout, inout);
}

/// In-place 2-D DCT-I (REDFT00 in both dimensions); needs n0, n1 >= 2.
inline void dct1_2d(int n0, int n1, double* inout) {
  fftw_execute_r2r(FftPlanCache::instance().get(FftKind::DctI, n0, n1), inout, inout);
}

/// Smallest n' >= n of the form 2^a 3^b 5^c 7^d.
inline int fast_fft_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

}  // namespace lrd
