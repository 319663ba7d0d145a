#pragma once
// i.i.d. noise, the linear field Y = a * eps, Appell / Hermite subordination
// and the off-diagonal decomposition of A_k(Y) on small windows.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "lrdlab/error.hpp"
#include "lrdlab/fft.hpp"
#include "lrdlab/kernels.hpp"
#include "lrdlab/parallel.hpp"
#include "lrdlab/rng.hpp"

namespace lrd {

enum class NoiseLaw { StandardNormal, Rademacher, CenteredUniform };

inline std::string to_string(NoiseLaw law) {
  switch (law) {
    case NoiseLaw::StandardNormal: return "normal";
    case NoiseLaw::Rademacher: return "rademacher";
    case NoiseLaw::CenteredUniform: return "uniform";
  }
  return "?";
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

/// Cumulants kappa_0..kappa_n from raw moments m_0 = 1, m_1..m_n.
inline std::vector<double> cumulants_from_moments(const std::vector<double>& m) {
  const int n = static_cast<int>(m.size()) - 1;
  std::vector<double> kappa(m.size(), 0.0);
  for (int j = 1; j <= n; ++j) {
    double acc = m[j];
    for (int i = 1; i < j; ++i) acc -= binomial(j - 1, i - 1) * kappa[i] * m[j - i];
    kappa[j] = acc;
  }
  return kappa;
}

/// Raw moments m_0 = 1, m_1..m_n from cumulants kappa_1..kappa_n (kappa[0] ignored).
inline std::vector<double> moments_from_cumulants(const std::vector<double>& kappa) {
  const int n = static_cast<int>(kappa.size()) - 1;
  std::vector<double> m(kappa.size(), 0.0);
  m[0] = 1.0;
  for (int j = 1; j <= n; ++j) {
    double acc = 0;
    for (int i = 1; i <= j; ++i) acc += binomial(j - 1, i - 1) * kappa[i] * m[j - i];
    m[j] = acc;
  }
  return m;
}

/// Mean-zero, unit-variance noise law with closed-form moments.
struct NoiseSpec {
  NoiseLaw law = NoiseLaw::StandardNormal;

  double moment(int j) const {
    if (j == 0) return 1.0;
    if (j % 2 == 1) return 0.0;
    switch (law) {
      case NoiseLaw::StandardNormal: {
        double r = 1.0;
        for (int i = j - 1; i > 0; i -= 2) r *= i;
        return r;
      }
      case NoiseLaw::Rademacher: return 1.0;
      case NoiseLaw::CenteredUniform: return std::pow(3.0, j / 2.0) / (j + 1.0);
    }
    return 0.0;
  }

  std::vector<double> moments(int n) const {
    std::vector<double> m(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) m[j] = moment(j);
    return m;
  }

  /// kappa_0..kappa_n (kappa_0 = 0).
  std::vector<double> cumulants(int n) const { return cumulants_from_moments(moments(n)); }

  double sample(const CellRng& rng, std::int64_t t, std::int64_t s) const {
    switch (law) {
      case NoiseLaw::StandardNormal: return rng.normals(t, s)[0];
      case NoiseLaw::Rademacher: return (rng.bits(t, s)[0] & 1u) ? 1.0 : -1.0;
      case NoiseLaw::CenteredUniform: return std::sqrt(3.0) * (2.0 * rng.uniforms(t, s)[0] - 1.0);
    }
    return 0.0;
  }
};

/// Realized array on [0, Nt) x [0, Ns), row-major in t.
struct LatticeField {
  int Nt = 0;
  int Ns = 0;
  std::vector<double> values;
  std::uint64_t seed = 0;
  int margin = 0;

  LatticeField() = default;
  LatticeField(int nt, int ns, double mem_cap = kDefaultMemoryCapBytes) : Nt(nt), Ns(ns) {
    if (nt < 0 || ns < 0) throw DomainError("field dimensions must be nonnegative");
    check_memory(8.0 * nt * ns, mem_cap, "lattice field");
    values.assign(static_cast<std::size_t>(nt) * static_cast<std::size_t>(ns), 0.0);
  }
  double& at(int t, int s) { return values[static_cast<std::size_t>(t) * Ns + s]; }
  double at(int t, int s) const { return values[static_cast<std::size_t>(t) * Ns + s]; }
};

/// i.i.d. draws; cell (t, s) of the window maps to global cell (t0 + t, s0 + s)
/// of the stream, so windows of one stream agree where they overlap.
inline LatticeField sample_noise(int Nt, int Ns, const NoiseSpec& spec, std::uint64_t seed, std::int64_t t0 = 0,
                                 std::int64_t s0 = 0, double mem_cap = kDefaultMemoryCapBytes) {
  LatticeField f(Nt, Ns, mem_cap);
  f.seed = seed;
  const CellRng rng(derive_key(seed));
  parallel_for(0, static_cast<std::size_t>(Nt), [&](std::size_t row) {
    const int t = static_cast<int>(row);
    for (int s = 0; s < Ns; ++s) f.at(t, s) = spec.sample(rng, t0 + t, s0 + s);
  });
  return f;
}

/// Linear convolution with a fixed truncated kernel on noise windows of one size,
/// with the kernel spectrum computed once.
class MovingAverage {
 public:
  MovingAverage(const CoefficientKernel& kernel, int noise_t, int noise_s, double mem_cap = kDefaultMemoryCapBytes)
      : M_(kernel.M), nt_(noise_t), ns_(noise_s) {
    if (noise_t <= 2 * M_ || noise_s <= 2 * M_) {
      throw DimensionMismatch("noise window " + std::to_string(noise_t) + "x" + std::to_string(noise_s) +
                              " leaves no output cells for kernel half-width " + std::to_string(M_));
    }
    L0_ = fast_fft_size(noise_t + 2 * M_);
    L1_ = fast_fft_size(noise_s + 2 * M_);
    const std::size_t nr = static_cast<std::size_t>(L0_) * L1_;
    const std::size_t nc = static_cast<std::size_t>(L0_) * (L1_ / 2 + 1);
    check_memory(8.0 * nr * 2 + 16.0 * nc * 2, mem_cap, "moving-average FFT buffers");
    spectrum_ = alloc_complex(nc);
    auto buf = alloc_real(nr);
    std::fill(buf.get(), buf.get() + nr, 0.0);
    const int w = kernel.width();
    for (int i = 0; i < w; ++i)
      for (int j = 0; j < w; ++j) buf[static_cast<std::size_t>(i) * L1_ + j] = kernel.values[static_cast<std::size_t>(i) * w + j];
    fft_r2c(L0_, L1_, buf.get(), spectrum_.get());
  }

  int output_t() const { return nt_ - 2 * M_; }
  int output_s() const { return ns_ - 2 * M_; }

  /// Y(t,s) = sum_{|u|,|v| <= M} a(u,v) eps(t + M - u, s + M - v) for the valid window.
  LatticeField apply(const LatticeField& noise) const {
    if (noise.Nt != nt_ || noise.Ns != ns_) throw DimensionMismatch("noise dims differ from the prepared size");
    const std::size_t nr = static_cast<std::size_t>(L0_) * L1_;
    const std::size_t nc = static_cast<std::size_t>(L0_) * (L1_ / 2 + 1);
    auto buf = alloc_real(nr);
    auto spec = alloc_complex(nc);
    std::fill(buf.get(), buf.get() + nr, 0.0);
    for (int t = 0; t < nt_; ++t)
      std::copy(noise.values.begin() + static_cast<std::ptrdiff_t>(t) * ns_,
                noise.values.begin() + static_cast<std::ptrdiff_t>(t + 1) * ns_, buf.get() + static_cast<std::size_t>(t) * L1_);
    fft_r2c(L0_, L1_, buf.get(), spec.get());
    for (std::size_t i = 0; i < nc; ++i) {
      const double ar = spectrum_[i][0], ai = spectrum_[i][1];
      const double br = spec[i][0], bi = spec[i][1];
      spec[i][0] = ar * br - ai * bi;
      spec[i][1] = ar * bi + ai * br;
    }
    fft_c2r(L0_, L1_, spec.get(), buf.get());
    const double scale = 1.0 / static_cast<double>(nr);
    LatticeField out(output_t(), output_s());
    out.seed = noise.seed;
    out.margin = M_;
    for (int t = 0; t < out.Nt; ++t)
      for (int s = 0; s < out.Ns; ++s)
        out.at(t, s) = buf[static_cast<std::size_t>(t + 2 * M_) * L1_ + static_cast<std::size_t>(s + 2 * M_)] * scale;
    return out;
  }

 private:
  int M_, nt_, ns_;
  int L0_ = 0, L1_ = 0;
  ComplexBuffer spectrum_;
};

inline LatticeField moving_average(const CoefficientKernel& kernel, const LatticeField& noise) {
  return MovingAverage(kernel, noise.Nt, noise.Ns).apply(noise);
}

/// kappa_0..kappa_{2k} of Y(0,0) = sum a eps: kappa_j(Y) = kappa_j(eps) sum a^j.
inline std::vector<double> cumulants_of_Y(const CoefficientKernel& kernel, const NoiseSpec& spec, int k) {
  const auto ke = spec.cumulants(2 * k);
  std::vector<double> out(ke.size(), 0.0);
  for (int j = 1; j <= 2 * k; ++j) out[j] = ke[j] == 0.0 ? 0.0 : ke[j] * kernel.power_sum(j);
  return out;
}

/// Monic degree-k polynomial with E A_k(xi) = 0 relative to a base law.
struct AppellPolynomial {
  int degree = 0;
  std::vector<double> coeffs;          // c_0..c_k in the monomial basis
  std::vector<double> source_moments;  // m_0..m_k of the base law

  double operator()(double x) const {
    double acc = 0;
    for (int i = degree; i >= 0; --i) acc = acc * x + coeffs[i];
    return acc;
  }
};

/// A_k from moments m[0] = 1, m[1] = 0, m[2..k] by division of exp(ux) by sum m_j u^j / j!.
inline AppellPolynomial appell_from_moments(const std::vector<double>& m, int k) {
  if (k < 0) throw DomainError("appell degree must be >= 0");
  if (static_cast<int>(m.size()) < k + 1) throw DomainError("appell_from_moments: need moments m_0..m_k");
  if (std::abs(m[0] - 1.0) > 1e-12) throw DomainError("appell_from_moments: m_0 must be 1");
  if (k >= 1 && std::abs(m[1]) > 1e-12 * std::max(1.0, k >= 2 ? std::sqrt(std::abs(m[2])) : 1.0)) {
    throw DomainError("appell_from_moments: base law must be centred (m_1 = 0)");
  }
  // coefficients b_n of 1 / M(u) = sum b_n u^n / n!
  std::vector<double> b(static_cast<std::size_t>(k) + 1, 0.0);
  b[0] = 1.0;
  for (int n = 1; n <= k; ++n) {
    double acc = 0;
    for (int i = 1; i <= n; ++i) acc += binomial(n, i) * m[i] * b[n - i];
    b[n] = -acc;
  }
  AppellPolynomial p;
  p.degree = k;
  p.coeffs.assign(static_cast<std::size_t>(k) + 1, 0.0);
  for (int j = 0; j <= k; ++j) p.coeffs[k - j] = binomial(k, j) * b[j];
  p.source_moments.assign(m.begin(), m.begin() + k + 1);
  return p;
}

/// Probabilists' Hermite polynomial He_k as an Appell polynomial of N(0, 1).
inline AppellPolynomial hermite_polynomial(int k) { return appell_from_moments(NoiseSpec{}.moments(k), k); }

inline LatticeField subordinate(const LatticeField& field, const AppellPolynomial& poly) {
  LatticeField out = field;
  for (double& x : out.values) x = poly(x);
  return out;
}

/// G(x) = sum_j c_j He_j(x) / j!, j = 0..J.
struct HermiteExpansion {
  std::vector<double> coeffs;

  int rank() const {
    for (std::size_t j = 0; j < coeffs.size(); ++j)
      if (coeffs[j] != 0.0) return static_cast<int>(j);
    return -1;
  }

  double operator()(double x) const {
    double h0 = 1.0, h1 = x, acc = 0.0, fact = 1.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      double hj;
      if (j == 0) {
        hj = h0;
      } else if (j == 1) {
        hj = h1;
      } else {
        hj = x * h1 - static_cast<double>(j - 1) * h0;
        h0 = h1;
        h1 = hj;
      }
      if (j > 0) fact *= static_cast<double>(j);
      acc += coeffs[j] * hj / fact;
    }
    return acc;
  }

  /// E G(Z)^2 for Z standard normal.
  double second_moment() const {
    double acc = 0, fact = 1;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      if (j > 0) fact *= static_cast<double>(j);
      acc += coeffs[j] * coeffs[j] / fact;
    }
    return acc;
  }
};

/// X = G(Y / sigma); requires Hermite rank exactly k.
inline LatticeField subordinate_general(const LatticeField& field, const HermiteExpansion& G, int k,
                                        double sigma = 1.0) {
  const int r = G.rank();
  if (r < 0) throw RankError("all Hermite coefficients vanish");
  if (r != k) {
    throw RankError("Hermite rank is " + std::to_string(r) + " but order " + std::to_string(k) + " was requested");
  }
  LatticeField out = field;
  for (double& x : out.values) x = G(x / sigma);
  return out;
}

struct OffDiagonalDecomposition {
  LatticeField offdiag;   // Y^{.k}: sum over pairwise distinct noise sites
  LatticeField diagonal;  // remainder of A_k(Y) built from Wick products
  LatticeField appell;    // A_k(Y) evaluated directly
};

/// Brute-force split of A_k(Y) on output cells where the whole kernel fits the noise window.
inline OffDiagonalDecomposition offdiag_decomposition_oracle(const CoefficientKernel& kernel, const LatticeField& noise,
                                                             const NoiseSpec& spec, int k) {
  if (kernel.M > 3 || noise.Nt > 12 || noise.Ns > 12 || k < 1 || k > 3) {
    throw SizeCapError("oracle limited to M <= 3, 12x12 noise and k in {1,2,3}");
  }
  const int M = kernel.M, w = kernel.width();
  const int nt = noise.Nt - 2 * M, ns = noise.Ns - 2 * M;
  if (nt < 1 || ns < 1) throw DimensionMismatch("noise window smaller than the kernel");
  const auto kappa = cumulants_of_Y(kernel, spec, k);
  const auto appell_y = appell_from_moments(moments_from_cumulants(kappa), k);
  std::vector<AppellPolynomial> appell_e;
  for (int n = 0; n <= k; ++n) appell_e.push_back(appell_from_moments(spec.moments(n), n));

  OffDiagonalDecomposition out{LatticeField(nt, ns), LatticeField(nt, ns), LatticeField(nt, ns)};
  const int sites = w * w;
  std::vector<double> wt(sites), ep(sites);
  for (int t = 0; t < nt; ++t) {
    for (int s = 0; s < ns; ++s) {
      // site i <-> kernel lag (u, v); noise cell (t + M - u, s + M - v) in window coordinates
      double y = 0;
      for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j) {
          const int idx = i * w + j;
          wt[idx] = kernel.values[static_cast<std::size_t>(idx)];
          ep[idx] = noise.at(t + 2 * M - i, s + 2 * M - j);
          y += wt[idx] * ep[idx];
        }
      // ordered k-tuples of distinct sites
      double off = 0;
      if (k == 1) {
        off = y;
      } else if (k == 2) {
        for (int a = 0; a < sites; ++a)
          for (int b = 0; b < sites; ++b)
            if (a != b) off += wt[a] * ep[a] * wt[b] * ep[b];
      } else {
        for (int a = 0; a < sites; ++a)
          for (int b = 0; b < sites; ++b) {
            if (b == a) continue;
            for (int c = 0; c < sites; ++c)
              if (c != a && c != b) off += wt[a] * ep[a] * wt[b] * ep[b] * wt[c] * ep[c];
          }
      }
      // multisets of size k with a repeated site: k!/prod(n_i!) prod w^n A_n(eps)
      double diag = 0;
      std::vector<int> tuple(static_cast<std::size_t>(k), 0);
      for (;;) {
        std::vector<std::pair<int, int>> mult;
        for (int x : tuple) {
          if (!mult.empty() && mult.back().first == x) ++mult.back().second;
          else mult.emplace_back(x, 1);
        }
        if (static_cast<int>(mult.size()) < k) {
          double term = 1, denom = 1;
          for (auto [site, n] : mult) {
            term *= std::pow(wt[site], n) * appell_e[n](ep[site]);
            for (int f = 2; f <= n; ++f) denom *= f;
          }
          double kf = 1;
          for (int f = 2; f <= k; ++f) kf *= f;
          diag += kf / denom * term;
        }
        // next non-decreasing tuple
        int pos = k - 1;
        while (pos >= 0 && tuple[pos] == sites - 1) --pos;
        if (pos < 0) break;
        ++tuple[pos];
        for (int q = pos + 1; q < k; ++q) tuple[q] = tuple[pos];
      }
      out.offdiag.at(t, s) = off;
      out.diagonal.at(t, s) = diag;
      out.appell.at(t, s) = appell_y(y);
    }
  }
  return out;
}

}  // namespace lrd
