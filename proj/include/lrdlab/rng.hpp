#pragma once
// Counter-based generator (Philox4x32-10) so that any lattice cell's draw can
// be recomputed from (key, coordinates) without generating its neighbours.

#include <array>
#include <cmath>
#include <cstdint>

namespace lrd {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives a stream key from a master seed and any number of labels.
inline std::uint64_t derive_key(std::uint64_t seed) { return splitmix64(seed); }
template <class... Rest>
std::uint64_t derive_key(std::uint64_t seed, std::uint64_t label, Rest... rest) {
  return derive_key(splitmix64(seed) ^ splitmix64(label + 0x632BE59BD9B4E019ULL), static_cast<std::uint64_t>(rest)...);
}

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

  static Key key_from(std::uint64_t k) {
    return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
};

/// Uniform in (0, 1) from 64 random bits (53-bit mantissa, never 0).
inline double to_unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Draws attached to a lattice cell (t, s) of a keyed stream.
class CellRng {
 public:
  explicit CellRng(std::uint64_t key) : key_(Philox4x32::key_from(key)) {}

  std::array<std::uint32_t, 4> bits(std::int64_t t, std::int64_t s, std::uint32_t draw = 0) const {
    return Philox4x32::generate({static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(s), draw,
                                 static_cast<std::uint32_t>((static_cast<std::uint64_t>(t) >> 32) ^
                                                            ((static_cast<std::uint64_t>(s) >> 32) << 16))},
                                key_);
  }

  /// Two independent uniforms on (0, 1).
  std::array<double, 2> uniforms(std::int64_t t, std::int64_t s, std::uint32_t draw = 0) const {
    const auto b = bits(t, s, draw);
    return {to_unit_open((static_cast<std::uint64_t>(b[0]) << 32) | b[1]),
            to_unit_open((static_cast<std::uint64_t>(b[2]) << 32) | b[3])};
  }

  /// Two independent standard normals (Marsaglia polar method). Attempt j of
  /// draw d uses counter word d + j * 2^20, so draws must stay below 2^20.
  std::array<double, 2> normals(std::int64_t t, std::int64_t s, std::uint32_t draw = 0) const {
    for (std::uint32_t attempt = 0;; ++attempt) {
      const auto u = uniforms(t, s, draw + (attempt << 20));
      const double v1 = 2.0 * u[0] - 1.0, v2 = 2.0 * u[1] - 1.0;
      const double r2 = v1 * v1 + v2 * v2;
      if (r2 >= 1.0 || r2 == 0.0) continue;
      const double f = std::sqrt(-2.0 * std::log(r2) / r2);
      return {v1 * f, v2 * f};
    }
  }

 private:
  Philox4x32::Key key_;
};

}  // namespace lrd
