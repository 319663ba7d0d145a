#pragma once
// Flat dotted-key experiment configuration: every key has a default, unknown
// keys are rejected, values are validated against the model constraints.

#include <charconv>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lrdlab/error.hpp"
#include "lrdlab/models.hpp"

namespace lrd {

struct ConfigKey {
  const char* name;
  const char* default_value;
  const char* help;
};

/// The documented keys and their defaults.
inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"model.family", "heat", "heat | iso | separable | generic | white"},
      {"model.d", "0.6", "memory parameter of the heat (0 < d < 3/4) and iso (0 < d < 1/2) kernels"},
      {"model.theta", "0.5", "laziness of the heat random walk, 0 < theta < 1"},
      {"model.d1", "0.3", "separable kernel, horizontal memory parameter"},
      {"model.d2", "0.2", "separable kernel, vertical memory parameter"},
      {"model.q1", "1.2", "generic kernel, horizontal decay exponent"},
      {"model.q2", "2.4", "generic kernel, vertical decay exponent"},
      {"model.noise", "normal", "normal | rademacher | uniform"},
      {"model.k", "1", "Appell order of the subordination"},
      {"model.hermite", "", "comma list c_0, c_1, ... of G = sum c_j He_j / j! (overrides model.k)"},
      {"scan.gamma", "0.25,0.35,0.45,0.55,0.7,1.0", "gamma values of scan and transition"},
      {"scan.lambda", "64,91,128,181,256,362,512,724,1024", "lambda grid"},
      {"scan.replicas", "200", "Monte Carlo replicas R"},
      {"scan.x", "1", "horizontal corner of the partial-sum rectangle"},
      {"scan.y", "1", "vertical corner of the partial-sum rectangle"},
      {"numerics.M", "256", "kernel half-width for moving-average synthesis and the kernel command"},
      {"numerics.trunc_tol", "1e-6", "relative l2 tail tolerance of generic kernels"},
      {"numerics.rel_tol", "1e-6", "relative tolerance of convolution quadrature"},
      {"numerics.angular_intervals", "48", "arccos-uniform intervals of the tabulated L12"},
      {"numerics.boundary_tol", "1e-9", "distance to a regime boundary treated as on it"},
      {"numerics.mem_cap_mb", "2048", "memory cap for dense arrays, MiB"},
      {"simulate.nt", "256", "field rows"},
      {"simulate.ns", "256", "field columns"},
      {"convolve.z", "21", "number of equispaced z values in [-1, 1]"},
      {"covariance.mode", "exact", "exact (kernel FFT) | model (k! r_Y^k) | empirical"},
      {"covariance.T", "64", "lag window |t| <= T"},
      {"covariance.S", "64", "lag window |s| <= S"},
      {"covariance.N", "256", "field side of the empirical mode"},
      {"covariance.replicas", "100", "replicas of the empirical mode"},
      {"covariance.rays", "-0.8,0,0.8", "z values of the ray diagnostics"},
      {"covariance.radii", "16,32,64", "quasi-radii of the ray diagnostics"},
      {"io.out", "out", "output directory"},
      {"io.format", "csv", "csv | json"},
      {"seed", "1", "master seed (unsigned 64-bit)"},
      {"threads", "0", "worker threads, 0 = hardware concurrency"},
  };
  return keys;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool known_key(const std::string& k) {
  for (const auto& c : config_keys())
    if (k == c.name) return true;
  return false;
}

inline double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto t = trim(v);
  const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size()) throw ParseError("key '" + key + "': not a number: '" + v + "'");
  return out;
}

inline std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto t = trim(v);
  const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size()) throw ParseError("key '" + key + "': not an integer: '" + v + "'");
  return out;
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(to_double(key, item));
  }
  return out;
}

}  // namespace detail

class ExperimentConfig {
 public:
  ExperimentConfig() {
    for (const auto& c : config_keys()) values_[c.name] = c.default_value;
  }

  /// Sets one key; unknown keys are a ParseError.
  void set(const std::string& key, const std::string& value) {
    if (!detail::known_key(key)) throw ParseError("unknown key '" + key + "'");
    values_[key] = detail::trim(value);
  }

  /// Applies a `key=value` override.
  void set_assignment(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value, got '" + kv + "'");
    set(detail::trim(kv.substr(0, eq)), kv.substr(eq + 1));
  }

  const std::string& str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ParseError("unknown key '" + key + "'");
    return it->second;
  }
  double num(const std::string& key) const { return detail::to_double(key, str(key)); }
  std::int64_t integer(const std::string& key) const { return detail::to_int(key, str(key)); }
  std::vector<double> list(const std::string& key) const { return detail::to_list(key, str(key)); }

  std::uint64_t seed() const {
    std::uint64_t out = 0;
    const auto& v = str("seed");
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ParseError("key 'seed': not an unsigned 64-bit integer");
    return out;
  }

  int threads() const { return static_cast<int>(integer("threads")); }
  double mem_cap() const { return num("numerics.mem_cap_mb") * 1024.0 * 1024.0; }

  ModelSpec model() const {
    ModelSpec m;
    try {
      m.family = model_family_from_string(str("model.family"));
      m.noise = noise_law_from_string(str("model.noise"));
    } catch (const DomainError& e) {
      throw ValidationError(e.what());
    }
    m.d = num("model.d");
    m.theta = num("model.theta");
    m.d1 = num("model.d1");
    m.d2 = num("model.d2");
    m.q1 = num("model.q1");
    m.q2 = num("model.q2");
    m.k = static_cast<int>(integer("model.k"));
    m.hermite = list("model.hermite");
    m.M = static_cast<int>(integer("numerics.M"));
    m.trunc_tol = num("numerics.trunc_tol");
    return m;
  }

  /// Type checks every key and cross-validates the model.
  void validate() const {
    for (const char* k : {"model.d", "model.theta", "model.d1", "model.d2", "model.q1", "model.q2", "scan.x", "scan.y",
                          "numerics.trunc_tol", "numerics.rel_tol", "numerics.boundary_tol", "numerics.mem_cap_mb"})
      (void)num(k);
    for (const char* k : {"model.k", "scan.replicas", "numerics.M", "numerics.angular_intervals", "simulate.nt",
                          "simulate.ns", "convolve.z", "covariance.T", "covariance.S", "covariance.N",
                          "covariance.replicas", "threads"})
      (void)integer(k);
    for (const char* k : {"model.hermite", "scan.gamma", "scan.lambda", "covariance.rays", "covariance.radii"}) (void)list(k);
    (void)seed();
    model().validate();
    if (threads() < 0) throw ValidationError("threads must be >= 0");
    if (integer("scan.replicas") < 30) throw ValidationError("scan.replicas must be >= 30");
    if (!(num("numerics.mem_cap_mb") > 0)) throw ValidationError("numerics.mem_cap_mb must be positive");
    const auto& fmt = str("io.format");
    if (fmt != "csv" && fmt != "json") throw ValidationError("io.format must be csv or json");
    const auto& mode = str("covariance.mode");
    if (mode != "exact" && mode != "model" && mode != "empirical") {
      throw ValidationError("covariance.mode must be exact, model or empirical");
    }
  }

  /// Canonical `key=value` lines of every key that can influence numeric output
  /// (threads and io.* are excluded).
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) {
      if (k == "threads" || k.rfind("io.", 0) == 0) continue;
      out += k + "=" + v + "\n";
    }
    return out;
  }

  /// FNV-1a 64 of the canonical text, as 16 hex digits.
  std::string hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    static const char* hex = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = hex[h & 15];
    return s;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Parses `key = value` lines; `#` starts a comment. Defaults fill absent keys.
inline ExperimentConfig parse_config(const std::string& text, bool validate = true) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    if (!detail::known_key(key)) throw ParseError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    cfg.set(key, line.substr(eq + 1));
  }
  if (validate) cfg.validate();
  return cfg;
}

}  // namespace lrd
