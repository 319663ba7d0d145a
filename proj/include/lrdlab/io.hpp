#pragma once
// Output artifacts: CSV tables with a manifest comment line and the binary
// field format (32-byte header, little-endian float64, row-major).

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lrdlab/error.hpp"
#include "lrdlab/synthesis.hpp"

namespace lrd {

/// Creates the directory (and parents) if missing and checks that it accepts files.
inline std::filesystem::path ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
  const auto probe = dir / ".lrdlab_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw IoError("output directory '" + dir.string() + "' is not writable");
  }
  std::filesystem::remove(probe, ec);
  return dir;
}

/// Shortest decimal text that round-trips a double.
inline std::string format_number(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& manifest, const std::vector<std::string>& header)
      : path_(path), out_(path) {
    if (!out_) throw IoError("cannot write '" + path.string() + "'");
    out_ << "# manifest: " << manifest << "\n";
    row_strings(header);
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
    if (!out_) throw IoError("write failed for '" + path_.string() + "'");
  }

  void comment(const std::string& text) { out_ << "# " << text << "\n"; }

  template <class... Cells>
  void row(const Cells&... cells) {
    std::vector<std::string> v;
    (v.push_back(cell(cells)), ...);
    row_strings(v);
  }

 private:
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(long long v) { return std::to_string(v); }
  static std::string cell(unsigned long v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }

  std::filesystem::path path_;
  std::ofstream out_;
};

inline constexpr std::array<char, 8> kFieldMagic = {'L', 'R', 'D', 'F', 'L', 'D', '0', '1'};

namespace detail {

inline void put_u64(std::ofstream& f, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  f.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(std::ifstream& f) {
  unsigned char b[8];
  f.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace detail

/// Header: magic (8 bytes), N_t, N_s, seed (unsigned 64-bit little-endian each).
inline void write_field_binary(const std::filesystem::path& path, const LatticeField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(kFieldMagic.data(), 8);
  detail::put_u64(out, static_cast<std::uint64_t>(f.Nt));
  detail::put_u64(out, static_cast<std::uint64_t>(f.Ns));
  detail::put_u64(out, f.seed);
  for (double v : f.values) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline LatticeField read_field_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::array<char, 8> magic{};
  in.read(magic.data(), 8);
  if (!in || magic != kFieldMagic) throw IoError("'" + path.string() + "' is not a field file");
  const auto nt = detail::get_u64(in), ns = detail::get_u64(in), seed = detail::get_u64(in);
  LatticeField f(static_cast<int>(nt), static_cast<int>(ns));
  f.seed = seed;
  for (double& v : f.values) v = std::bit_cast<double>(detail::get_u64(in));
  if (!in) throw IoError("'" + path.string() + "' is truncated");
  return f;
}

}  // namespace lrd
