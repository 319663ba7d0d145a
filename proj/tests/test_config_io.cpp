#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "lrdlab/config.hpp"
#include "lrdlab/io.hpp"

using namespace lrd;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("lrdlab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string read_all(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST(Config, MinimalConfigFillsDefaults) {
  const auto cfg = parse_config("model.family = heat\nmodel.d = 0.6\nmodel.theta = 0.5\nmodel.k = 1\n");
  const auto e = cfg.model().exponents();
  ASSERT_TRUE(e.has_value());
  EXPECT_NEAR(e->gamma0, 0.5, 1e-12);
  EXPECT_EQ(cfg.integer("scan.replicas"), 200);
  EXPECT_EQ(cfg.list("scan.lambda").size(), 9u);
}

TEST(Config, CommentsAndBlankLines) {
  const auto cfg = parse_config("# heading\n\nmodel.d = 0.3   # trailing\n");
  EXPECT_DOUBLE_EQ(cfg.num("model.d"), 0.3);
}

TEST(Config, UnknownKeyIsParseError) {
  EXPECT_THROW(parse_config("model.qq1 = 3\n"), ParseError);
  ExperimentConfig cfg;
  EXPECT_THROW(cfg.set_assignment("model.qq1=3"), ParseError);
  EXPECT_THROW(cfg.set_assignment("model.d"), ParseError);
  EXPECT_THROW(parse_config("model.d 0.3\n"), ParseError);
}

TEST(Config, BadValuesAreRejected) {
  EXPECT_THROW(parse_config("model.d = 0.9\n"), ValidationError);
  EXPECT_THROW(parse_config("model.d = abc\n"), ParseError);
  EXPECT_THROW(parse_config("model.family = cubic\n"), ValidationError);
  EXPECT_THROW(parse_config("scan.replicas = 10\n"), ValidationError);
  EXPECT_THROW(parse_config("io.format = xml\n"), ValidationError);
  EXPECT_THROW(parse_config("seed = -1\n"), ParseError);
}

TEST(Config, ErrorFamiliesMapToConfigExitCode) {
  try {
    parse_config("model.d = 0.9\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.exit_code(), 2);
  }
}

TEST(Config, HashIgnoresThreadsAndOutput) {
  ExperimentConfig a, b;
  b.set("threads", "4");
  b.set("io.out", "elsewhere");
  EXPECT_EQ(a.hash(), b.hash());
  b.set("seed", "2");
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Io, FormatNumberRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) EXPECT_EQ(std::stod(format_number(v)), v);
  EXPECT_EQ(format_number(0.5), "0.5");
}

TEST(Io, FieldBinaryRoundTrip) {
  const auto dir = ensure_directory(scratch_dir("bin"));
  LatticeField f(3, 5);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = 0.1 * static_cast<double>(i) - 1.0 / 7.0;
  f.seed = 0xfedcba9876543210ULL;
  write_field_binary(dir / "f.bin", f);
  EXPECT_EQ(fs::file_size(dir / "f.bin"), 32u + 15u * 8u);
  const auto g = read_field_binary(dir / "f.bin");
  EXPECT_EQ(g.Nt, 3);
  EXPECT_EQ(g.Ns, 5);
  EXPECT_EQ(g.seed, f.seed);
  EXPECT_EQ(g.values, f.values);
  const auto bytes = read_all(dir / "f.bin");
  EXPECT_EQ(bytes.substr(0, 8), "LRDFLD01");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3);
}

TEST(Io, TruncatedFieldIsIoError) {
  const auto dir = ensure_directory(scratch_dir("trunc"));
  LatticeField f(4, 4);
  write_field_binary(dir / "f.bin", f);
  fs::resize_file(dir / "f.bin", 60);
  EXPECT_THROW(read_field_binary(dir / "f.bin"), IoError);
  std::ofstream(dir / "junk.bin") << "not a field file at all, long enough";
  EXPECT_THROW(read_field_binary(dir / "junk.bin"), IoError);
}

TEST(Io, CsvStartsWithManifest) {
  const auto dir = ensure_directory(scratch_dir("csv") / "nested" / "deeper");
  {
    CsvWriter w(dir / "t.csv", "config_hash=abc seed=7", {"gamma", "lambda"});
    w.row(0.5, 64);
  }
  EXPECT_EQ(read_all(dir / "t.csv"), "# manifest: config_hash=abc seed=7\ngamma,lambda\n0.5,64\n");
}

TEST(Io, UnwritableDirectoryIsIoError) {
  const auto dir = ensure_directory(scratch_dir("file"));
  std::ofstream(dir / "plain") << "x";
  EXPECT_THROW(ensure_directory(dir / "plain" / "sub"), IoError);
}
