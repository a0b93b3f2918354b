#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "kinlim/error.hpp"
#include "kinlim/io.hpp"

using namespace kinlim;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("kinlim_io_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("shortest decimal form round-trips") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(std::stod(io::format_double(x)) == x);
  }
  CHECK(io::format_double(0.5) == "0.5");
  CHECK(io::format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("csv quoting follows RFC 4180") {
  CHECK(io::csv_field("plain") == "plain");
  CHECK(io::csv_field("a,b") == "\"a,b\"");
  CHECK(io::csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  io::CsvTable t;
  t.header = {"eps", "err,max"};
  t.add({0.1, 2.5e-3});
  CHECK(io::to_csv(t) == "eps,\"err,max\"\r\n0.1,0.0025\r\n");
  CHECK_THROWS_AS(t.add({1.0}), PreconditionError);
}

TEST_CASE("csv file with metadata sidecar") {
  const auto dir = scratch_dir("csv");
  io::CsvTable t;
  t.header = {"x", "y"};
  for (int i = 0; i < 5; ++i) t.add({0.1 * i, 1.0 / (1 + i)});
  io::write_csv(dir / "table.csv", t, {{"config_hash", "abc"}});
  const auto back = io::read_csv(dir / "table.csv");
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  const auto meta = io::read_json(dir / "table.csv.meta.json");
  CHECK(meta.at("config_hash") == "abc");
  CHECK(meta.at("columns") == nlohmann::json(t.header));
  CHECK(meta.at("rows") == 5);
  io::write_csv(dir / "again.csv", t, {{"config_hash", "abc"}});
  CHECK(slurp(dir / "table.csv") == slurp(dir / "again.csv"));
}

TEST_CASE("FNV-1a hash") {
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(io::hash_hex(io::fnv1a64("a")) == "af63dc4c8601ec8c");
  const nlohmann::json a{{"b", 1}, {"a", 2}}, b{{"a", 2}, {"b", 1}};
  CHECK(io::config_hash(a) == io::config_hash(b));
  CHECK(io::config_hash(a) != io::config_hash({{"a", 2}, {"b", 2}}));
}

TEST_CASE("binary snapshot round trip") {
  const auto dir = scratch_dir("snap");
  std::vector<double> v{1.0, -0.0, 3.25e-300, std::numeric_limits<double>::max(), 0.1};
  io::write_snapshot(dir / "s.bin", {{"t", 0.5}, {"shape", {1, 5}}}, v);
  const auto s = io::read_snapshot(dir / "s.bin");
  CHECK(s.header.at("t") == 0.5);
  CHECK(s.header.at("payload_dtype") == "float64-le");
  REQUIRE(s.payload.size() == v.size());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::memcmp(&s.payload[i], &v[i], 8) == 0);
  const auto raw = slurp(dir / "s.bin");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i])) << (8 * i);
  CHECK(raw.size() == 8 + len + 8 * v.size());
  CHECK_THROWS_AS(io::read_snapshot(dir / "missing.bin"), PreconditionError);
}
