#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace kinlim::io {

inline constexpr const char* kCodeVersion = "kinlim 1.0.0";

// Numeric table written as RFC-4180 CSV with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  void add(std::vector<double> row);
};

// Shortest round-trip decimal form ('.' separator, locale independent).
std::string format_double(double x);
std::string csv_field(std::string_view s);  // quotes fields that need it
std::string to_csv(const CsvTable& table);

// Writes `path` and `path.meta.json`; the sidecar carries `meta` plus the
// column names, so every CSV stays a plain table.
void write_csv(const std::filesystem::path& path, const CsvTable& table,
               const nlohmann::json& meta);
CsvTable read_csv(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// FNV-1a 64-bit, rendered as 16 hex digits.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(std::uint64_t h);
std::string config_hash(const nlohmann::json& resolved);  // hash of the compact dump

// Binary snapshot: uint64 little-endian header length, UTF-8 JSON header,
// then little-endian float64 payload in row-major order.
struct Snapshot {
  nlohmann::json header;
  std::vector<double> payload;
};
void write_snapshot(const std::filesystem::path& path, const nlohmann::json& header,
                    std::span<const double> payload);
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace kinlim::io
