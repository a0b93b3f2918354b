#include "kinlim/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "kinlim/error.hpp"

namespace kinlim::io {

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::out | std::ios::trunc | mode);
  if (!os) throw PreconditionError("io.path: cannot write " + path.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ifstream is(path, std::ios::in | mode);
  if (!is) throw PreconditionError("io.path: cannot read " + path.string());
  return is;
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void CsvTable::add(std::vector<double> row) {
  require(row.size() == header.size(), "csv: row width does not match the header");
  rows.push_back(std::move(row));
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    out += (c ? "," : "") + csv_field(table.header[c]);
  out += "\r\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_double(row[c]);
    out += "\r\n";
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table,
               const nlohmann::json& meta) {
  auto os = open_out(path, std::ios::binary);
  os << to_csv(table);
  nlohmann::json side = meta;
  side["columns"] = table.header;
  side["rows"] = table.rows.size();
  side["code_version"] = kCodeVersion;
  write_json(path.string() + ".meta.json", side);
}

CsvTable read_csv(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::binary);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_record(line);
    if (first) {
      t.header = std::move(fields);
      first = false;
      continue;
    }
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(std::stod(f));
    t.add(std::move(row));
  }
  return t;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  auto is = open_in(path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError("io.json: " + path.string() + ": " + e.what());
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

std::string config_hash(const nlohmann::json& resolved) {
  return hash_hex(fnv1a64(resolved.dump()));
}

void write_snapshot(const std::filesystem::path& path, const nlohmann::json& header,
                    std::span<const double> payload) {
  auto os = open_out(path, std::ios::binary);
  nlohmann::json h = header;
  h["payload_count"] = payload.size();
  h["payload_dtype"] = "float64-le";
  const std::string text = h.dump();
  const std::uint64_t len = to_le(text.size());
  os.write(reinterpret_cast<const char*>(&len), sizeof len);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (double v : payload) {
    const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(v));
    os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::binary);
  std::uint64_t len = 0;
  is.read(reinterpret_cast<char*>(&len), sizeof len);
  len = to_le(len);
  require(is.good() && len < (1ull << 32), "io.snapshot: corrupt header length");
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  Snapshot s;
  s.header = nlohmann::json::parse(text);
  const std::size_t n = s.header.at("payload_count").get<std::size_t>();
  s.payload.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    is.read(reinterpret_cast<char*>(&bits), sizeof bits);
    s.payload[i] = std::bit_cast<double>(to_le(bits));
  }
  require(static_cast<bool>(is), "io.snapshot: payload truncated");
  return s;
}

}  // namespace kinlim::io
