#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "slsmpc/error.hpp"

namespace slsmpc::csv {

using Row = std::vector<std::string>;

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline Row split(std::string_view line) {
  Row out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    auto field = trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    out.emplace_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Reads all non-empty lines. Lines starting with '#' are skipped.
inline std::vector<Row> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    rows.push_back(split(t));
  }
  return rows;
}

inline double parse_double(std::string_view s, const std::string& where) {
  s = trim(s);
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("cannot parse number '" + std::string(s) + "' in " + where);
  }
  return v;
}

inline long long parse_int(std::string_view s, const std::string& where) {
  s = trim(s);
  long long v = 0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("cannot parse integer '" + std::string(s) + "' in " + where);
  }
  return v;
}

// Dense numeric table; every row must have the same width.
inline std::vector<std::vector<double>> read_numeric(const std::filesystem::path& path) {
  auto rows = read_rows(path);
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!out.empty() && rows[r].size() != out.front().size()) {
      throw DataError(path.string() + ": row " + std::to_string(r) + " has " +
                      std::to_string(rows[r].size()) + " fields, expected " +
                      std::to_string(out.front().size()));
    }
    std::vector<double> vals;
    vals.reserve(rows[r].size());
    for (const auto& f : rows[r]) vals.push_back(parse_double(f, path.string()));
    out.push_back(std::move(vals));
  }
  return out;
}

// Shortest text that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace slsmpc::csv
