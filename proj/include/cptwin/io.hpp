#pragma once

// Tabular export (CSV with header row, LF endings, fixed precision) and the
// HOM scan schema reader.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cptwin/error.hpp"
#include "cptwin/hom.hpp"

namespace cptwin::io {

using nlohmann::json;

// Cells are kept as text so CSV and JSON exports print identical digits.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw Error(ErrorCode::InvalidArgument, "row width does not match header");
    rows.push_back(std::move(row));
  }
};

inline std::string fixed(double v, int decimals) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  std::string s = buf;
  if (s == "-0" || s.find_first_not_of("-0.") == std::string::npos) s = s.substr(s[0] == '-' ? 1 : 0);
  return s;
}

inline std::string general(double v, int digits = 12) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

inline void ensure_parent(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create directory for '" + path.string() + "'");
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

inline std::string to_csv(const Table& t) {
  std::string s;
  for (std::size_t c = 0; c < t.columns.size(); ++c) s += (c ? "," : "") + t.columns[c];
  s += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) s += ',';
      s += row[c];
    }
    s += '\n';
  }
  return s;
}

// Array of row objects; numeric-looking cells become JSON numbers.
inline json to_json(const Table& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json o = json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      json v = json::parse(row[c], nullptr, false);
      if (v.is_discarded() || v.is_object() || v.is_array() || v.is_string()) {
        o[t.columns[c]] = row[c] == "nan" || row[c].empty() ? json(nullptr) : json(row[c]);
      } else {
        o[t.columns[c]] = v;
      }
    }
    rows.push_back(std::move(o));
  }
  return rows;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, dump(j)); }

// ---------------------------------------------------------------------------
// HOM scan schema: delta_z_mm,total_counts,accidental_counts

inline const std::vector<std::string>& scan_columns() {
  static const std::vector<std::string> cols{"delta_z_mm", "total_counts", "accidental_counts"};
  return cols;
}

inline Table scan_table(const hom::HomScan& scan) {
  Table t{scan_columns(), {}};
  for (const auto& p : scan.points) {
    t.add({fixed(p.delta_z_mm, 6), std::to_string(p.total), std::to_string(p.accidental)});
  }
  return t;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::SchemaError, "line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
  return v;
}

inline std::int64_t parse_count(const std::string& s, std::size_t line) {
  std::size_t used = 0;
  long long v = -1;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || v < 0) {
    throw Error(ErrorCode::SchemaError, "line " + std::to_string(line) + ": '" + s + "' is not a non-negative count");
  }
  return v;
}

}  // namespace detail

inline hom::HomScan parse_scan_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  hom::HomScan scan;
  bool header = false;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split(line, ',');
    if (!header) {
      if (cells != scan_columns()) {
        throw Error(ErrorCode::SchemaError, "header must be delta_z_mm,total_counts,accidental_counts");
      }
      header = true;
      continue;
    }
    if (cells.size() != 3) throw Error(ErrorCode::SchemaError, "line " + std::to_string(n) + ": expected 3 fields");
    scan.points.push_back(
        {detail::parse_double(cells[0], n), detail::parse_count(cells[1], n), detail::parse_count(cells[2], n)});
  }
  if (!header) throw Error(ErrorCode::SchemaError, "empty scan file");
  hom::validate(scan);
  return scan;
}

inline hom::HomScan parse_scan_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::SchemaError, "scan JSON must be an array of rows");
  hom::HomScan scan;
  try {
    for (const json& r : j) {
      const json& total = r.at("total_counts");
      const json& acc = r.at("accidental_counts");
      if (!total.is_number_integer() || !acc.is_number_integer()) {
        throw Error(ErrorCode::SchemaError, "counts must be integers");
      }
      scan.points.push_back({r.at("delta_z_mm").get<double>(), total.get<std::int64_t>(), acc.get<std::int64_t>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, e.what());
  }
  hom::validate(scan);
  return scan;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// CSV unless the file name ends in .json.
inline hom::HomScan read_scan(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  if (path.extension() == ".json") {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::SchemaError, "'" + path.string() + "' is not valid JSON");
    return parse_scan_json(j);
  }
  return parse_scan_csv(text);
}

}  // namespace cptwin::io
