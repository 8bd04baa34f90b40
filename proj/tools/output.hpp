#pragma once

// Table output for the CLI: CSV (comment header, '.' decimals, LF) or JSON.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "pinning/error.hpp"

namespace pinning::cli {

using Cell = std::variant<double, long, std::uint64_t, std::string>;

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    require(row.size() == columns.size(), "table row width does not match columns");
    rows.push_back(std::move(row));
  }
};

// %.17g round-trips every double and does not depend on the locale's decimal point
// for the C locale the CLI runs in.
inline std::string format_cell(const Cell& c) {
  struct {
    std::string operator()(double v) const {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return buf;
    }
    std::string operator()(long v) const { return std::to_string(v); }
    std::string operator()(std::uint64_t v) const { return std::to_string(v); }
    std::string operator()(const std::string& v) const { return v; }
  } visit;
  return std::visit(visit, c);
}

inline nlohmann::ordered_json to_json(const Cell& c) {
  return std::visit([](const auto& v) { return nlohmann::ordered_json(v); }, c);
}

class IoError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Writes `dir/name.csv` or `dir/name.json`; returns the path.
inline std::string write_table(const Table& t, const std::string& dir, const std::string& format,
                               const std::string& header) {
  const std::string path = dir + "/" + t.name + (format == "json" ? ".json" : ".csv");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  if (format == "json") {
    nlohmann::ordered_json doc;
    doc["#"] = header;
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
      nlohmann::ordered_json r;
      for (std::size_t i = 0; i < row.size(); ++i) r[t.columns[i]] = to_json(row[i]);
      doc["rows"].push_back(std::move(r));
    }
    out << doc.dump(2) << '\n';
  } else {
    out << "# " << header << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_cell(row[i]);
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing '" + path + "'");
  return path;
}

// One JSON object per file, used for Monte Carlo records and point reports.
inline std::string write_record(const std::string& name, const nlohmann::ordered_json& record,
                                const std::string& dir, const std::string& header) {
  const std::string path = dir + "/" + name + ".json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  nlohmann::ordered_json doc;
  doc["#"] = header;
  for (const auto& [k, v] : record.items()) doc[k] = v;
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
  return path;
}

}  // namespace pinning::cli
