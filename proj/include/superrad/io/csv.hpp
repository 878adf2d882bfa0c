#pragma once

// Fixed-header CSV tables. Numbers are written with 17 significant digits so
// that reading a file back recovers every double exactly.

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "superrad/error.hpp"

namespace superrad::io {

using Cell = std::variant<double, long long, std::string>;

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_cell(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return format_number(*d);
  if (const long long* i = std::get_if<long long>(&c)) return std::to_string(*i);
  const std::string& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") != std::string::npos) {
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    return q + "\"";
  }
  return s;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != header.size())
      throw ValidationError("csv: row has " + std::to_string(row.size()) + " cells, header has " +
                            std::to_string(header.size()));
    rows.push_back(std::move(row));
  }
};

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_cell(row[i]);
    os << '\n';
  }
}

inline std::string to_csv(const Table& t) {
  std::ostringstream os;
  write_csv(os, t);
  return os.str();
}

/// Splits one CSV record, honoring double-quoted fields.
inline std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

/// Raw string table: header plus rows of fields.
struct TextTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return int(i);
    return -1;
  }

  double number(std::size_t row, const std::string& name) const {
    const int c = column(name);
    if (c < 0) throw ValidationError("csv: missing column '" + name + "'");
    const std::string& s = rows.at(row).at(std::size_t(c));
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ptr != end || ec != std::errc())
      throw ValidationError("csv: column '" + name + "' row " + std::to_string(row) + " is not a number: '" + s + "'");
    return v;
  }
};

inline TextTable read_csv(std::istream& is) {
  TextTable t;
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("csv: empty input");
  t.header = split_record(line);
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    auto rec = split_record(line);
    if (rec.size() != t.header.size())
      throw ValidationError("csv: record " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(rec.size()) +
                            " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(rec));
  }
  return t;
}

}  // namespace superrad::io
