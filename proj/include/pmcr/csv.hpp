#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pmcr/dataset.hpp"
#include "pmcr/error.hpp"

namespace pmcr {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // file line number of each row, from 1

  std::size_t column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return j;
    }
    throw Error(ErrorCode::invalid_input, "missing column '" + name + "'");
  }
};

/// Splits one record; double quotes delimit fields that contain the delimiter, "" escapes a quote.
inline std::vector<std::string> split_csv_line(const std::string& line, char delim, std::size_t line_no) {
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
    } else if (c == delim) {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw Error(ErrorCode::invalid_input, "row " + std::to_string(line_no) + ": unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

/// Rows are numbered from 1 at the first line of the file.
inline CsvTable read_csv(std::istream& in, char delim = ',', bool header = true) {
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line, delim, line_no);
    if (header && t.header.empty()) {
      t.header = std::move(fields);
      std::set<std::string> seen;
      for (const auto& h : t.header) {
        if (!seen.insert(h).second) throw Error(ErrorCode::invalid_input, "duplicate column '" + h + "'");
      }
      continue;
    }
    if (t.header.empty()) {
      for (std::size_t j = 0; j < fields.size(); ++j) t.header.push_back("V" + std::to_string(j + 1));
    }
    if (fields.size() != t.header.size()) {
      throw Error(ErrorCode::invalid_input, "row " + std::to_string(line_no) + ": expected " +
                                                std::to_string(t.header.size()) + " fields, found " +
                                                std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lines.push_back(line_no);
  }
  if (t.header.empty()) throw Error(ErrorCode::invalid_input, "empty input");
  return t;
}

inline CsvTable read_csv_file(const std::string& path, char delim = ',', bool header = true) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
  return read_csv(in, delim, header);
}

struct InputSpec {
  std::string path;
  std::string x, y, w;
  std::optional<std::string> z;
  std::vector<std::string> covariates;
  std::set<std::string> categorical;
  char delimiter = ',';
  bool header = true;
};

inline double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  std::size_t b = 0;
  std::size_t e = cell.size();
  while (b < e && (cell[b] == ' ' || cell[b] == '\t')) ++b;
  while (e > b && (cell[e - 1] == ' ' || cell[e - 1] == '\t')) --e;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data() + b, cell.data() + e, v);
  if (b == e || ec != std::errc() || ptr != cell.data() + e) {
    throw Error(ErrorCode::invalid_input,
                "row " + std::to_string(row) + ", column '" + column + "': cannot parse '" + cell + "' as a number");
  }
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::invalid_input, "row " + std::to_string(row) + ", column '" + column + "': non-finite value");
  }
  return v;
}

inline Column column_from(const CsvTable& t, const std::string& name, bool categorical) {
  const std::size_t j = t.column(name);
  if (categorical) {
    std::vector<std::string> labels;
    labels.reserve(t.rows.size());
    for (const auto& r : t.rows) labels.push_back(r[j]);
    return Column::categorical_from_labels(name, labels);
  }
  RealVector v(static_cast<Index>(t.rows.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) v(static_cast<Index>(i)) = parse_cell(t.rows[i][j], t.lines[i], name);
  return Column::continuous(name, std::move(v));
}

inline Dataset dataset_from(const CsvTable& t, const InputSpec& spec) {
  auto col = [&](const std::string& name) { return column_from(t, name, spec.categorical.count(name) > 0); };
  Dataset d{col(spec.x), col(spec.y), col(spec.w), {}, {}};
  if (spec.z) d.z = col(*spec.z);
  for (const auto& c : spec.covariates) d.covariates.push_back(col(c));
  return d;
}

inline Dataset load_dataset(const InputSpec& spec) {
  return dataset_from(read_csv_file(spec.path, spec.delimiter, spec.header), spec);
}

}  // namespace pmcr
