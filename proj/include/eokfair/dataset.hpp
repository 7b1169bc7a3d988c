#pragma once

#include "eokfair/error.hpp"
#include "eokfair/linalg.hpp"

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace eokfair {

/// Representations with binary sensitive attribute and binary target.
struct LabeledDataset {
  Matrix z;
  std::vector<std::uint8_t> s;
  std::vector<std::uint8_t> y;

  std::size_t size() const { return s.size(); }
  Eigen::Index dim() const { return z.cols(); }

  void validate() const {
    require(static_cast<std::size_t>(z.rows()) == s.size() && s.size() == y.size(), ErrorKind::dimension,
            "row counts of z, s, y disagree");
    for (std::size_t i = 0; i < s.size(); ++i)
      require(s[i] <= 1 && y[i] <= 1, ErrorKind::validation, "labels must be 0 or 1");
  }
};

/// Row indices of each (s, y) cell, cells[s][y], in dataset order.
using CellIndex = std::array<std::array<std::vector<std::size_t>, 2>, 2>;

inline CellIndex cell_index(const LabeledDataset& data) {
  CellIndex cells;
  for (std::size_t i = 0; i < data.size(); ++i) cells[data.s[i]][data.y[i]].push_back(i);
  return cells;
}

inline std::vector<std::size_t> rows_where(const std::vector<std::uint8_t>& labels, std::uint8_t value) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == value) out.push_back(i);
  return out;
}

inline void require_all_cells(const CellIndex& cells) {
  for (int s = 0; s < 2; ++s)
    for (int y = 0; y < 2; ++y)
      require(!cells[s][y].empty(), ErrorKind::empty_cell,
              "cell (s=" + std::to_string(s) + ", y=" + std::to_string(y) + ") is empty");
}

/// CSV with header z_0,...,z_{d-1},s,y; one row per sample.
inline void write_csv(std::ostream& os, const LabeledDataset& data) {
  data.validate();
  for (Eigen::Index k = 0; k < data.dim(); ++k) os << "z_" << k << ',';
  os << "s,y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Eigen::Index k = 0; k < data.dim(); ++k) os << format_real(data.z(static_cast<Eigen::Index>(i), k)) << ',';
    os << int(data.s[i]) << ',' << int(data.y[i]) << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    out.push_back(field);
  }
  return out;
}

inline double parse_real(const std::string& text, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size(), ErrorKind::validation,
          "line " + std::to_string(line) + ": not a number: '" + text + "'");
  return v;
}

}  // namespace detail

/// Reads the CSV layout produced by write_csv. Extra columns are rejected
/// unless named in `extra`, whose values are returned through `extra_values`.
inline LabeledDataset read_csv(std::istream& is, const std::string& extra = {},
                               std::vector<double>* extra_values = nullptr) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::io, "empty CSV input");
  const auto header = detail::split_csv_line(line);
  int s_col = -1, y_col = -1, extra_col = -1;
  std::vector<int> z_cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const auto& h = header[static_cast<std::size_t>(c)];
    if (h == "s") s_col = c;
    else if (h == "y") y_col = c;
    else if (!extra.empty() && h == extra) extra_col = c;
    else if (h.rfind("z_", 0) == 0) z_cols.push_back(c);
    else throw Error(ErrorKind::validation, "unexpected CSV column '" + h + "'");
  }
  require(s_col >= 0 && y_col >= 0, ErrorKind::validation, "CSV header must contain s and y columns");
  require(!z_cols.empty(), ErrorKind::validation, "CSV header has no z_k columns");
  require(extra.empty() || extra_col >= 0, ErrorKind::validation, "CSV has no column '" + extra + "'");

  std::vector<std::vector<double>> rows;
  LabeledDataset data;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    require(fields.size() == header.size(), ErrorKind::validation,
            "line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields");
    std::vector<double> zr;
    for (int c : z_cols) zr.push_back(detail::parse_real(fields[static_cast<std::size_t>(c)], lineno));
    rows.push_back(std::move(zr));
    const double sv = detail::parse_real(fields[static_cast<std::size_t>(s_col)], lineno);
    const double yv = detail::parse_real(fields[static_cast<std::size_t>(y_col)], lineno);
    require((sv == 0.0 || sv == 1.0) && (yv == 0.0 || yv == 1.0), ErrorKind::validation,
            "line " + std::to_string(lineno) + ": s and y must be 0 or 1");
    data.s.push_back(static_cast<std::uint8_t>(sv));
    data.y.push_back(static_cast<std::uint8_t>(yv));
    if (extra_col >= 0 && extra_values)
      extra_values->push_back(detail::parse_real(fields[static_cast<std::size_t>(extra_col)], lineno));
  }
  data.z.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(z_cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < z_cols.size(); ++k) data.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return data;
}

inline LabeledDataset read_csv_file(const std::string& path, const std::string& extra = {},
                                    std::vector<double>* extra_values = nullptr) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot open '" + path + "'");
  return read_csv(in, extra, extra_values);
}

}  // namespace eokfair
