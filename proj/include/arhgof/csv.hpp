// Copyright 2026 The arhgof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// CSV files for series and kernels.
//   series: header "t,node_0,...,node_{m-1}", then one row per time index.
//   kernel: m rows of m comma-separated values, no header.
// Numbers are written in shortest round-trip form.

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "arhgof/error.hpp"
#include "arhgof/func_core.hpp"

namespace arhgof {

namespace csv {

inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double x = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("csv: cannot parse number '" + std::string(s) + "'");
  return x;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view chomp(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

}  // namespace csv

inline void write_series_csv(std::ostream& os, const FunctionalSeries& series) {
  const int m = series.grid()->size();
  os << 't';
  for (int j = 0; j < m; ++j) os << ",node_" << j;
  os << '\n';
  for (int t = 0; t < series.length(); ++t) {
    os << t;
    for (int j = 0; j < m; ++j) os << ',' << csv::format_double(series.rows()(t, j));
    os << '\n';
  }
}

// Reads a series; the grid is the uniform grid with as many nodes as columns.
inline FunctionalSeries read_series_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("series csv: empty input");
  const auto header = csv::split(csv::chomp(line));
  if (header.size() < 2 || header[0] != "t") throw ConfigError("series csv: bad header");
  for (std::size_t j = 1; j < header.size(); ++j)
    if (header[j] != "node_" + std::to_string(j - 1)) throw ConfigError("series csv: bad header column");
  const int m = static_cast<int>(header.size()) - 1;
  std::vector<double> values;
  int n = 0;
  while (std::getline(is, line)) {
    const auto row = csv::chomp(line);
    if (row.empty()) continue;
    const auto cells = csv::split(row);
    if (static_cast<int>(cells.size()) != m + 1)
      throw ConfigError("series csv: row " + std::to_string(n) + " has wrong column count");
    for (int j = 1; j <= m; ++j) values.push_back(csv::parse_double(cells[static_cast<std::size_t>(j)]));
    ++n;
  }
  RowMatrix rows = Eigen::Map<RowMatrix>(values.data(), n, m);
  return {Grid::uniform(m), std::move(rows)};
}

inline void write_kernel_csv(std::ostream& os, const KernelMatrix& k) {
  for (int i = 0; i < k.size(); ++i) {
    for (int j = 0; j < k.size(); ++j) {
      if (j) os << ',';
      os << csv::format_double(k.entries()(i, j));
    }
    os << '\n';
  }
}

// Reads an m x m kernel on `grid`. Covariance kernels are validated as
// symmetric PSD; otherwise the kernel is loaded as a general operator.
inline KernelMatrix read_kernel_csv(std::istream& is, const GridHandle& grid, bool covariance = false) {
  const int m = grid->size();
  Matrix entries(m, m);
  std::string line;
  int i = 0;
  while (std::getline(is, line)) {
    const auto row = csv::chomp(line);
    if (row.empty()) continue;
    if (i >= m) throw ConfigError("kernel csv: too many rows");
    const auto cells = csv::split(row);
    if (static_cast<int>(cells.size()) != m) throw ConfigError("kernel csv: wrong column count");
    for (int j = 0; j < m; ++j) entries(i, j) = csv::parse_double(cells[static_cast<std::size_t>(j)]);
    ++i;
  }
  if (i != m) throw ConfigError("kernel csv: expected " + std::to_string(m) + " rows");
  return {grid, std::move(entries), covariance};
}

template <class Fn>
auto with_input_file(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return fn(in);
}

}  // namespace arhgof
