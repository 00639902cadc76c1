/*
 * Copyright 2026 The clqr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CLQR_IO_HPP_
#define CLQR_IO_HPP_

// Plain-text matrix format: one matrix row per line, entries separated by
// whitespace, full precision. Blank lines and lines starting with '#' are
// ignored.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "clqr/common.hpp"

namespace clqr {

/// Shortest round-trip representation ("%.17g").
inline std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

inline void write_matrix(std::ostream& os, const ConstMatrixRef& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j > 0) os << ' ';
      os << format_double(M(i, j));
    }
    os << '\n';
  }
}

inline Matrix read_matrix(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    std::string token;
    while (ls >> token) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kIo, "line " + std::to_string(lineno) + ": bad number '" + token + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(ErrorCode::kIo, "line " + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  Matrix M(static_cast<Eigen::Index>(rows.size()),
           rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return M;
}

inline void save_matrix(const std::string& path, const ConstMatrixRef& M) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorCode::kIo, "cannot open " + path + " for writing");
  write_matrix(os, M);
  require(static_cast<bool>(os), ErrorCode::kIo, "write failed: " + path);
}

inline Matrix load_matrix(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot open " + path);
  return read_matrix(is);
}

}  // namespace clqr

#endif  // CLQR_IO_HPP_
