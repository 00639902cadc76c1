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

#ifndef CLQR_CONFIG_HPP_
#define CLQR_CONFIG_HPP_

// Flat `key = value` instance files. Values are JSON literals: numbers,
// [a, b] vectors and [[a, b], [c, d]] row-major matrices. '#' starts a comment.
//
//   system.A = [[1.1, 2], [0, 0.95]]
//   solver.tau = 0.0726

#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "clqr/common.hpp"
#include "clqr/model.hpp"
#include "clqr/polytope.hpp"

namespace clqr {

struct InstanceConfig {
  LtiSystem system;
  Matrix Q, R;
  SolverConfig solver;
  Vector x0;                 // problem.x0, zero when absent
  Vector sample_lower, sample_upper;  // sampling box, defaults to the state box

  /// Builds the full instance (DARE, terminal set) for the given initial state.
  [[nodiscard]] ProblemInstance instance(const ConstVectorRef& x_init) const {
    return make_instance(system, Q, R, x_init, solver);
  }
  [[nodiscard]] ProblemInstance instance() const { return instance(x0); }
  [[nodiscard]] Polyhedron sampling_box() const { return Polyhedron::box(sample_lower, sample_upper); }
};

namespace detail {

struct ConfigEntry {
  nlohmann::json value;
  int line{0};
};

[[noreturn]] inline void config_error(const std::string& key, int line, const std::string& what) {
  throw Error(ErrorCode::kConfig, "config line " + std::to_string(line) + ", key '" + key + "': " + what);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline Matrix json_matrix(const ConfigEntry& e, const std::string& key) {
  const nlohmann::json& j = e.value;
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) config_error(key, e.line, "expected a number or a non-empty array");
  if (!j.front().is_array()) {
    Matrix M(static_cast<Eigen::Index>(j.size()), 1);
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) config_error(key, e.line, "non-numeric entry");
      M(static_cast<Eigen::Index>(i), 0) = j[i].get<double>();
    }
    return M;
  }
  const std::size_t cols = j.front().size();
  if (cols == 0) config_error(key, e.line, "empty row");
  Matrix M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) config_error(key, e.line, "ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) config_error(key, e.line, "non-numeric entry");
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return M;
}

inline Vector json_vector(const ConfigEntry& e, const std::string& key) {
  const Matrix M = json_matrix(e, key);
  if (M.cols() != 1 && M.rows() != 1) config_error(key, e.line, "expected a vector");
  return Eigen::Map<const Vector>(M.data(), M.size());
}

inline double json_number(const ConfigEntry& e, const std::string& key) {
  if (!e.value.is_number()) config_error(key, e.line, "expected a number");
  return e.value.get<double>();
}

inline std::int64_t json_integer(const ConfigEntry& e, const std::string& key) {
  if (!e.value.is_number_integer()) config_error(key, e.line, "expected an integer");
  return e.value.get<std::int64_t>();
}

inline bool json_bool(const ConfigEntry& e, const std::string& key) {
  if (!e.value.is_boolean()) config_error(key, e.line, "expected true or false");
  return e.value.get<bool>();
}

}  // namespace detail

/// Parses an instance file. Errors name the key and line.
inline InstanceConfig parse_config(std::istream& is) {
  using detail::ConfigEntry;
  std::map<std::string, ConfigEntry> entries;
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) detail::config_error(line, line_no, "missing '='");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string text = detail::trim(line.substr(eq + 1));
    if (key.empty()) detail::config_error(key, line_no, "empty key");
    if (entries.count(key)) detail::config_error(key, line_no, "duplicate key");
    ConfigEntry entry;
    entry.line = line_no;
    try {
      entry.value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
      detail::config_error(key, line_no, "cannot parse value '" + text + "'");
    }
    entries.emplace(key, std::move(entry));
  }

  auto take = [&](const std::string& key) -> std::optional<ConfigEntry> {
    const auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    ConfigEntry e = std::move(it->second);
    entries.erase(it);
    return e;
  };
  auto need = [&](const std::string& key) {
    auto e = take(key);
    if (!e) throw Error(ErrorCode::kConfig, "config: missing required key '" + key + "'");
    return *e;
  };

  InstanceConfig cfg;
  cfg.system.A = detail::json_matrix(need("system.A"), "system.A");
  cfg.system.B = detail::json_matrix(need("system.B"), "system.B");
  cfg.system.C = detail::json_matrix(need("constraints.C"), "constraints.C");
  cfg.system.D = detail::json_matrix(need("constraints.D"), "constraints.D");
  cfg.system.d = detail::json_vector(need("constraints.d"), "constraints.d");
  cfg.Q = detail::json_matrix(need("cost.Q"), "cost.Q");
  cfg.R = detail::json_matrix(need("cost.R"), "cost.R");

  const Eigen::Index n = cfg.system.A.rows(), m = cfg.system.B.cols(), p = cfg.system.C.rows();
  auto check = [&](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw Error(ErrorCode::kConfig, "config key '" + key + "': " + what);
  };
  check(cfg.system.A.cols() == n, "system.A", "must be square");
  check(cfg.system.B.rows() == n, "system.B", "row count must match system.A");
  check(cfg.system.C.cols() == n, "constraints.C", "column count must match system.A");
  check(cfg.system.D.rows() == p && cfg.system.D.cols() == m, "constraints.D", "must be p × m");
  check(cfg.system.d.size() == p, "constraints.d", "length must match constraints.C rows");
  check(cfg.Q.rows() == n && cfg.Q.cols() == n, "cost.Q", "must be n × n");
  check(cfg.R.rows() == m && cfg.R.cols() == m, "cost.R", "must be m × m");

  SolverConfig& s = cfg.solver;
  if (auto e = take("solver.tau")) s.tau = detail::json_number(*e, "solver.tau");
  if (auto e = take("solver.k_bar_first")) s.k_bar_first = static_cast<int>(detail::json_integer(*e, "solver.k_bar_first"));
  if (auto e = take("solver.k_bar")) s.k_bar = static_cast<int>(detail::json_integer(*e, "solver.k_bar"));
  if (auto e = take("solver.eps_term")) s.eps_term = detail::json_number(*e, "solver.eps_term");
  if (auto e = take("solver.eps_tighten")) s.eps_tighten = detail::json_number(*e, "solver.eps_tighten");
  if (auto e = take("solver.k_max")) s.k_max = detail::json_integer(*e, "solver.k_max");
  if (auto e = take("solver.N0")) s.N0 = static_cast<int>(detail::json_integer(*e, "solver.N0"));
  if (auto e = take("solver.N_max")) s.N_max = static_cast<int>(detail::json_integer(*e, "solver.N_max"));
  if (auto e = take("solver.dare_tol")) s.dare_tol = detail::json_number(*e, "solver.dare_tol");
  if (auto e = take("solver.backtrack_active_tol"))
    s.backtrack_active_tol = detail::json_number(*e, "solver.backtrack_active_tol");
  if (auto e = take("solver.normalize_tightening"))
    s.normalize_tightening = detail::json_bool(*e, "solver.normalize_tightening");
  if (auto e = take("solver.printed_signs")) s.printed_signs = detail::json_bool(*e, "solver.printed_signs");
  if (auto e = take("solver.mpi_max_iter")) s.mpi_max_iter = static_cast<int>(detail::json_integer(*e, "solver.mpi_max_iter"));

  cfg.x0 = Vector::Zero(n);
  if (auto e = take("problem.x0")) {
    cfg.x0 = detail::json_vector(*e, "problem.x0");
    if (cfg.x0.size() != n) detail::config_error("problem.x0", e->line, "length must match the state dimension");
  }

  auto lower = take("sampling.lower");
  auto upper = take("sampling.upper");
  if (lower && upper) {
    cfg.sample_lower = detail::json_vector(*lower, "sampling.lower");
    cfg.sample_upper = detail::json_vector(*upper, "sampling.upper");
    if (cfg.sample_lower.size() != n) detail::config_error("sampling.lower", lower->line, "wrong length");
    if (cfg.sample_upper.size() != n) detail::config_error("sampling.upper", upper->line, "wrong length");
    if ((cfg.sample_lower.array() > cfg.sample_upper.array()).any())
      detail::config_error("sampling.lower", lower->line, "lower bound above upper bound");
  } else if (lower || upper) {
    const std::string key = lower ? "sampling.lower" : "sampling.upper";
    detail::config_error(key, (lower ? lower : upper)->line, "sampling.lower and sampling.upper go together");
  } else {
    // State box implied by the pure state rows of C x + D u ≤ d.
    Polyhedron state_rows = Polyhedron::universe(n);
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < p; ++i)
      if (cfg.system.D.row(i).cwiseAbs().maxCoeff() == 0.0) rows.push_back(i);
    Matrix F(static_cast<Eigen::Index>(rows.size()), n);
    Vector f(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      F.row(static_cast<Eigen::Index>(i)) = cfg.system.C.row(rows[i]);
      f(static_cast<Eigen::Index>(i)) = cfg.system.d(rows[i]);
    }
    try {
      std::tie(cfg.sample_lower, cfg.sample_upper) = box_bounds(Polyhedron(F, f));
    } catch (const Error&) {
      throw Error(ErrorCode::kConfig, "config: state constraints are not a box; set sampling.lower/sampling.upper");
    }
  }

  if (!entries.empty()) {
    const auto& [key, e] = *entries.begin();
    detail::config_error(key, e.line, "unknown key");
  }
  return cfg;
}

inline InstanceConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline InstanceConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kIo, "cannot open config '" + path + "'");
  return parse_config(is);
}

}  // namespace clqr

#endif  // CLQR_CONFIG_HPP_
