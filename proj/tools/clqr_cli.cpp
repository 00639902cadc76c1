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

// clqr: solve, batch, histogram and make-fixtures front end.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "clqr/clqr.hpp"

namespace {

using clqr::Error;
using clqr::ErrorCode;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCap = 2;

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, flag + ": cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, flag + ": empty list");
  return out;
}

nlohmann::json vector_json(const clqr::ConstVectorRef& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

nlohmann::json result_json(const clqr::SolveResult& r) {
  nlohmann::json j;
  j["status"] = std::string(clqr::to_string(r.status));
  j["N"] = r.N;
  j["N_backtracked"] = r.N_backtracked;
  j["iterations"] = r.iterations_total;
  j["outer_rounds"] = r.outer_rounds;
  j["cost"] = r.cost;
  j["u0"] = vector_json(r.u0);
  j["residuals"] = {{"mu_change_sq", r.residuals.mu_change_sq},
                    {"consensus_residual", r.residuals.consensus_residual},
                    {"slack_residual", r.residuals.slack_residual}};
  return j;
}

struct SolveArgs {
  std::string config;
  std::string x0;
  std::string trace;
};

int cmd_solve(const SolveArgs& a) {
  clqr::InstanceConfig cfg = clqr::load_config(a.config);
  clqr::Vector x0 = cfg.x0;
  if (!a.x0.empty()) {
    const std::vector<double> v = parse_list(a.x0, "--x0");
    if (static_cast<Eigen::Index>(v.size()) != x0.size())
      throw Error(ErrorCode::kDimensionMismatch, "--x0: expected " + std::to_string(x0.size()) + " components");
    x0 = Eigen::Map<const clqr::Vector>(v.data(), x0.size());
  }
  const clqr::ProblemInstance inst = cfg.instance(x0);
  const clqr::ValidationReport report = clqr::validate(inst);
  if (!report.ok()) {
    for (const std::string& f : report.failures) std::cerr << "invalid instance: " << f << '\n';
    return kExitError;
  }
  const clqr::StageMatrices s = clqr::make_stage_matrices(inst);
  clqr::SolveResult result;
  if (!a.trace.empty()) {
    std::ofstream os(a.trace);
    if (!os) throw Error(ErrorCode::kIo, "cannot open trace file '" + a.trace + "'");
    clqr::TraceWriter writer(os, s, x0);
    result = clqr::solve(inst, s, writer);
  } else {
    result = clqr::solve(inst, s);
  }
  std::cout << result_json(result).dump(2) << '\n';
  switch (result.status) {
    case clqr::SolveStatus::kConverged:
    case clqr::SolveStatus::kInsideTerminalSet: return kExitOk;
    default: return kExitCap;
  }
}

struct BatchArgs {
  std::string config;
  std::size_t samples{100};
  std::uint64_t seed{1};
  std::string n0{"20"};
  std::string out{"batch.csv"};
  unsigned threads{0};
  bool timing{false};
};

int cmd_batch(const BatchArgs& a) {
  const clqr::InstanceConfig cfg = clqr::load_config(a.config);
  clqr::BatchOptions opt;
  opt.samples = a.samples;
  opt.seed = a.seed;
  opt.threads = a.threads;
  opt.N0_list.clear();
  for (double v : parse_list(a.n0, "--n0")) {
    if (v < 0 || v != static_cast<int>(v)) throw Error(ErrorCode::kInvalidArgument, "--n0: entries must be integers >= 0");
    opt.N0_list.push_back(static_cast<int>(v));
  }
  const clqr::BatchResult batch = clqr::run_batch(cfg, opt);

  std::ofstream csv(a.out);
  if (!csv) throw Error(ErrorCode::kIo, "cannot open '" + a.out + "'");
  clqr::write_csv(csv, batch.rows, cfg.system.n(), a.timing);
  csv.close();
  if (!csv) throw Error(ErrorCode::kIo, "failed writing '" + a.out + "'");

  const nlohmann::json summary = clqr::summary_json(batch, opt);
  const std::string summary_path = a.out + ".summary.json";
  std::ofstream js(summary_path);
  if (!js) throw Error(ErrorCode::kIo, "cannot open '" + summary_path + "'");
  js << summary.dump(2) << '\n';
  std::cout << summary.dump(2) << '\n';
  return kExitOk;
}

struct HistogramArgs {
  std::string csv;
  std::string column{"N_final"};
  double bin_width{1.0};
  std::optional<int> n0;
  std::string out;
};

int cmd_histogram(const HistogramArgs& a) {
  std::ifstream is(a.csv);
  if (!is) throw Error(ErrorCode::kIo, "cannot open '" + a.csv + "'");
  const auto rows = clqr::read_csv(is);
  const clqr::Histogram h = clqr::histogram(rows, a.column, a.bin_width, a.n0);
  if (a.out.empty()) {
    clqr::write_histogram(std::cout, h);
  } else {
    std::ofstream os(a.out);
    if (!os) throw Error(ErrorCode::kIo, "cannot open '" + a.out + "'");
    clqr::write_histogram(os, h);
  }
  return kExitOk;
}

struct FixtureArgs {
  std::string config;
  std::string x0;
  std::string out{"fixtures"};
  std::int64_t iterations{1000000};
};

int cmd_make_fixtures(const FixtureArgs& a) {
  namespace fs = std::filesystem;
  clqr::InstanceConfig cfg = clqr::load_config(a.config);
  clqr::Vector x0 = cfg.x0;
  if (!a.x0.empty()) {
    const std::vector<double> v = parse_list(a.x0, "--x0");
    if (static_cast<Eigen::Index>(v.size()) != x0.size())
      throw Error(ErrorCode::kDimensionMismatch, "--x0: wrong number of components");
    x0 = Eigen::Map<const clqr::Vector>(v.data(), x0.size());
  }
  const clqr::ProblemInstance inst = cfg.instance(x0);
  const clqr::ReferenceSolution ref = clqr::reference_solution(inst, a.iterations);

  fs::create_directories(a.out);
  auto path = [&](const char* name) { return (fs::path(a.out) / name).string(); };
  clqr::save_matrix(path("P.txt"), inst.weights.P);
  clqr::save_matrix(path("K.txt"), inst.weights.K);
  {
    std::ofstream os(path("Xf.txt"));
    clqr::write_polyhedron(os, inst.terminal_set);
    if (!os) throw Error(ErrorCode::kIo, "failed writing Xf.txt");
  }
  clqr::save_matrix(path("x0.txt"), x0);
  clqr::save_matrix(path("mu_star.txt"), ref.mu_star.stacked());
  clqr::save_matrix(path("y_star.txt"), ref.y_star);
  clqr::save_matrix(path("u_star.txt"), ref.fh.u);
  clqr::save_matrix(path("meta.txt"), (clqr::Matrix(1, 2) << ref.N, ref.fh.cost).finished());

  nlohmann::json j;
  j["N"] = ref.N;
  j["cost"] = ref.fh.cost;
  j["mu_gap"] = ref.mu_gap;
  j["y_gap"] = ref.y_gap;
  j["out"] = a.out;
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infinite-horizon constrained LQR by time splitting"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "Solve one instance and print the result as JSON");
  solve->add_option("--config", solve_args.config, "Instance file")->required();
  solve->add_option("--x0", solve_args.x0, "Initial state, comma separated");
  solve->add_option("--trace", solve_args.trace, "Write a per-iteration CSV log to this path");

  BatchArgs batch_args;
  auto* batch = app.add_subcommand("batch", "Sample initial states and write one CSV row per (sample, N0)");
  batch->add_option("--config", batch_args.config, "Instance file")->required();
  batch->add_option("--samples", batch_args.samples, "Number of feasible samples")->check(CLI::PositiveNumber);
  batch->add_option("--seed", batch_args.seed, "Sampling seed");
  batch->add_option("--n0", batch_args.n0, "Initial horizons, comma separated");
  batch->add_option("--out", batch_args.out, "CSV output path (summary goes to PATH.summary.json)");
  batch->add_option("--threads", batch_args.threads, "Worker threads (0: all cores)");
  batch->add_flag("--timing", batch_args.timing, "Add the wall_time_ms column (not reproducible)");

  HistogramArgs hist_args;
  auto* hist = app.add_subcommand("histogram", "Bin a batch CSV column over converged rows");
  hist->add_option("--csv", hist_args.csv, "Batch CSV")->required();
  hist->add_option("--column", hist_args.column, "N_final, N_backtracked or iterations_total");
  hist->add_option("--bin-width", hist_args.bin_width, "Bin width")->check(CLI::PositiveNumber);
  hist->add_option("--n0", hist_args.n0, "Only rows with this N0");
  hist->add_option("--out", hist_args.out, "Output path (default: stdout)");

  FixtureArgs fix_args;
  auto* fix = app.add_subcommand("make-fixtures", "Regenerate reference fixtures for regression tests");
  fix->add_option("--config", fix_args.config, "Instance file")->required();
  fix->add_option("--x0", fix_args.x0, "Reference initial state (default: problem.x0)");
  fix->add_option("--out", fix_args.out, "Output directory");
  fix->add_option("--iterations", fix_args.iterations, "Splitting iterations for the cross-check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*solve) return cmd_solve(solve_args);
    if (*batch) return cmd_batch(batch_args);
    if (*hist) return cmd_histogram(hist_args);
    if (*fix) return cmd_make_fixtures(fix_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
