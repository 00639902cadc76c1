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

#ifndef CLQR_EXPERIMENT_HPP_
#define CLQR_EXPERIMENT_HPP_

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "clqr/config.hpp"
#include "clqr/horizon.hpp"
#include "clqr/io.hpp"
#include "clqr/oracle.hpp"
#include "clqr/polytope.hpp"
#include "clqr/stage.hpp"

namespace clqr {

/// One (sample, N0) run. Optional numeric fields print as NA.
struct ExperimentRecord {
  std::int64_t sample_id{0};
  std::uint64_t seed{0};
  int N0{0};
  Vector x_init;
  std::string status;
  int N_final{0};
  int N_backtracked{0};
  int N_oracle{-1};
  int outer_rounds{0};
  std::int64_t iterations_total{0};
  double cost_splitting{0.0};
  std::optional<double> cost_oracle;
  std::optional<double> u0_error_vs_oracle;
  std::optional<double> wall_time_ms;

  bool operator==(const ExperimentRecord&) const = default;
};

/// Rows with these statuses are dropped from histograms and means.
inline bool excluded_from_statistics(const std::string& status) { return status != "Converged"; }

namespace detail {

inline std::string csv_optional(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

inline std::optional<double> parse_optional(const std::string& s) {
  if (s == "NA") return std::nullopt;
  return std::stod(s);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline std::string csv_header(Eigen::Index n, bool with_time) {
  std::string h = "sample_id,seed,N0";
  for (Eigen::Index i = 0; i < n; ++i) h += ",x0_" + std::to_string(i);
  h += ",status,N_final,N_backtracked,N_oracle,outer_rounds,iterations_total,cost_splitting,cost_oracle,"
       "u0_error_vs_oracle";
  if (with_time) h += ",wall_time_ms";
  return h;
}

inline std::string csv_row(const ExperimentRecord& r, bool with_time) {
  std::ostringstream os;
  os << r.sample_id << ',' << r.seed << ',' << r.N0;
  for (Eigen::Index i = 0; i < r.x_init.size(); ++i) os << ',' << format_double(r.x_init(i));
  os << ',' << r.status << ',' << r.N_final << ',' << r.N_backtracked << ',' << r.N_oracle << ',' << r.outer_rounds
     << ',' << r.iterations_total << ',' << format_double(r.cost_splitting) << ','
     << detail::csv_optional(r.cost_oracle) << ',' << detail::csv_optional(r.u0_error_vs_oracle);
  if (with_time) os << ',' << detail::csv_optional(r.wall_time_ms);
  return os.str();
}

inline void write_csv(std::ostream& os, const std::vector<ExperimentRecord>& rows, Eigen::Index n,
                      bool with_time = false) {
  os << csv_header(n, with_time) << '\n';
  for (const ExperimentRecord& r : rows) os << csv_row(r, with_time) << '\n';
}

inline std::vector<ExperimentRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::kIo, "read_csv: empty input");
  const std::vector<std::string> header = detail::split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  Eigen::Index n = 0;
  while (col.count("x0_" + std::to_string(n))) ++n;
  for (const char* key : {"sample_id", "seed", "N0", "status", "N_final", "N_backtracked", "N_oracle", "outer_rounds",
                          "iterations_total", "cost_splitting", "cost_oracle", "u0_error_vs_oracle"})
    if (!col.count(key)) throw Error(ErrorCode::kIo, std::string("read_csv: missing column ") + key);
  const bool with_time = col.count("wall_time_ms") > 0;

  std::vector<ExperimentRecord> rows;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = detail::split_csv(line);
    if (cells.size() != header.size())
      throw Error(ErrorCode::kIo, "read_csv: line " + std::to_string(line_no) + " has the wrong number of cells");
    auto at = [&](const char* key) -> const std::string& { return cells[col.at(key)]; };
    try {
      ExperimentRecord r;
      r.sample_id = std::stoll(at("sample_id"));
      r.seed = std::stoull(at("seed"));
      r.N0 = std::stoi(at("N0"));
      r.x_init.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) r.x_init(i) = std::stod(cells[col.at("x0_" + std::to_string(i))]);
      r.status = at("status");
      r.N_final = std::stoi(at("N_final"));
      r.N_backtracked = std::stoi(at("N_backtracked"));
      r.N_oracle = std::stoi(at("N_oracle"));
      r.outer_rounds = std::stoi(at("outer_rounds"));
      r.iterations_total = std::stoll(at("iterations_total"));
      r.cost_splitting = std::stod(at("cost_splitting"));
      r.cost_oracle = detail::parse_optional(at("cost_oracle"));
      r.u0_error_vs_oracle = detail::parse_optional(at("u0_error_vs_oracle"));
      if (with_time) r.wall_time_ms = detail::parse_optional(at("wall_time_ms"));
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kIo, "read_csv: malformed value on line " + std::to_string(line_no));
    }
  }
  return rows;
}

/// Splitting solve plus oracle comparison for one initial state.
inline ExperimentRecord run_experiment(const ProblemInstance& base, const StageMatrices& s, const Vector& x_init,
                                       int N0, const std::optional<ClqrSolution>& oracle) {
  ProblemInstance inst = base;
  inst.x_init = x_init;
  inst.config.N0 = N0;
  ExperimentRecord rec;
  rec.N0 = N0;
  rec.x_init = x_init;
  const auto t0 = std::chrono::steady_clock::now();
  const SolveResult res = solve(inst, s);
  rec.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  rec.status = std::string(to_string(res.status));
  rec.N_final = res.N;
  rec.N_backtracked = res.N_backtracked;
  rec.outer_rounds = res.outer_rounds;
  rec.iterations_total = res.iterations_total;
  rec.cost_splitting = res.cost;
  if (oracle) {
    rec.N_oracle = oracle->N_infty;
    rec.cost_oracle = oracle->cost;
    const Vector u0_ref = oracle->N_infty > 0 ? Vector(oracle->u.col(0)) : Vector(inst.weights.K * x_init);
    rec.u0_error_vs_oracle = (res.u0 - u0_ref).cwiseAbs().maxCoeff();
  }
  return rec;
}

struct BatchOptions {
  std::size_t samples{1};
  std::uint64_t seed{0};
  std::vector<int> N0_list{20};
  unsigned threads{0};  // 0: hardware concurrency
  std::size_t max_draws{0};  // 0: 1000 × samples
};

struct BatchResult {
  std::vector<ExperimentRecord> rows;  // sample-major, N0 in list order
  std::size_t draws{0};
  std::size_t rejected_infeasible{0};
};

namespace detail {

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Draws initial states uniformly from the sampling box, keeps the first
/// `samples` that are CLQR-feasible and runs every N0 on each. Output order and
/// content depend only on (config, options), never on the thread count.
inline BatchResult run_batch(const InstanceConfig& cfg, const BatchOptions& opt) {
  require(opt.samples >= 1, ErrorCode::kInvalidArgument, "run_batch: samples must be at least 1");
  require(!opt.N0_list.empty(), ErrorCode::kInvalidArgument, "run_batch: empty N0 list");
  for (int N0 : opt.N0_list) require(N0 >= 0, ErrorCode::kInvalidArgument, "run_batch: negative N0");
  const ProblemInstance base = cfg.instance();
  const StageMatrices s = make_stage_matrices(base);
  const std::size_t max_draws = opt.max_draws ? opt.max_draws : 1000 * opt.samples;

  BatchResult out;
  std::vector<Vector> accepted;
  std::vector<std::optional<ClqrSolution>> oracles;
  // Candidates come from one seeded stream; feasibility is checked in parallel
  // chunks and accepted strictly in draw order.
  BoxSampler sampler(cfg.sampling_box(), opt.seed);
  while (accepted.size() < opt.samples && out.draws < max_draws) {
    const std::size_t chunk =
        std::min(max_draws - out.draws, std::max<std::size_t>(64, 4 * (opt.samples - accepted.size())));
    std::vector<Vector> candidates;
    for (std::size_t i = 0; i < chunk; ++i) candidates.push_back(sampler.next());
    std::vector<std::optional<ClqrSolution>> verdict(chunk);
    std::vector<char> feasible(chunk, 0);
    detail::parallel_for(chunk, opt.threads, [&](std::size_t i) {
      try {
        verdict[i] = scokaert_clqr(candidates[i], 0, base);
        feasible[i] = 1;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kInfeasible) return;
        if (e.code() == ErrorCode::kHorizonCapReached || e.code() == ErrorCode::kNoConvergence) {
          feasible[i] = 1;  // kept, compared without an oracle
          return;
        }
        throw;
      }
    });
    for (std::size_t i = 0; i < chunk && accepted.size() < opt.samples; ++i) {
      ++out.draws;
      if (!feasible[i]) {
        ++out.rejected_infeasible;
        continue;
      }
      accepted.push_back(candidates[i]);
      oracles.push_back(std::move(verdict[i]));
    }
  }
  require(accepted.size() == opt.samples, ErrorCode::kInfeasible,
          "run_batch: only " + std::to_string(accepted.size()) + " feasible initial states in " +
              std::to_string(out.draws) + " draws");

  const std::size_t per = opt.N0_list.size();
  out.rows.resize(accepted.size() * per);
  detail::parallel_for(out.rows.size(), opt.threads, [&](std::size_t j) {
    const std::size_t i = j / per;
    ExperimentRecord rec = run_experiment(base, s, accepted[i], opt.N0_list[j % per], oracles[i]);
    rec.sample_id = static_cast<std::int64_t>(i);
    rec.seed = opt.seed;
    out.rows[j] = std::move(rec);
  });
  return out;
}

struct N0Summary {
  int N0{0};
  std::size_t runs{0}, converged{0}, inside{0}, iteration_cap{0}, horizon_cap{0};
  double mean_N_final{std::numeric_limits<double>::quiet_NaN()};
  double mean_N_backtracked{std::numeric_limits<double>::quiet_NaN()};
  double mean_iterations{std::numeric_limits<double>::quiet_NaN()};
};

/// Per-N0 counts; means over Converged rows only.
inline std::vector<N0Summary> summarize(const std::vector<ExperimentRecord>& rows) {
  std::map<int, N0Summary> by;
  std::map<int, std::array<double, 3>> sums;
  for (const ExperimentRecord& r : rows) {
    N0Summary& s = by[r.N0];
    s.N0 = r.N0;
    ++s.runs;
    if (r.status == "Converged") {
      ++s.converged;
      auto& acc = sums[r.N0];
      acc[0] += r.N_final;
      acc[1] += r.N_backtracked;
      acc[2] += static_cast<double>(r.iterations_total);
    } else if (r.status == "InsideTerminalSet") {
      ++s.inside;
    } else if (r.status == "IterationCapReached") {
      ++s.iteration_cap;
    } else if (r.status == "HorizonCapReached") {
      ++s.horizon_cap;
    }
  }
  std::vector<N0Summary> out;
  for (auto& [N0, s] : by) {
    if (s.converged > 0) {
      const double c = static_cast<double>(s.converged);
      s.mean_N_final = sums[N0][0] / c;
      s.mean_N_backtracked = sums[N0][1] / c;
      s.mean_iterations = sums[N0][2] / c;
    }
    out.push_back(s);
  }
  return out;
}

inline nlohmann::json summary_json(const BatchResult& batch, const BatchOptions& opt) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json j;
  j["seed"] = opt.seed;
  j["samples"] = opt.samples;
  j["draws"] = batch.draws;
  j["rejected_infeasible"] = batch.rejected_infeasible;
  j["per_N0"] = nlohmann::json::array();
  for (const N0Summary& s : summarize(batch.rows)) {
    j["per_N0"].push_back({{"N0", s.N0},
                           {"runs", s.runs},
                           {"converged", s.converged},
                           {"inside_terminal_set", s.inside},
                           {"iteration_cap", s.iteration_cap},
                           {"horizon_cap", s.horizon_cap},
                           {"mean_N_final", num(s.mean_N_final)},
                           {"mean_N_backtracked", num(s.mean_N_backtracked)},
                           {"mean_iterations", num(s.mean_iterations)}});
  }
  return j;
}

struct Histogram {
  std::vector<std::pair<double, std::size_t>> bins;  // (center, count), ascending
  std::optional<double> mean;
};

/// Histogram of N_final, N_backtracked or iterations_total over Converged rows,
/// optionally restricted to one N0. Bin centers are multiples of `bin_width`.
inline Histogram histogram(const std::vector<ExperimentRecord>& rows, const std::string& column, double bin_width,
                           std::optional<int> N0 = std::nullopt) {
  require(bin_width > 0.0, ErrorCode::kInvalidArgument, "histogram: bin width must be positive");
  double (*get)(const ExperimentRecord&) = nullptr;
  if (column == "N_final") get = [](const ExperimentRecord& r) { return static_cast<double>(r.N_final); };
  else if (column == "N_backtracked") get = [](const ExperimentRecord& r) { return static_cast<double>(r.N_backtracked); };
  else if (column == "iterations_total") get = [](const ExperimentRecord& r) { return static_cast<double>(r.iterations_total); };
  else throw Error(ErrorCode::kInvalidArgument, "histogram: unknown column '" + column + "'");

  std::map<std::int64_t, std::size_t> counts;
  double sum = 0.0;
  std::size_t used = 0;
  for (const ExperimentRecord& r : rows) {
    if (excluded_from_statistics(r.status) || (N0 && r.N0 != *N0)) continue;
    const double v = get(r);
    ++counts[std::llround(v / bin_width)];
    sum += v;
    ++used;
  }
  Histogram h;
  for (const auto& [k, c] : counts) h.bins.emplace_back(static_cast<double>(k) * bin_width, c);
  if (used > 0) h.mean = sum / static_cast<double>(used);
  return h;
}

inline void write_histogram(std::ostream& os, const Histogram& h) {
  os << "# mean=" << (h.mean ? format_double(*h.mean) : std::string("NA")) << '\n';
  os << "bin_center,count\n";
  for (const auto& [center, count] : h.bins) os << format_double(center) << ',' << count << '\n';
}

/// Reference optimum for one initial state: the oracle solution at N∞, its
/// multipliers in splitting form, and a long fixed-horizon splitting run used
/// to confirm both. Throws NumericalFailure when the two disagree beyond
/// `tol` in the stacked multiplier or primal vector.
struct ReferenceSolution {
  int N{0};
  FhSolution fh;
  StageMultipliers mu_star;  // from the oracle
  Vector y_star;             // [y_0 … y_N] from the oracle
  StageMultipliers mu_split;
  Vector y_split;
  double mu_gap{0.0};
  double y_gap{0.0};
};

inline ReferenceSolution reference_solution(const ProblemInstance& inst, std::int64_t iterations = 1000000,
                                            double tol = 1e-6) {
  ReferenceSolution ref;
  const ClqrSolution clqr = scokaert_clqr(inst.x_init, 0, inst);
  require(clqr.N_infty >= 1, ErrorCode::kInvalidArgument, "reference_solution: x_init lies in the terminal set");
  ref.N = clqr.N_infty;
  ref.fh = clqr.fh;
  const SplitDual dual = split_dual_from_qp(ref.fh, inst);
  ref.mu_star = {dual.lambda, dual.w, dual.v};
  ref.y_star = stacked_primal_reference(ref.fh);

  const StageMatrices s = make_stage_matrices(inst);
  InnerState st = make_inner_state(ref.N, inst.x_init, s);
  std::int64_t left = iterations;
  while (left > 0) {
    const int chunk = static_cast<int>(std::min<std::int64_t>(left, 1 << 20));
    run_inner(st, inst.x_init, chunk, s);
    left -= chunk;
  }
  ref.mu_split = st.mu;
  ref.y_split = stacked_primal(st.stages);
  ref.mu_gap = (ref.mu_split.stacked() - ref.mu_star.stacked()).cwiseAbs().maxCoeff();
  ref.y_gap = (ref.y_split - ref.y_star).cwiseAbs().maxCoeff();
  if (ref.mu_gap > tol || ref.y_gap > tol)
    throw Error(ErrorCode::kNumericalFailure, "reference_solution: splitting and oracle disagree (multipliers " +
                                                  format_double(ref.mu_gap) + ", primal " +
                                                  format_double(ref.y_gap) + ")");
  return ref;
}

}  // namespace clqr

#endif  // CLQR_EXPERIMENT_HPP_
