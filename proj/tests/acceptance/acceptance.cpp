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

// Acceptance run for the planar benchmark. Prints one PASS/FAIL line per
// criterion (plus INFO lines) and exits nonzero when any criterion fails.
//
//   clqr_acceptance CONFIG [CLI_BINARY]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "clqr/clqr.hpp"
#include "kernel_oracle.hpp"

namespace {

using namespace clqr;
using Clock = std::chrono::steady_clock;

int g_failed = 0;

void verdict(int id, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++g_failed;
  std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << name << "): " << detail << std::endl;
}

void info(const std::string& text) { std::cout << "INFO  " << text << std::endl; }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1 and 2: optimality and horizon correctness on seeded feasible samples.

struct OptimalitySample {
  Vector x;
  ClqrSolution oracle;
  SolveResult result;
};

constexpr std::size_t kWantConverged = 100;
constexpr std::size_t kFeasibleBudget = 600;  // feasible samples outside X_f tried at most
constexpr std::uint64_t kOptimalitySeed = 2026;

std::vector<OptimalitySample> optimality_samples(const InstanceConfig& cfg, std::size_t& tried, std::size_t& draws,
                                                 std::map<std::string, int>& statuses) {
  ProblemInstance inst = cfg.instance();
  inst.config.eps_term = 1e-6;
  inst.config.k_max = 100000;
  const StageMatrices s = make_stage_matrices(inst);
  BoxSampler sampler(cfg.sampling_box(), kOptimalitySeed);
  std::vector<OptimalitySample> out;
  tried = draws = 0;
  while (out.size() < kWantConverged && tried < kFeasibleBudget) {
    const Vector x = sampler.next();
    ++draws;
    if (contains(inst.terminal_set, x)) continue;
    ClqrSolution oracle;
    try {
      oracle = scokaert_clqr(x, 0, inst);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kInfeasible) continue;
      throw;
    }
    ++tried;
    inst.x_init = x;
    SolveResult r = solve(inst, s);
    ++statuses[std::string(to_string(r.status))];
    if (r.status == SolveStatus::kConverged) out.push_back({x, std::move(oracle), std::move(r)});
  }
  return out;
}

void criteria_1_2(const InstanceConfig& cfg) {
  const auto t0 = Clock::now();
  std::size_t tried = 0, draws = 0;
  std::map<std::string, int> statuses;
  const std::vector<OptimalitySample> samples = optimality_samples(cfg, tried, draws, statuses);
  const double elapsed = seconds_since(t0);

  double worst_u0 = 0.0, worst_cost = 0.0;
  for (const OptimalitySample& smp : samples) {
    worst_u0 = std::max(worst_u0, (smp.result.u0 - smp.oracle.u.col(0)).cwiseAbs().maxCoeff());
    worst_cost = std::max(worst_cost, std::abs(smp.result.cost - smp.oracle.cost) / smp.oracle.cost);
  }
  std::ostringstream st;
  for (const auto& [k, v] : statuses) st << ' ' << k << '=' << v;
  info("optimality sampling: " + std::to_string(draws) + " draws, " + std::to_string(tried) +
       " feasible outside X_f solved at eps_term=1e-6;" + st.str());
  const bool accurate = worst_u0 <= 1e-3 && worst_cost <= 1e-3;
  const bool enough = samples.size() >= kWantConverged;
  const bool fast = elapsed < 300.0;
  verdict(1, "planar optimality", enough && accurate && fast,
          std::to_string(samples.size()) + "/" + std::to_string(kWantConverged) + " converged samples found in " +
              std::to_string(tried) + " feasible tries, max |u0 err| " + fmt("%.3g", worst_u0) +
              ", max rel cost err " + fmt("%.3g", worst_cost) + ", " + fmt("%.1f s", elapsed));

  // 2: horizon length, tail admissibility and insensitivity past N∞.
  ProblemInstance inst = cfg.instance();
  int bad_N = 0, bad_tail = 0, bad_insens = 0;
  double worst_insens = 0.0;
  for (const OptimalitySample& smp : samples) {
    const SolveResult& r = smp.result;
    if (r.N < smp.oracle.N_infty - 1) ++bad_N;
    const LtiSystem& sys = inst.system;
    bool ok = true;
    for (int t = 0; t < r.N; ++t)
      if ((sys.C * r.x_traj.col(t) + sys.D * r.u_seq.col(t) - sys.d).maxCoeff() > 1e-6) ok = false;
    try {
      (void)lqr_tail(r.x_traj.col(r.N), inst.weights.K, sys, 50, 1e-6);
    } catch (const Error&) {
      ok = false;
    }
    if (!ok) ++bad_tail;
    inst.x_init = smp.x;
    const FhSolution longer = solve_fh_qp(smp.oracle.N_infty + 10, smp.x, inst);
    const double d = (longer.u.col(0) - smp.oracle.u.col(0)).cwiseAbs().maxCoeff();
    worst_insens = std::max(worst_insens, d);
    if (d > 1e-6) ++bad_insens;
  }
  verdict(2, "horizon correctness", !samples.empty() && bad_N == 0 && bad_tail == 0 && bad_insens == 0,
          "on " + std::to_string(samples.size()) + " converged samples: N < N_inf-1 in " + std::to_string(bad_N) +
              ", tail/sequence violations " + std::to_string(bad_tail) + ", max |u0(N_inf) - u0(N_inf+10)| " +
              fmt("%.3g", worst_insens));
}

// ---------------------------------------------------------------------------
// 3: rate bounds along a fixed-horizon run.

struct RateRun {
  BoundReport report;
  double mu_dist_sq{0.0};
  double eig_max_Hy{0.0};
  std::int64_t iterations{0};
};

RateRun rate_run(const ProblemInstance& inst, int N, const StageMultipliers& mu_star, const Vector& y_star,
                 double dual_star, std::int64_t iterations) {
  const StageMatrices s = make_stage_matrices(inst);
  InnerState st = make_inner_state(N, inst.x_init, s);
  RateRun out;
  const TheoremMetrics tm = theorem_metrics(N, inst);
  out.eig_max_Hy = tm.eig_max_Hy;
  out.mu_dist_sq = (st.mu.stacked() - mu_star.stacked()).squaredNorm();
  std::vector<TraceEntry> trace;
  trace.reserve(static_cast<std::size_t>(iterations) + 1);
  auto log = [&](const InnerState& cur) {
    trace.push_back({cur.iter_count, dual_objective(cur.mu, inst.x_init, s),
                     (stacked_primal(cur.stages) - y_star).squaredNorm()});
  };
  run_inner(st, inst.x_init, static_cast<int>(iterations), s, log);
  out.iterations = st.iter_count;
  out.report = bound_check(trace, dual_star, out.mu_dist_sq, tm);
  return out;
}

void criterion_3(const InstanceConfig& cfg) {
  const auto t0 = Clock::now();
  const Vector x = (Vector(2) << 1.0, 1.0).finished();
  const ProblemInstance inst = cfg.instance(x);
  std::string reason;
  bool pass = false;
  try {
    const ClqrSolution o = scokaert_clqr(x, 0, inst);
    const SplitDual d = split_dual_from_qp(o.fh, inst);
    const StageMultipliers mu_star{d.lambda, d.w, d.v};
    const RateRun run = rate_run(inst, o.N_infty, mu_star, stacked_primal_reference(o.fh), o.cost, 20000);
    pass = run.report.violations == 0;
    reason = std::to_string(run.report.violations) + " violations over " + std::to_string(run.iterations) +
             " iterations";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInfeasible) throw;
    // No optimum exists; show the dual function growing without bound.
    const StageMatrices s = make_stage_matrices(inst);
    InnerState st = make_inner_state(inst.config.N0, x, s);
    std::string growth;
    for (int chunk = 0; chunk < 4; ++chunk) {
      run_inner(st, x, 5000, s);
      growth += (chunk ? ", " : "") + fmt("%.4g", dual_objective(st.mu, x, s));
    }
    reason = "x_init=(1,1) admits no feasible input sequence (oracle: Infeasible), so D* and mu* do not exist; "
             "D(mu^k) at k=5000..20000 (N=" + std::to_string(inst.config.N0) + "): " + growth;
  }
  verdict(3, "rate bounds at (1,1)", pass, reason + ", " + fmt("%.1f s", seconds_since(t0)));

  // Same check where an optimum exists.
  const auto t1 = Clock::now();
  const Vector xf = (Vector(2) << -5.0, 0.5).finished();
  const ProblemInstance feas = cfg.instance(xf);
  const ClqrSolution o = scokaert_clqr(xf, 0, feas);
  const SplitDual d = split_dual_from_qp(o.fh, feas);
  const RateRun run =
      rate_run(feas, o.N_infty, {d.lambda, d.w, d.v}, stacked_primal_reference(o.fh), o.cost, 20000);
  info("rate bounds at (-5,0.5), N=" + std::to_string(o.N_infty) + ": " + std::to_string(run.report.violations) +
       " violations over " + std::to_string(run.iterations) + " iterations, worst gap/bound " +
       fmt("%.3g", run.report.worst_dual_ratio) + ", worst primal/bound " + fmt("%.3g", run.report.worst_primal_ratio) +
       ", eig_max(H_y)=" + fmt("%.4g", run.eig_max_Hy) + ", |mu0-mu*|^2=" + fmt("%.4g", run.mu_dist_sq) + ", " +
       fmt("%.1f s", seconds_since(t1)));
}

// ---------------------------------------------------------------------------
// 4: terminal set certificate.

void criterion_4(const InstanceConfig& cfg) {
  const ProblemInstance inst = cfg.instance();
  const Polyhedron& Xf = inst.terminal_set;
  const Matrix Acl = inst.system.A + inst.system.B * inst.weights.K;
  const Matrix CK = inst.system.C + inst.system.D * inst.weights.K;
  // Bounding box of X_f from 2n LPs.
  const Eigen::Index n = Xf.dim();
  Vector lo(n), hi(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    hi(j) = lp_maximize(Vector(Vector::Unit(n, j)), Xf).optimum;
    lo(j) = -lp_maximize(Vector(-Vector::Unit(n, j)), Xf).optimum;
  }
  BoxSampler sampler(Polyhedron::box(lo, hi), 4);
  int inside = 0, not_invariant = 0, not_admissible = 0;
  while (inside < 10000) {
    const Vector x = sampler.next();
    if (!contains(Xf, x)) continue;
    ++inside;
    if (!contains(Xf, Acl * x, 1e-9)) ++not_invariant;
    if ((CK * x - inst.system.d).maxCoeff() > 0.0) ++not_admissible;
  }
  verdict(4, "terminal set certificate", not_invariant == 0 && not_admissible == 0,
          std::to_string(inside) + " samples in X_f (" + std::to_string(Xf.num_rows()) + " facets): " +
              std::to_string(not_invariant) + " invariance and " + std::to_string(not_admissible) +
              " admissibility failures");
}

// ---------------------------------------------------------------------------
// 5 and 6: batch statistics.

void criteria_5_6(const InstanceConfig& cfg) {
  const auto t0 = Clock::now();
  BatchOptions opt;
  opt.samples = 500;
  opt.seed = 1;
  opt.N0_list = {2, 8, 20};
  const BatchResult batch = run_batch(cfg, opt);
  const std::vector<N0Summary> summary = summarize(batch.rows);
  info("batch of " + std::to_string(opt.samples) + " feasible samples (" + std::to_string(batch.draws) + " draws) in " +
       fmt("%.1f s", seconds_since(t0)));

  int bt_violations = 0;
  for (const ExperimentRecord& r : batch.rows)
    if (r.N0 == 20 && r.N_backtracked > r.N_final) ++bt_violations;
  const N0Summary* s20 = nullptr;
  for (const N0Summary& s : summary)
    if (s.N0 == 20) s20 = &s;
  const bool means_ok = s20 && s20->converged > 0 && s20->mean_N_backtracked < s20->mean_N_final;
  verdict(5, "backtracking effect", bt_violations == 0 && means_ok,
          "N0=20: " + std::to_string(bt_violations) + " rows with N_backtracked > N_final, mean N_final " +
              (s20 ? fmt("%.3f", s20->mean_N_final) : "NA") + ", mean N_backtracked " +
              (s20 ? fmt("%.3f", s20->mean_N_backtracked) : "NA") + " over " +
              (s20 ? std::to_string(s20->converged) : "0") + " converged runs");

  bool monotone = true;
  std::string counts;
  for (std::size_t i = 0; i < summary.size(); ++i) {
    if (i > 0 && summary[i].converged < summary[i - 1].converged) monotone = false;
    counts += (i ? ", " : "") + std::string("N0=") + std::to_string(summary[i].N0) + ": " +
              std::to_string(summary[i].converged);
  }
  verdict(6, "warm-start effect", monotone && summary.size() == 3, "converged runs " + counts + " of 500 each");
}

// ---------------------------------------------------------------------------
// 7: kernels.

void criterion_7() {
  const testing::KernelCheck c = testing::check_kernels(10000, 7);
  const double worst = std::max({c.worst_inner, c.worst_first, c.worst_last, c.worst_slack, c.worst_z});
  verdict(7, "kernel oracle equivalence", c.cases == 10000 && worst <= 1e-6,
          std::to_string(c.cases) + " cases per kernel, max error inner " + fmt("%.2g", c.worst_inner) + ", first " +
              fmt("%.2g", c.worst_first) + ", last " + fmt("%.2g", c.worst_last) + ", slack " +
              fmt("%.2g", c.worst_slack) + ", z " + fmt("%.2g", c.worst_z));
}

// ---------------------------------------------------------------------------
// 8: determinism of the batch command.

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void criterion_8(const InstanceConfig& cfg, const std::string& config_path, const std::string& cli) {
  BatchOptions opt;
  opt.samples = 8;
  opt.seed = 5;
  opt.N0_list = {2, 20};
  std::vector<std::string> outputs;
  for (unsigned threads : {1u, 1u, 4u}) {
    opt.threads = threads;
    std::ostringstream os;
    write_csv(os, run_batch(cfg, opt).rows, cfg.system.n());
    outputs.push_back(os.str());
  }
  bool same = outputs[0] == outputs[1] && outputs[0] == outputs[2];
  std::string detail = "library: 3 runs (threads 1, 1, 4) " + std::string(same ? "identical" : "differ");
  if (!cli.empty()) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("clqr_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    std::vector<std::string> files;
    int run = 0;
    for (const char* threads : {"1", "1", "4"}) {
      const std::string out = (dir / ("batch" + std::to_string(run++) + ".csv")).string();
      const std::string cmd = "\"" + cli + "\" batch --config \"" + config_path +
                              "\" --samples 8 --seed 5 --n0 2,20 --threads " + threads + " --out \"" + out +
                              "\" > /dev/null";
      if (std::system(cmd.c_str()) != 0) {
        same = false;
        detail += "; CLI run failed";
        break;
      }
      files.push_back(slurp(out));
    }
    if (files.size() == 3) {
      const bool cli_same = files[0] == files[1] && files[0] == files[2] && !files[0].empty();
      same = same && cli_same && files[0] == outputs[0];
      detail += "; CLI: 3 runs " + std::string(cli_same ? "byte-identical" : "differ") +
                (files[0] == outputs[0] ? ", equal to library output" : ", differ from library output");
    }
    fs::remove_all(dir);
  }
  verdict(8, "determinism", same, detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: clqr_acceptance CONFIG [CLI_BINARY]\n";
    return 1;
  }
  const std::string config_path = argv[1];
  const std::string cli = argc > 2 ? argv[2] : "";
  const auto t0 = Clock::now();
  try {
    const InstanceConfig cfg = load_config(config_path);
    criteria_1_2(cfg);
    criterion_3(cfg);
    criterion_4(cfg);
    criteria_5_6(cfg);
    criterion_7();
    criterion_8(cfg, config_path, cli);
  } catch (const std::exception& e) {
    std::cout << "FAIL  aborted: " << e.what() << std::endl;
    return 1;
  }
  info("total " + fmt("%.1f s", seconds_since(t0)) + ", " + std::to_string(g_failed) + " criteria failed");
  return g_failed == 0 ? 0 : 1;
}
