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

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "clqr/clqr.hpp"
#include "planar.hpp"

#ifndef CLQR_FIXTURE_DIR
#error "CLQR_FIXTURE_DIR must point at tests/fixtures"
#endif
#ifndef CLQR_CONFIG_DIR
#error "CLQR_CONFIG_DIR must point at configs"
#endif

namespace clqr {
namespace {

using testing::vec2;

const std::string kFixtures = CLQR_FIXTURE_DIR;
const std::string kPlanar = std::string(CLQR_CONFIG_DIR) + "/planar.cfg";

std::string planar_text() {
  std::ifstream is(kPlanar);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void expect_config_error(const std::string& text, const std::string& needle) {
  try {
    (void)parse_config_string(text);
    FAIL() << "expected a config error mentioning " << needle;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(Config, PlanarFileParses) {
  const InstanceConfig cfg = load_config(kPlanar);
  const LtiSystem ref = testing::planar_system();
  EXPECT_EQ(cfg.system.A, ref.A);
  EXPECT_EQ(cfg.system.B, ref.B);
  EXPECT_EQ(cfg.system.C, ref.C);
  EXPECT_EQ(cfg.system.d, ref.d);
  EXPECT_EQ(*cfg.solver.tau, 0.0726);
  EXPECT_EQ(cfg.solver.k_bar_first, 1000);
  EXPECT_EQ(cfg.solver.k_max, 100000);
  EXPECT_EQ(cfg.x0, vec2(-5.0, 0.5));
  EXPECT_EQ(cfg.sample_upper, vec2(10, 10));
}

TEST(Config, SamplingBoxDefaultsToStateBox) {
  std::string text = planar_text();
  text.replace(text.find("sampling.lower"), std::string::npos, "");
  const InstanceConfig cfg = parse_config_string(text);
  EXPECT_TRUE(cfg.sample_lower.isApprox(vec2(-10, -10)));
  EXPECT_TRUE(cfg.sample_upper.isApprox(vec2(10, 10)));
}

TEST(Config, ErrorsNameKeyAndLine) {
  expect_config_error("system.A = [[1]]\n", "missing required key 'system.B'");
  expect_config_error(planar_text() + "solver.tua = 0.1\n", "key 'solver.tua': unknown key");
  expect_config_error(planar_text() + "solver.k_max = 1.5\n", "duplicate key");
  std::string bad = planar_text();
  bad.replace(bad.find("solver.k_bar = 1"), 16, "solver.k_bar = x");
  expect_config_error(bad, "key 'solver.k_bar': cannot parse");
  std::string ragged = planar_text();
  ragged.replace(ragged.find("[[1.1, 2.0], [0.0, 0.95]]"), 25, "[[1.1, 2.0], [0.0]]");
  expect_config_error(ragged, "config line 2, key 'system.A': ragged matrix rows");
  std::string dims = planar_text();
  dims.replace(dims.find("constraints.d = [10, 10, 10, 10, 1, 1]"), 38, "constraints.d = [10, 10]");
  expect_config_error(dims, "constraints.d");
}

TEST(Config, MissingFileIsIoError) {
  try {
    (void)load_config("/nonexistent/planar.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

ExperimentRecord sample_record() {
  ExperimentRecord r;
  r.sample_id = 3;
  r.seed = 42;
  r.N0 = 8;
  r.x_init = vec2(-4.123456789012345, 0.1);
  r.status = "Converged";
  r.N_final = 7;
  r.N_backtracked = 5;
  r.N_oracle = 6;
  r.outer_rounds = 12;
  r.iterations_total = 1011;
  r.cost_splitting = 1.0 / 3.0;
  r.cost_oracle = 0.333333333;
  r.u0_error_vs_oracle = 1e-7;
  return r;
}

TEST(Experiment, CsvRoundTripIsBitIdentical) {
  ExperimentRecord a = sample_record();
  ExperimentRecord b = sample_record();
  b.status = "IterationCapReached";
  b.cost_oracle.reset();
  b.u0_error_vs_oracle.reset();
  b.N_oracle = -1;
  for (bool timing : {false, true}) {
    if (timing) {
      a.wall_time_ms = 12.5;
      b.wall_time_ms = 0.25;
    }
    std::stringstream first;
    write_csv(first, {a, b}, 2, timing);
    std::stringstream in(first.str());
    const auto rows = read_csv(in);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], a);
    EXPECT_EQ(rows[1], b);
    std::stringstream second;
    write_csv(second, rows, 2, timing);
    EXPECT_EQ(first.str(), second.str());
  }
}

TEST(Experiment, CsvRejectsMalformedRows) {
  std::stringstream ss(csv_header(2, false) + "\n1,2,3\n");
  EXPECT_THROW(read_csv(ss), Error);
}

TEST(Experiment, HistogramEmptyGivesNa) {
  ExperimentRecord r = sample_record();
  r.status = "InsideTerminalSet";
  const Histogram h = histogram({r}, "N_final", 1.0);
  EXPECT_TRUE(h.bins.empty());
  EXPECT_FALSE(h.mean.has_value());
  std::ostringstream os;
  write_histogram(os, h);
  EXPECT_EQ(os.str(), "# mean=NA\nbin_center,count\n");
}

TEST(Experiment, HistogramSingleRow) {
  const Histogram h = histogram({sample_record()}, "N_final", 1.0);
  ASSERT_EQ(h.bins.size(), 1u);
  EXPECT_EQ(h.bins[0].first, 7.0);
  EXPECT_EQ(h.bins[0].second, 1u);
  EXPECT_EQ(*h.mean, 7.0);
  EXPECT_THROW(histogram({sample_record()}, "cost", 1.0), Error);
}

TEST(Experiment, HistogramFiltersStatusAndN0) {
  std::vector<ExperimentRecord> rows(4, sample_record());
  rows[1].status = "IterationCapReached";
  rows[2].N0 = 20;
  rows[2].N_final = 9;
  rows[3].N_final = 8;
  const Histogram all = histogram(rows, "N_final", 2.0);
  ASSERT_EQ(all.bins.size(), 2u);
  EXPECT_EQ(all.bins[0], std::make_pair(8.0, std::size_t{2}));  // 7 and 8 round to bin 8
  EXPECT_EQ(all.bins[1], std::make_pair(10.0, std::size_t{1}));
  const Histogram only8 = histogram(rows, "N_final", 1.0, 8);
  EXPECT_DOUBLE_EQ(*only8.mean, 7.5);
}

TEST(Experiment, OriginBatchGivesOneInsideRow) {
  std::string text = planar_text();
  text.replace(text.find("sampling.lower = [-10, -10]"), 27, "sampling.lower = [0, 0]");
  text.replace(text.find("sampling.upper = [10, 10]"), 25, "sampling.upper = [0, 0]");
  const InstanceConfig cfg = parse_config_string(text);
  BatchOptions opt;
  opt.samples = 1;
  opt.seed = 1;
  const BatchResult batch = run_batch(cfg, opt);
  ASSERT_EQ(batch.rows.size(), 1u);
  EXPECT_EQ(batch.rows[0].status, "InsideTerminalSet");
  EXPECT_EQ(batch.rows[0].N_final, 0);
}

TEST(Experiment, BatchIsDeterministicAcrossThreads) {
  InstanceConfig cfg = load_config(kPlanar);
  cfg.solver.k_max = 3000;
  BatchOptions opt;
  opt.samples = 6;
  opt.seed = 99;
  opt.N0_list = {2, 8};
  std::string csv[3];
  const unsigned threads[3] = {1, 1, 3};
  for (int i = 0; i < 3; ++i) {
    opt.threads = threads[i];
    std::ostringstream os;
    write_csv(os, run_batch(cfg, opt).rows, 2);
    csv[i] = os.str();
  }
  EXPECT_EQ(csv[0], csv[1]);
  EXPECT_EQ(csv[0], csv[2]);
  EXPECT_EQ(std::count(csv[0].begin(), csv[0].end(), '\n'), 13);
}

TEST(Experiment, BatchSamplesAreFeasible) {
  InstanceConfig cfg = load_config(kPlanar);
  cfg.solver.k_max = 2000;
  BatchOptions opt;
  opt.samples = 5;
  opt.seed = 7;
  const BatchResult batch = run_batch(cfg, opt);
  const ProblemInstance inst = cfg.instance();
  EXPECT_EQ(batch.draws, batch.rows.size() + batch.rejected_infeasible);
  for (const ExperimentRecord& r : batch.rows) {
    EXPECT_TRUE(clqr_feasible(r.x_init, inst));
    EXPECT_LE(r.N_backtracked, r.N_final);
  }
}

TEST(Fixtures, RecomputedValuesMatchStoredOnes) {
  const InstanceConfig cfg = load_config(kPlanar);
  const Vector x0 = load_matrix(kFixtures + "/x0.txt");
  const ProblemInstance inst = cfg.instance(x0);
  EXPECT_LT((inst.weights.P - load_matrix(kFixtures + "/P.txt")).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((inst.weights.K - load_matrix(kFixtures + "/K.txt")).cwiseAbs().maxCoeff(), 1e-9);
  std::ifstream xf(kFixtures + "/Xf.txt");
  const Polyhedron stored = read_polyhedron(xf);
  EXPECT_TRUE(is_subset(stored, inst.terminal_set, 1e-9));
  EXPECT_TRUE(is_subset(inst.terminal_set, stored, 1e-9));

  const Matrix meta = load_matrix(kFixtures + "/meta.txt");
  const ClqrSolution sol = scokaert_clqr(x0, 0, inst);
  EXPECT_EQ(sol.N_infty, static_cast<int>(meta(0, 0)));
  EXPECT_NEAR(sol.cost, meta(0, 1), 1e-9);
  EXPECT_LT((sol.u - load_matrix(kFixtures + "/u_star.txt")).cwiseAbs().maxCoeff(), 1e-8);
  const SplitDual d = split_dual_from_qp(sol.fh, inst);
  const StageMultipliers mu{d.lambda, d.w, d.v};
  EXPECT_LT((mu.stacked() - load_matrix(kFixtures + "/mu_star.txt")).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_LT((stacked_primal_reference(sol.fh) - load_matrix(kFixtures + "/y_star.txt")).cwiseAbs().maxCoeff(), 1e-8);
}

}  // namespace
}  // namespace clqr
