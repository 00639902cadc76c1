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

#include <random>

#include "clqr/clqr.hpp"
#include "kernel_oracle.hpp"
#include "planar.hpp"

namespace clqr {
namespace {

using testing::planar_instance;
using testing::vec2;

bool has_failure(const ValidationReport& r, const std::string& needle) {
  for (const std::string& f : r.failures)
    if (f.find(needle) != std::string::npos) return true;
  return false;
}

TEST(Model, PlanarInstanceValidates) {
  const ProblemInstance inst = planar_instance(vec2(-5, 0.5));
  const ValidationReport r = validate(inst);
  EXPECT_TRUE(r.ok()) << (r.failures.empty() ? "" : r.failures.front());
  EXPECT_NEAR(step_size_bound(inst.system, inst.weights), 1.0 / 8.929, 1e-3);
  EXPECT_DOUBLE_EQ(inst.weights.sigma_f, 1.0);
}

TEST(Model, ValidationCollectsFailures) {
  ProblemInstance inst = planar_instance(vec2(0, 0));
  inst.system.d(0) = 0.0;
  inst.weights.Q(0, 0) = -1.0;
  inst.config.k_bar = 0;
  inst.config.tau = 0.5;
  const ValidationReport r = validate(inst);
  EXPECT_TRUE(has_failure(r, "d must be > 0"));
  EXPECT_TRUE(has_failure(r, "Q not positive definite"));
  EXPECT_TRUE(has_failure(r, "k_bar"));
  EXPECT_FALSE(r.ok());
}

TEST(Model, TauAboveBoundRejected) {
  SolverConfig cfg = testing::planar_config();
  cfg.tau = 0.2;
  const ProblemInstance inst = planar_instance(vec2(0, 0), cfg);
  EXPECT_TRUE(has_failure(validate(inst), "tau"));
  EXPECT_THROW(make_stage_matrices(inst), Error);
}

TEST(Model, InfeasibleFirstInputFlagged) {
  ProblemInstance inst = planar_instance(vec2(0, 0));
  // |u| ≤ 1 and u ≥ 2 cannot both hold.
  inst.system.C.conservativeResize(7, Eigen::NoChange);
  inst.system.C.row(6).setZero();
  inst.system.D.conservativeResize(7, Eigen::NoChange);
  inst.system.D(6, 0) = -1.0;
  inst.system.d.conservativeResize(7);
  inst.system.d(6) = -2.0;
  EXPECT_TRUE(has_failure(validate(inst), "no feasible first input"));
}

TEST(Model, TotalCostMatchesHandComputation) {
  const ProblemInstance inst = planar_instance(vec2(1, -1));
  Matrix u(1, 2);
  u << 0.5, -0.25;
  const Matrix x = simulate(inst.system, inst.x_init, u);
  double expected = 0.0;
  for (int t = 0; t < 2; ++t) expected += 0.5 * (x.col(t).squaredNorm() + u(0, t) * u(0, t));
  expected += 0.5 * x.col(2).dot(inst.weights.P * x.col(2));
  EXPECT_NEAR(total_cost(u, inst.x_init, 2, inst.weights, inst.system), expected, 1e-12);
  EXPECT_THROW(total_cost(u, inst.x_init, 3, inst.weights, inst.system), Error);
}

TEST(Stage, MatricesMatchTheInstance) {
  const ProblemInstance inst = planar_instance(vec2(0, 0));
  const StageMatrices s = make_stage_matrices(inst);
  EXPECT_DOUBLE_EQ(s.tau, 0.0726);
  EXPECT_NEAR(s.eig_max_H, 8.929, 1e-3);
  EXPECT_EQ(s.H_stack.rows(), 2 * 2 + 6);
  EXPECT_EQ(s.H1.leftCols(2), Matrix::Identity(2, 2));
  EXPECT_EQ(s.H2.leftCols(2), inst.system.A);
}

TEST(Stage, KernelsMatchBruteForce) {
  const testing::KernelCheck check = testing::check_kernels(10000, 2026);
  EXPECT_EQ(check.cases, 10000);
  EXPECT_LT(check.worst_inner, 1e-6);
  EXPECT_LT(check.worst_first, 1e-6);
  EXPECT_LT(check.worst_last, 1e-6);
  EXPECT_LT(check.worst_slack, 1e-6);
  EXPECT_LT(check.worst_z, 1e-6);
}

TEST(Stage, MultiplierUpdateStaysInDualCone) {
  // λ = λ̂ + τ(d − G y − σ) with σ from the projection is ≤ 0 for any λ̂ ≤ 0,
  // and the consensus update keeps w + v = 0 whenever ŵ + v̂ = 0.
  std::mt19937_64 rng(5);
  const StageMatrices s = make_stage_matrices(planar_instance(vec2(0, 0)));
  for (int trial = 0; trial < 2000; ++trial) {
    const Vector y = testing::random_vector(rng, 3, 5.0), y_prev = testing::random_vector(rng, 3, 5.0);
    const Vector lambda_hat = -testing::random_vector(rng, 6).cwiseAbs();
    const Vector sigma = project_slack(y, lambda_hat, s.tau, s);
    EXPECT_GE(sigma.minCoeff(), 0.0);
    Vector lambda(6);
    update_lambda(lambda_hat, y, sigma, s.tau, s, lambda);
    EXPECT_LE(lambda.maxCoeff(), 1e-12);

    const Vector w_hat = testing::random_vector(rng, 2);
    const Vector v_hat = -w_hat;
    const Vector z = update_z(y, y_prev, w_hat, v_hat, s.tau, s);
    Vector w(2), v(2);
    update_w(w_hat, z, y, s.tau, s, w);
    update_v(v_hat, z, y_prev, s.tau, s, v);
    EXPECT_LT((w + v).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Stage, AccelerationSequence) {
  AccelState a;
  EXPECT_DOUBLE_EQ(a.step(), 0.0);
  EXPECT_NEAR(a.alpha, 0.5 * (1.0 + std::sqrt(5.0)), 1e-15);
  const double alpha1 = a.alpha;
  const double coef = a.step();
  EXPECT_NEAR(coef, (alpha1 - 1.0) / a.alpha, 1e-15);
  for (int k = 0; k < 100; ++k) a.step();
  EXPECT_GT(a.alpha, 50.0);
}

}  // namespace
}  // namespace clqr
