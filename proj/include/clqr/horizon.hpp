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

#ifndef CLQR_HORIZON_HPP_
#define CLQR_HORIZON_HPP_

#include <cstdint>
#include <string_view>
#include <utility>

#include "clqr/fama.hpp"
#include "clqr/model.hpp"
#include "clqr/polytope.hpp"
#include "clqr/stage.hpp"

namespace clqr {

enum class SolveStatus { kConverged, kIterationCapReached, kInsideTerminalSet, kHorizonCapReached };

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged: return "Converged";
    case SolveStatus::kIterationCapReached: return "IterationCapReached";
    case SolveStatus::kInsideTerminalSet: return "InsideTerminalSet";
    case SolveStatus::kHorizonCapReached: return "HorizonCapReached";
  }
  return "Unknown";
}

struct SolveResult {
  SolveStatus status{SolveStatus::kIterationCapReached};
  int N{0};
  int N_backtracked{0};
  Matrix u_seq;  // m × N
  Matrix x_traj; // n × (N+1)
  Vector u0;     // first applied input (K x_init when N = 0)
  std::int64_t iterations_total{0};
  int outer_rounds{0};
  double cost{0.0};
  Residuals residuals;
};

namespace detail {

inline void resize_cols(Matrix& M, Eigen::Index cols) { M.conservativeResize(Eigen::NoChange, cols); }

inline void resize_state(InnerState& st, Eigen::Index cols) {
  for (Matrix* M : {&st.stages.y, &st.stages.z, &st.stages.sigma, &st.mu.lambda, &st.mu.w, &st.mu.v,
                    &st.mu_prev.lambda, &st.mu_prev.w, &st.mu_prev.v, &st.mu_hat.lambda, &st.mu_hat.w,
                    &st.mu_hat.v})
    resize_cols(*M, cols);
}

}  // namespace detail

/// Appends subproblem N+1. The new stage starts in consensus with the old tail
/// (z_{N+1} = H2 y_N), with w = v = 0 and λ copied from λ_N in every register,
/// so its first momentum term vanishes. The former terminal stage becomes an
/// inner stage whose input starts at 0.
inline void add_stage(InnerState& st, const StageMatrices& s) {
  const int N = st.N;
  detail::resize_state(st, N + 2);
  const int t = N + 1;
  st.stages.y.col(N).tail(s.m).setZero();
  const Vector z = s.H2 * st.stages.y.col(N);
  st.stages.z.col(t) = z;
  st.stages.y.col(t).head(s.n) = z;
  st.stages.y.col(t).tail(s.m).setZero();
  st.stages.sigma.col(t) = (s.d - s.G * st.stages.y.col(t)).cwiseMax(0.0);
  const Vector lambda = st.mu.lambda.col(N);
  for (StageMultipliers* reg : {&st.mu, &st.mu_prev, &st.mu_hat}) {
    reg->lambda.col(t) = lambda;
    reg->w.col(t).setZero();
    reg->v.col(t).setZero();
  }
  st.N = t;
}

/// Drops subproblem N with all of its variables; stage N−1 becomes terminal
/// (weight P, input frozen at 0). Retained multipliers are untouched.
inline void remove_stage(InnerState& st, const StageMatrices& s) {
  require(st.N >= 1, ErrorCode::kHorizonUnderflow, "remove_stage: horizon is already 0");
  detail::resize_state(st, st.N);
  --st.N;
  st.stages.y.col(st.N).tail(s.m).setZero();
}

struct LqrTail {
  Matrix u;  // m × L
  Matrix x;  // n × (L+1), x.col(0) = x_N
};

/// u_{N+j} = K x_{N+j}, x_{N+j+1} = (A+BK) x_{N+j}; throws TailInfeasible when a
/// tail pair violates C x + D u ≤ d by more than `tol`.
inline LqrTail lqr_tail(const ConstVectorRef& x_N, const ConstMatrixRef& K, const LtiSystem& sys, int L,
                        double tol = 1e-9) {
  require(L >= 0, ErrorCode::kInvalidArgument, "lqr_tail: negative length");
  LqrTail out;
  out.u.resize(sys.m(), L);
  out.x.resize(sys.n(), L + 1);
  out.x.col(0) = x_N;
  for (int j = 0; j < L; ++j) {
    out.u.col(j) = K * out.x.col(j);
    const Vector g = sys.C * out.x.col(j) + sys.D * out.u.col(j) - sys.d;
    require(g.maxCoeff() <= tol, ErrorCode::kTailInfeasible,
            "lqr_tail: constraint violated at tail step " + std::to_string(j));
    out.x.col(j + 1) = sys.A * out.x.col(j) + sys.B * out.u.col(j);
  }
  return out;
}

/// Tighter horizon estimate from a converged result: appends K x_N, then walks
/// back from the end while every constraint of the pair (x_t, u_t) has slack
/// above `active_tol`. Does not re-solve.
inline int backtrack(const SolveResult& result, const ProblemInstance& inst) {
  const LtiSystem& sys = inst.system;
  const int N = result.N;
  if (result.x_traj.cols() == 0) return 0;
  const double tol = inst.config.backtrack_active_tol;
  auto inactive = [&](const Vector& x, const Vector& u) {
    return ((sys.d - sys.C * x - sys.D * u).array() > tol).all();
  };
  int n_bt = N;
  while (n_bt >= 0) {
    const Vector x = result.x_traj.col(n_bt);
    const Vector u = n_bt == N ? Vector(inst.weights.K * x) : Vector(result.u_seq.col(n_bt));
    if (!inactive(x, u)) break;
    --n_bt;
  }
  return std::max(n_bt, 0);
}

/// Adaptive-horizon solve. Between rounds of `run_inner` the terminal stage is
/// checked against X_f: the solve stops once x_N ∈ X_f (stage copy and
/// simulated) and ‖μ^k − μ^{k−1}‖² ≤ eps_term; otherwise the tail subproblem is
/// removed when x_N ∈ X_f and a new one appended when it is not.
template <typename Observer = NoObserver>
inline SolveResult solve(const ProblemInstance& inst, const StageMatrices& s, Observer&& observe = {}) {
  const SolverConfig& cfg = inst.config;
  const Polyhedron& Xf = inst.terminal_set;
  const Vector& x0 = inst.x_init;
  SolveResult res;

  if (contains(Xf, x0)) {
    res.status = SolveStatus::kInsideTerminalSet;
    res.u_seq.resize(s.m, 0);
    res.x_traj = x0;
    res.u0 = inst.weights.K * x0;
    res.cost = total_cost(res.u_seq, x0, 0, inst.weights, inst.system);
    return res;
  }

  InnerState st = make_inner_state(cfg.N0, x0, s);
  int rounds = 0;
  for (;;) {
    const std::int64_t budget = cfg.k_max - st.iter_count;
    const int k_bar = static_cast<int>(std::min<std::int64_t>(rounds == 0 ? cfg.k_bar_first : cfg.k_bar, budget));
    res.residuals = run_inner(st, x0, k_bar, s, observe);
    ++rounds;

    const Vector x_stage = st.stages.y.col(st.N).head(s.n);
    const bool in_set = contains(Xf, x_stage);
    if (in_set && res.residuals.mu_change_sq <= cfg.eps_term) {
      const PrimalTrajectory sim = primal_extract(st, x0, s);
      if (contains(Xf, sim.x.col(st.N))) {
        res.status = SolveStatus::kConverged;
        break;
      }
    }
    if (st.iter_count >= cfg.k_max) {
      res.status = SolveStatus::kIterationCapReached;
      break;
    }
    if (in_set) {
      remove_stage(st, s);
    } else {
      if (st.N + 1 > cfg.N_max) {
        res.status = SolveStatus::kHorizonCapReached;
        break;
      }
      add_stage(st, s);
    }
  }

  const PrimalTrajectory sim = primal_extract(st, x0, s);
  res.N = st.N;
  res.u_seq = sim.u;
  res.x_traj = sim.x;
  res.u0 = st.N > 0 ? Vector(sim.u.col(0)) : Vector(inst.weights.K * x0);
  res.iterations_total = st.iter_count;
  res.outer_rounds = rounds;
  res.cost = total_cost(sim.u, x0, st.N, inst.weights, inst.system);
  res.N_backtracked = res.status == SolveStatus::kConverged ? backtrack(res, inst) : res.N;
  return res;
}

inline SolveResult solve(const ProblemInstance& inst) { return solve(inst, make_stage_matrices(inst)); }

}  // namespace clqr

#endif  // CLQR_HORIZON_HPP_
