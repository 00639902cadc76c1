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

#ifndef CLQR_FAMA_HPP_
#define CLQR_FAMA_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>

#include "clqr/io.hpp"
#include "clqr/model.hpp"
#include "clqr/stage.hpp"

namespace clqr {

/// Primal stage variables; column t belongs to stage t = 0..N.
struct StageState {
  Matrix y;      // (n+m) × (N+1), y_t = (x_t, u_t)
  Matrix z;      // n × (N+1), column 0 unused
  Matrix sigma;  // p × (N+1), always ≥ 0
};

/// One register of the dual variables. Columns of w and v at index 0 are
/// unused and kept at zero.
struct StageMultipliers {
  Matrix lambda;  // p × (N+1)
  Matrix w;       // n × (N+1)
  Matrix v;       // n × (N+1)

  [[nodiscard]] Eigen::Index horizon() const { return lambda.cols() - 1; }

  /// ‖·‖² over all stages (unused columns are zero).
  [[nodiscard]] double squared_norm() const {
    return lambda.squaredNorm() + w.squaredNorm() + v.squaredNorm();
  }

  /// Stacked as [w_1..w_N, v_1..v_N, λ_0..λ_N].
  [[nodiscard]] Vector stacked() const {
    const Eigen::Index N = horizon(), n = w.rows(), p = lambda.rows();
    Vector out(2 * N * n + (N + 1) * p);
    Eigen::Index k = 0;
    for (Eigen::Index t = 1; t <= N; ++t, k += n) out.segment(k, n) = w.col(t);
    for (Eigen::Index t = 1; t <= N; ++t, k += n) out.segment(k, n) = v.col(t);
    for (Eigen::Index t = 0; t <= N; ++t, k += p) out.segment(k, p) = lambda.col(t);
    return out;
  }

  static StageMultipliers zeros(Eigen::Index N, Eigen::Index n, Eigen::Index p) {
    return {Matrix::Zero(p, N + 1), Matrix::Zero(n, N + 1), Matrix::Zero(n, N + 1)};
  }
};

struct InnerState {
  int N{0};
  StageState stages;
  StageMultipliers mu;       // current
  StageMultipliers mu_prev;  // previous iterate
  StageMultipliers mu_hat;   // extrapolated
  AccelState accel;
  std::int64_t iter_count{0};
};

struct Residuals {
  double mu_change_sq{0.0};
  double consensus_residual{0.0};
  double slack_residual{0.0};
};

/// Stacked primal vector [y_0, …, y_N].
inline Vector stacked_primal(const StageState& st) {
  return Eigen::Map<const Vector>(st.y.data(), st.y.size());
}

/// Horizon-N state at the zero multiplier with a consensus-feasible primal
/// (zero-input forward simulation of x_init).
inline InnerState make_inner_state(int N, const ConstVectorRef& x_init, const StageMatrices& s) {
  require(N >= 0, ErrorCode::kInvalidArgument, "make_inner_state: negative horizon");
  require(x_init.size() == s.n, ErrorCode::kDimensionMismatch, "make_inner_state: x_init dimension");
  InnerState st;
  st.N = N;
  st.stages.y = Matrix::Zero(s.n + s.m, N + 1);
  st.stages.z = Matrix::Zero(s.n, N + 1);
  st.stages.sigma = Matrix::Zero(s.p, N + 1);
  Vector x = x_init;
  for (int t = 0; t <= N; ++t) {
    st.stages.y.col(t).head(s.n) = x;
    if (t > 0) st.stages.z.col(t) = x;
    st.stages.sigma.col(t) = (s.d - s.C * x).cwiseMax(0.0);
    x = s.A * x;
  }
  st.mu = StageMultipliers::zeros(N, s.n, s.p);
  st.mu_prev = st.mu;
  st.mu_hat = st.mu;
  return st;
}

/// Momentum step: advances α and returns μ̂ = μ + ((α^k − 1)/α^{k+1})(μ − μ⁻).
inline StageMultipliers accelerate(AccelState& accel, const StageMultipliers& mu, const StageMultipliers& mu_prev) {
  const double coef = accel.step();
  return {mu.lambda + coef * (mu.lambda - mu_prev.lambda), mu.w + coef * (mu.w - mu_prev.w),
          mu.v + coef * (mu.v - mu_prev.v)};
}

namespace detail {

inline void check_consistent(const InnerState& st, const StageMatrices& s) {
  const Eigen::Index cols = st.N + 1;
  const bool ok = st.stages.y.cols() == cols && st.stages.y.rows() == s.n + s.m && st.stages.z.cols() == cols &&
                  st.stages.sigma.cols() == cols && st.mu.lambda.cols() == cols && st.mu.w.cols() == cols &&
                  st.mu.v.cols() == cols && st.mu_hat.lambda.cols() == cols && st.mu_prev.lambda.cols() == cols;
  require(ok, ErrorCode::kDimensionMismatch, "InnerState does not match its horizon");
}

}  // namespace detail

/// Step 1: all stage minimizations at the extrapolated multipliers μ̂.
inline void solve_stages(InnerState& st, const ConstVectorRef& x_init, const StageMatrices& s) {
  const int N = st.N;
  Matrix& y = st.stages.y;
  const StageMultipliers& h = st.mu_hat;
  y.col(0).head(s.n) = x_init;
  if (N == 0) {
    y.col(0).tail(s.m).setZero();
    return;
  }
  solve_stage_first(h.lambda.col(0), h.v.col(1), s, y.col(0).tail(s.m));
  for (int t = 1; t < N; ++t) solve_stage_inner(h.lambda.col(t), h.w.col(t), h.v.col(t + 1), s, y.col(t));
  solve_stage_last(h.lambda.col(N), h.w.col(N), s, y.col(N));
}

/// Steps 3–5: slack projection, consensus averaging and the multiplier update
/// from μ̂. On return `st.mu_prev` holds the old iterate.
inline void update_multipliers(InnerState& st, const StageMatrices& s) {
  const int N = st.N;
  const double tau = s.tau;
  std::swap(st.mu_prev, st.mu);
  StageState& ps = st.stages;
  const StageMultipliers& h = st.mu_hat;
  StageMultipliers& mu = st.mu;
  for (int t = 0; t <= N; ++t) {
    project_slack(ps.y.col(t), h.lambda.col(t), tau, s, ps.sigma.col(t));
    update_lambda(h.lambda.col(t), ps.y.col(t), ps.sigma.col(t), tau, s, mu.lambda.col(t));
  }
  for (int t = 1; t <= N; ++t) {
    update_z(ps.y.col(t), ps.y.col(t - 1), h.w.col(t), h.v.col(t), tau, s, ps.z.col(t));
    update_w(h.w.col(t), ps.z.col(t), ps.y.col(t), tau, s, mu.w.col(t));
    update_v(h.v.col(t), ps.z.col(t), ps.y.col(t - 1), tau, s, mu.v.col(t));
  }
}

inline Residuals compute_residuals(const InnerState& st, const StageMatrices& s) {
  Residuals r;
  r.mu_change_sq = (st.mu.lambda - st.mu_prev.lambda).squaredNorm() + (st.mu.w - st.mu_prev.w).squaredNorm() +
                   (st.mu.v - st.mu_prev.v).squaredNorm();
  const Matrix& y = st.stages.y;
  for (int t = 0; t <= st.N; ++t) {
    const Vector slack = s.d - s.G * y.col(t) - st.stages.sigma.col(t);
    r.slack_residual = std::max(r.slack_residual, slack.cwiseAbs().maxCoeff());
    if (t == 0) continue;
    const Vector c1 = st.stages.z.col(t) - y.col(t).head(s.n);
    const Vector c2 = st.stages.z.col(t) - s.H2 * y.col(t - 1);
    r.consensus_residual = std::max({r.consensus_residual, c1.cwiseAbs().maxCoeff(), c2.cwiseAbs().maxCoeff()});
  }
  return r;
}

/// Observer that ignores every iteration.
struct NoObserver {
  void operator()(const InnerState&) const {}
};

/// Runs exactly `k_bar` accelerated alternating-minimization iterations on a
/// fixed horizon and returns the residuals of the last one. `observe` is called
/// after every iteration with the updated state.
template <typename Observer = NoObserver>
inline Residuals run_inner(InnerState& st, const ConstVectorRef& x_init, int k_bar, const StageMatrices& s,
                           Observer&& observe = {}) {
  require(k_bar >= 1, ErrorCode::kInvalidArgument, "run_inner: k_bar must be at least 1");
  detail::check_consistent(st, s);
  for (int k = 0; k < k_bar; ++k) {
    solve_stages(st, x_init, s);
    const double coef = st.accel.step();
    update_multipliers(st, s);
    st.mu_hat.lambda = st.mu.lambda + coef * (st.mu.lambda - st.mu_prev.lambda);
    st.mu_hat.w = st.mu.w + coef * (st.mu.w - st.mu_prev.w);
    st.mu_hat.v = st.mu.v + coef * (st.mu.v - st.mu_prev.v);
    ++st.iter_count;
    if (!st.mu_hat.lambda.allFinite() || !st.mu_hat.w.allFinite() || !st.stages.y.allFinite())
      throw Error(ErrorCode::kNumericalFailure,
                  "run_inner: non-finite iterate at k=" + std::to_string(st.iter_count) + " (tau too large?)");
    observe(static_cast<const InnerState&>(st));
  }
  return compute_residuals(st, s);
}

/// Dual function D(μ) of the time-split problem. Returns −∞ when μ lies outside
/// the dual domain (some λ_t > 0 or w_t + v_t ≠ 0, up to a relative 1e-9).
inline double dual_objective(const StageMultipliers& mu, const ConstVectorRef& x_init, const StageMatrices& s) {
  const Eigen::Index N = mu.horizon();
  const double scale = 1.0 + std::max({mu.lambda.cwiseAbs().maxCoeff(), mu.w.cwiseAbs().maxCoeff(),
                                       mu.v.cwiseAbs().maxCoeff()});
  const double tol = 1e-9 * scale;
  if (mu.lambda.maxCoeff() > tol) return -std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 1; t <= N; ++t)
    if ((mu.w.col(t) + mu.v.col(t)).cwiseAbs().maxCoeff() > tol) return -std::numeric_limits<double>::infinity();

  double value = 0.0;
  for (Eigen::Index t = 0; t <= N; ++t) value += mu.lambda.col(t).dot(s.d);

  // Stage 0: x₀ = x_init fixed.
  if (N == 0) {
    value += 0.5 * x_init.dot(s.P * x_init) - mu.lambda.col(0).dot(s.C * x_init);
    return value;
  }
  {
    const Vector q = s.D.transpose() * mu.lambda.col(0) + s.B.transpose() * mu.v.col(1);
    const Vector u = s.R_llt.solve(q);
    value += 0.5 * x_init.dot(s.Qbar.topLeftCorner(s.n, s.n) * x_init) - 0.5 * q.dot(u) -
             mu.lambda.col(0).dot(s.C * x_init) - mu.v.col(1).dot(s.A * x_init);
  }
  for (Eigen::Index t = 1; t < N; ++t) {
    const Vector q = s.G.transpose() * mu.lambda.col(t) + s.H1.transpose() * mu.w.col(t) +
                     s.H2.transpose() * mu.v.col(t + 1);
    value -= 0.5 * q.dot(s.Qbar_llt.solve(q));
  }
  {
    const Vector q = s.C.transpose() * mu.lambda.col(N) + mu.w.col(N);
    value -= 0.5 * q.dot(s.P_llt.solve(q));
  }
  return value;
}

struct PrimalTrajectory {
  Matrix u;  // m × N
  Matrix x;  // n × (N+1), simulated from x_init
};

/// Stage inputs u_0..u_{N−1} and the trajectory they produce under the true
/// dynamics (not the consensus copies).
inline PrimalTrajectory primal_extract(const InnerState& st, const ConstVectorRef& x_init, const StageMatrices& s) {
  PrimalTrajectory out;
  out.u = st.stages.y.topRows(s.n + s.m).bottomRows(s.m).leftCols(st.N);
  out.x.resize(s.n, st.N + 1);
  out.x.col(0) = x_init;
  for (int t = 0; t < st.N; ++t) out.x.col(t + 1) = s.A * out.x.col(t) + s.B * out.u.col(t);
  return out;
}

/// Per-iteration CSV trace: k, mu_change_sq, consensus_residual,
/// slack_residual, D(μ).
class TraceWriter {
 public:
  TraceWriter(std::ostream& os, const StageMatrices& s, Vector x_init)
      : os_(os), s_(s), x_init_(std::move(x_init)) {
    os_ << "k,mu_change_sq,consensus_residual,slack_residual,dual_objective\n";
  }

  void operator()(const InnerState& st) {
    const Residuals r = compute_residuals(st, s_);
    os_ << st.iter_count << ',' << format_double(r.mu_change_sq) << ',' << format_double(r.consensus_residual) << ','
        << format_double(r.slack_residual) << ',' << format_double(dual_objective(st.mu, x_init_, s_)) << '\n';
  }

 private:
  std::ostream& os_;
  const StageMatrices& s_;
  Vector x_init_;
};

}  // namespace clqr

#endif  // CLQR_FAMA_HPP_
