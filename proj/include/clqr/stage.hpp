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

#ifndef CLQR_STAGE_HPP_
#define CLQR_STAGE_HPP_

/**
 * @file
 * @brief Per-time-step kernels of the time-split MPC problem.
 *
 * Each stage t owns y_t = (x_t, u_t), a slack σ_t ≥ 0 for G y_t + σ_t = d and,
 * for t ≥ 1, a consensus copy z_t of the state with z_t = H1 y_t = H2 y_{t−1}.
 * The dual variables are λ_t (stage constraint), w_t (z_t = H1 y_t) and
 * v_t (z_t = H2 y_{t−1}); the Lagrangian is
 *
 *   ½ Σ y_tᵀ Q̄_t y_t + Σ ⟨λ_t, d − G y_t − σ_t⟩ + Σ ⟨w_t, z_t − H1 y_t⟩ + ⟨v_t, z_t − H2 y_{t−1}⟩.
 *
 * With this sign convention the dual domain is λ_t ≤ 0 and w_t + v_t = 0.
 * All kernels depend on n, m, p only, never on the horizon length.
 */

#include <cmath>

#include "clqr/common.hpp"
#include "clqr/model.hpp"

namespace clqr {

struct StageMatrices {
  Eigen::Index n{0}, m{0}, p{0};
  Matrix A, B, C, D;
  Vector d;
  Matrix H1, H2, G;
  Matrix Qbar;        // blockdiag(Q, R)
  Matrix P;           // terminal weight
  Eigen::LLT<Matrix> Qbar_llt, R_llt, P_llt;
  Matrix H_stack;     // [H1; H2; G]
  double eig_max_H{0.0};
  double sigma_f{0.0};
  double tau{0.0};
  bool printed_signs{false};

  // Closed-form stage minimizers, assembled once from the Cholesky factors:
  //   inner: y = Q̄⁻¹(Gᵀλ + H1ᵀw + H2ᵀv)
  //   first: u = R⁻¹(Dᵀλ + Bᵀv)
  //   last:  x = P⁻¹(Cᵀλ + w)
  Matrix inner_lambda, inner_w, inner_v;
  Matrix first_lambda, first_v;
  Matrix last_lambda, last_w;
};

/// Builds the cached stage data. When `tau` is unset it defaults to
/// 0.99·σ_f/eig_max_H; an explicit value must satisfy τ < σ_f/eig_max_H.
inline StageMatrices make_stage_matrices(const LtiSystem& sys, const CostWeights& w,
                                         std::optional<double> tau = std::nullopt,
                                         bool printed_signs = false) {
  StageMatrices s;
  s.n = sys.n();
  s.m = sys.m();
  s.p = sys.p();
  s.A = sys.A;
  s.B = sys.B;
  s.C = sys.C;
  s.D = sys.D;
  s.d = sys.d;
  s.H_stack = stacked_constraint_matrix(sys);
  s.H1 = s.H_stack.topRows(s.n);
  s.H2 = s.H_stack.middleRows(s.n, s.n);
  s.G = s.H_stack.bottomRows(s.p);
  s.Qbar = block_diag(w.Q, w.R);
  s.P = w.P;
  s.Qbar_llt.compute(s.Qbar);
  s.R_llt.compute(w.R);
  s.P_llt.compute(w.P);
  require(s.Qbar_llt.info() == Eigen::Success && s.R_llt.info() == Eigen::Success &&
              s.P_llt.info() == Eigen::Success,
          ErrorCode::kInvalidArgument, "make_stage_matrices: Q, R and P must be positive definite");
  s.eig_max_H = eig_max_gram(s.H_stack);
  s.sigma_f = w.sigma_f > 0.0 ? w.sigma_f : strong_convexity_modulus(w.Q, w.R);
  const double bound = s.sigma_f / s.eig_max_H;
  if (tau) {
    require(*tau > 0.0 && *tau < bound, ErrorCode::kInvalidArgument,
            "step size tau=" + std::to_string(*tau) + " violates tau < sigma_f/eig_max(H) = " +
                std::to_string(bound));
    s.tau = *tau;
  } else {
    s.tau = 0.99 * bound;
  }
  s.printed_signs = printed_signs;

  s.inner_lambda = s.Qbar_llt.solve(s.G.transpose());
  s.inner_w = s.Qbar_llt.solve(s.H1.transpose());
  s.inner_v = s.Qbar_llt.solve(s.H2.transpose());
  s.first_lambda = s.R_llt.solve(s.D.transpose());
  s.first_v = s.R_llt.solve(s.B.transpose());
  s.last_lambda = s.P_llt.solve(s.C.transpose());
  s.last_w = s.P_llt.solve(Matrix::Identity(s.n, s.n));
  return s;
}

inline StageMatrices make_stage_matrices(const ProblemInstance& inst) {
  return make_stage_matrices(inst.system, inst.weights, inst.config.tau, inst.config.printed_signs);
}

/// FISTA momentum sequence α^{k+1} = (1 + √(4α² + 1))/2, starting at α⁰ = 1.
struct AccelState {
  double alpha_prev{1.0};
  double alpha{1.0};

  /// Advances α and returns the momentum coefficient (α^k − 1)/α^{k+1}.
  double step() {
    const double next = 0.5 * (1.0 + std::sqrt(4.0 * alpha * alpha + 1.0));
    const double coef = (alpha - 1.0) / next;
    alpha_prev = alpha;
    alpha = next;
    return coef;
  }
};

/// u₀ minimizing the stage-0 Lagrangian with x₀ fixed.
inline void solve_stage_first(const ConstVectorRef& lambda0_hat, const ConstVectorRef& v1_hat,
                              const StageMatrices& s, VectorRef u0) {
  u0.noalias() = s.first_lambda * lambda0_hat;
  u0.noalias() += s.first_v * v1_hat;
}

inline Vector solve_stage_first(const ConstVectorRef& lambda0_hat, const ConstVectorRef& v1_hat,
                                const StageMatrices& s) {
  Vector u0(s.m);
  solve_stage_first(lambda0_hat, v1_hat, s, u0);
  return u0;
}

/// y_t = Q̄⁻¹(Gᵀλ̂_t + H1ᵀŵ_t + H2ᵀv̂_{t+1}) for 1 ≤ t ≤ N−1.
inline void solve_stage_inner(const ConstVectorRef& lambda_hat, const ConstVectorRef& w_hat,
                              const ConstVectorRef& v_next_hat, const StageMatrices& s, VectorRef y) {
  y.noalias() = s.inner_lambda * lambda_hat;
  y.noalias() += s.inner_w * w_hat;
  y.noalias() += s.inner_v * v_next_hat;
}

inline Vector solve_stage_inner(const ConstVectorRef& lambda_hat, const ConstVectorRef& w_hat,
                                const ConstVectorRef& v_next_hat, const StageMatrices& s) {
  Vector y(s.n + s.m);
  solve_stage_inner(lambda_hat, w_hat, v_next_hat, s, y);
  return y;
}

/// Terminal stage: x_N = P⁻¹(Cᵀλ̂_N + ŵ_N); the stage input is pinned to 0.
inline void solve_stage_last(const ConstVectorRef& lambda_hat, const ConstVectorRef& w_hat,
                             const StageMatrices& s, VectorRef y) {
  y.head(s.n).noalias() = s.last_lambda * lambda_hat;
  y.head(s.n).noalias() += s.last_w * w_hat;
  y.tail(s.m).setZero();
}

inline Vector solve_stage_last(const ConstVectorRef& lambda_hat, const ConstVectorRef& w_hat,
                               const StageMatrices& s) {
  Vector y(s.n + s.m);
  solve_stage_last(lambda_hat, w_hat, s, y);
  return y;
}

/// σ = max(0, d − G y + λ̂/τ): the minimizer over σ ≥ 0 of
/// −λ̂ᵀσ + (τ/2)‖d − G y − σ‖².
inline void project_slack(const ConstVectorRef& y, const ConstVectorRef& lambda_hat, double tau,
                          const StageMatrices& s, VectorRef sigma) {
  sigma.noalias() = -(s.G * y);
  if (s.printed_signs) {
    sigma = (-sigma - s.d - lambda_hat / tau).cwiseMax(0.0);
  } else {
    sigma = (sigma + s.d + lambda_hat / tau).cwiseMax(0.0);
  }
}

inline Vector project_slack(const ConstVectorRef& y, const ConstVectorRef& lambda_hat, double tau,
                            const StageMatrices& s) {
  Vector sigma(s.p);
  project_slack(y, lambda_hat, tau, s, sigma);
  return sigma;
}

/// z_t = (H1 y_t + H2 y_{t−1})/2 − (ŵ_t + v̂_t)/(2τ).
inline void update_z(const ConstVectorRef& y_t, const ConstVectorRef& y_prev, const ConstVectorRef& w_hat,
                     const ConstVectorRef& v_hat, double tau, const StageMatrices& s, VectorRef z) {
  z.noalias() = s.A * y_prev.head(s.n);
  z.noalias() += s.B * y_prev.tail(s.m);
  z += y_t.head(s.n);
  z = 0.5 * z - (w_hat + v_hat) / (2.0 * tau);
}

inline Vector update_z(const ConstVectorRef& y_t, const ConstVectorRef& y_prev, const ConstVectorRef& w_hat,
                       const ConstVectorRef& v_hat, double tau, const StageMatrices& s) {
  Vector z(s.n);
  update_z(y_t, y_prev, w_hat, v_hat, tau, s, z);
  return z;
}

/// λ_t = λ̂_t + τ(d − G y_t − σ_t).
inline void update_lambda(const ConstVectorRef& lambda_hat, const ConstVectorRef& y, const ConstVectorRef& sigma,
                          double tau, const StageMatrices& s, VectorRef lambda) {
  lambda.noalias() = -(s.G * y);
  if (s.printed_signs) {
    // Row three of the typeset multiplier matrix: λ̂ + τ(G y + σ) + τ d.
    lambda = lambda_hat + tau * (-lambda + sigma + s.d);
  } else {
    lambda = lambda_hat + tau * (lambda + s.d - sigma);
  }
}

/// w_t = ŵ_t + τ(z_t − H1 y_t).
inline void update_w(const ConstVectorRef& w_hat, const ConstVectorRef& z, const ConstVectorRef& y_t, double tau,
                     const StageMatrices& s, VectorRef w) {
  w = w_hat + tau * (z - y_t.head(s.n));
}

/// v_t = v̂_t + τ(z_t − H2 y_{t−1}).
inline void update_v(const ConstVectorRef& v_hat, const ConstVectorRef& z, const ConstVectorRef& y_prev, double tau,
                     const StageMatrices& s, VectorRef v) {
  v.noalias() = -(s.A * y_prev.head(s.n));
  v.noalias() -= s.B * y_prev.tail(s.m);
  v = v_hat + tau * (z + v);
}

}  // namespace clqr

#endif  // CLQR_STAGE_HPP_
