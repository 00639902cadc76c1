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

#ifndef CLQR_MODEL_HPP_
#define CLQR_MODEL_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clqr/common.hpp"
#include "clqr/polytope.hpp"
#include "clqr/riccati.hpp"

namespace clqr {

/// x⁺ = A x + B u subject to C x + D u ≤ d.
struct LtiSystem {
  Matrix A, B, C, D;
  Vector d;

  [[nodiscard]] Eigen::Index n() const { return A.rows(); }
  [[nodiscard]] Eigen::Index m() const { return B.cols(); }
  [[nodiscard]] Eigen::Index p() const { return C.rows(); }

  /// Stage constraint matrix G = [C D].
  [[nodiscard]] Matrix G() const {
    Matrix out(p(), n() + m());
    out << C, D;
    return out;
  }
};

struct CostWeights {
  Matrix Q, R;
  Matrix P;  // terminal weight (DARE)
  Matrix K;  // unconstrained LQR gain
  double sigma_f{0.0};
};

struct SolverConfig {
  std::optional<double> tau;  // dual step; derived from the instance when unset
  int k_bar_first{1000};
  int k_bar{1};
  double eps_term{1e-3};
  double eps_tighten{1e-3};
  std::int64_t k_max{100000};
  int N0{20};
  int N_max{200};
  double dare_tol{1e-12};
  double backtrack_active_tol{1e-6};
  bool normalize_tightening{true};
  // Debug switch: use the slack projection / λ-update signs exactly as
  // typeset in the original algorithm listing instead of the Lagrangian ones.
  bool printed_signs{false};
  int mpi_max_iter{500};
};

struct ProblemInstance {
  LtiSystem system;
  CostWeights weights;
  Vector x_init;
  Polyhedron terminal_set;
  SolverConfig config;
};

struct ValidationReport {
  std::vector<std::string> failures;
  [[nodiscard]] bool ok() const { return failures.empty(); }
};

/// Vertical stack [H1; H2; G] with H1 = [I 0], H2 = [A B], G = [C D].
inline Matrix stacked_constraint_matrix(const LtiSystem& sys) {
  const auto n = sys.n(), m = sys.m(), p = sys.p();
  Matrix H(2 * n + p, n + m);
  H.setZero();
  H.topLeftCorner(n, n).setIdentity();
  H.block(n, 0, n, n) = sys.A;
  H.block(n, n, n, m) = sys.B;
  H.bottomRows(p) = sys.G();
  return H;
}

/// Largest admissible dual step σ_f / eig_max([H1; H2; G]).
inline double step_size_bound(const LtiSystem& sys, const CostWeights& w) {
  return w.sigma_f / eig_max_gram(stacked_constraint_matrix(sys));
}

inline double strong_convexity_modulus(const ConstMatrixRef& Q, const ConstMatrixRef& R) {
  return eig_min_sym(block_diag(Q, R));
}

/// ½(xᵀQx + uᵀRu).
inline double stage_cost(const ConstVectorRef& x, const ConstVectorRef& u, const CostWeights& w) {
  require(x.size() == w.Q.rows() && u.size() == w.R.rows(), ErrorCode::kDimensionMismatch,
          "stage_cost: dimension mismatch");
  return 0.5 * (x.dot(w.Q * x) + u.dot(w.R * u));
}

/// Forward simulation; column t of the result is x_t, t = 0..N.
inline Matrix simulate(const LtiSystem& sys, const ConstVectorRef& x_init, const ConstMatrixRef& u_seq) {
  require(x_init.size() == sys.n() && (u_seq.cols() == 0 || u_seq.rows() == sys.m()),
          ErrorCode::kDimensionMismatch, "simulate: dimension mismatch");
  Matrix x(sys.n(), u_seq.cols() + 1);
  x.col(0) = x_init;
  for (Eigen::Index t = 0; t < u_seq.cols(); ++t) x.col(t + 1) = sys.A * x.col(t) + sys.B * u_seq.col(t);
  return x;
}

/// Σ_{t<N} ½(x_tᵀQx_t + u_tᵀRu_t) + ½ x_NᵀPx_N along the simulated trajectory;
/// `u_seq` holds u_t in column t.
inline double total_cost(const ConstMatrixRef& u_seq, const ConstVectorRef& x_init, Eigen::Index N,
                         const CostWeights& w, const LtiSystem& sys) {
  require(u_seq.cols() == N, ErrorCode::kDimensionMismatch, "total_cost: u_seq must have N columns");
  const Matrix x = simulate(sys, x_init, u_seq);
  double cost = 0.0;
  for (Eigen::Index t = 0; t < N; ++t) cost += stage_cost(x.col(t), u_seq.col(t), w);
  cost += 0.5 * x.col(N).dot(w.P * x.col(N));
  return cost;
}

/// Solves the DARE for (P, K) and fills σ_f.
inline CostWeights make_weights(const LtiSystem& sys, const ConstMatrixRef& Q, const ConstMatrixRef& R,
                                double dare_tol = 1e-12) {
  CostWeights w;
  w.Q = Q;
  w.R = R;
  const DareSolution dare = solve_dare(sys.A, sys.B, Q, R, dare_tol);
  w.P = dare.P;
  w.K = dare.K;
  w.sigma_f = strong_convexity_modulus(Q, R);
  return w;
}

/// Maximal positively invariant set of x⁺ = (A+BK)x inside {x : (C + DK)x ≤ d},
/// tightened by `eps`. Shifting facets breaks invariance near the vertices, so
/// the tightened set is closed under the same iteration once more; the result
/// is the largest invariant subset of the tightened polytope.
inline Polyhedron make_terminal_set(const LtiSystem& sys, const CostWeights& w, double eps,
                                    bool normalize = true, int max_iter = 500) {
  const Matrix Acl = closed_loop(sys.A, sys.B, w.K);
  const Polyhedron base(sys.C + sys.D * w.K, sys.d);
  const Polyhedron tightened = tighten(max_positively_invariant(Acl, base, max_iter), eps, normalize);
  return eps > 0.0 ? max_positively_invariant(Acl, tightened, max_iter) : tightened;
}

inline ProblemInstance make_instance(const LtiSystem& sys, const ConstMatrixRef& Q, const ConstMatrixRef& R,
                                     const ConstVectorRef& x_init, const SolverConfig& config = {}) {
  ProblemInstance inst;
  inst.system = sys;
  inst.weights = make_weights(sys, Q, R, config.dare_tol);
  inst.x_init = x_init;
  inst.config = config;
  inst.terminal_set =
      make_terminal_set(sys, inst.weights, config.eps_tighten, config.normalize_tightening, config.mpi_max_iter);
  return inst;
}

/// Collects every violated modelling assumption; the instance is usable only
/// when the report is empty.
inline ValidationReport validate(const ProblemInstance& inst) {
  ValidationReport report;
  auto fail = [&](std::string msg) { report.failures.push_back(std::move(msg)); };
  const LtiSystem& s = inst.system;
  const CostWeights& w = inst.weights;
  const auto n = s.A.rows();
  const auto m = s.B.cols();
  const auto p = s.C.rows();

  if (s.A.cols() != n || s.B.rows() != n || s.C.cols() != n || s.D.rows() != p || s.D.cols() != m ||
      s.d.size() != p || p < 1 || n < 1 || m < 1) {
    fail("system dimensions inconsistent");
    return report;
  }
  if (!s.d.allFinite()) fail("d not finite");
  else if ((s.d.array() <= 0.0).any()) fail("origin not strictly feasible (d must be > 0)");

  const bool dims_w = w.Q.rows() == n && w.Q.cols() == n && w.R.rows() == m && w.R.cols() == m;
  if (!dims_w) {
    fail("cost weight dimensions inconsistent");
    return report;
  }
  const bool q_pd = is_positive_definite(w.Q);
  const bool r_pd = is_positive_definite(w.R);
  if (!q_pd) fail("Q not positive definite");
  if (!r_pd) fail("R not positive definite");
  if (w.P.rows() != n || w.P.cols() != n || !is_positive_definite(w.P)) fail("P not positive definite");
  if (w.K.rows() != m || w.K.cols() != n) fail("K has wrong dimensions");

  if (q_pd && r_pd) {
    const double sigma = strong_convexity_modulus(w.Q, w.R);
    if (!(w.sigma_f > 0.0) || std::abs(sigma - w.sigma_f) > 1e-9 * (1.0 + sigma))
      fail("sigma_f does not equal eig_min(blockdiag(Q, R))");
    try {
      const DareSolution dare = solve_dare(s.A, s.B, w.Q, w.R, inst.config.dare_tol);
      if (spectral_radius(s.A + s.B * dare.K) >= 1.0) fail("(A,B) not stabilizable: A+BK unstable");
    } catch (const Error&) {
      fail("(A,B) not stabilizable: Riccati iteration did not converge");
    }
  }

  const SolverConfig& c = inst.config;
  if (c.k_bar_first < 1 || c.k_bar < 1) fail("k_bar must be positive");
  if (!(c.eps_term > 0.0) || !(c.eps_tighten > 0.0) || !(c.dare_tol > 0.0) || !(c.backtrack_active_tol > 0.0))
    fail("tolerances must be positive");
  if (c.k_max < 1 || c.N_max < 1 || c.N0 < 0) fail("iteration/horizon limits out of range");
  if (c.tau) {
    if (!(*c.tau > 0.0)) fail("tau must be positive");
    else if (w.sigma_f > 0.0 && *c.tau >= step_size_bound(s, w))
      fail("tau violates tau < sigma_f / eig_max(H)");
  }

  if (inst.x_init.size() != n) {
    fail("x_init has wrong dimension");
  } else {
    // Stage-0 feasibility: ∃u with D u ≤ d − C x_init.
    const LpResult lp = lp_maximize(Vector::Zero(m), s.D, s.d - s.C * inst.x_init);
    if (lp.status == LpStatus::kInfeasible) fail("x_init admits no feasible first input");
  }

  if (inst.terminal_set.dim() != n) fail("terminal set has wrong dimension");
  else if (!contains(inst.terminal_set, Vector::Zero(n))) fail("terminal set does not contain the origin");
  return report;
}

}  // namespace clqr

#endif  // CLQR_MODEL_HPP_
