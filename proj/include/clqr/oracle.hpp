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

#ifndef CLQR_ORACLE_HPP_
#define CLQR_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "clqr/common.hpp"
#include "clqr/lp.hpp"
#include "clqr/model.hpp"
#include "clqr/polytope.hpp"

// Reference solvers used to check the splitting method. Nothing here calls
// into stage.hpp, fama.hpp or horizon.hpp.

namespace clqr {

/// Fixed-horizon problem in the input variables only:
///   min ½uᵀHu + hᵀu + c  s.t.  F u ≤ g,
/// with x = Φ x_init + Γ u stacking x_0..x_N.
struct CondensedQp {
  int N{0};
  Eigen::Index n{0}, m{0}, p{0};
  Matrix Phi;    // n(N+1) × n
  Matrix Gamma;  // n(N+1) × mN
  Matrix H;      // mN × mN
  Vector h;
  double c{0.0};
  Matrix F;  // p(N+1) × mN, block row t is stage t
  Vector g;

  /// x_0..x_N as columns.
  [[nodiscard]] Matrix states(const ConstVectorRef& x_init, const ConstVectorRef& u) const {
    const Vector xs = Phi * x_init + Gamma * u;
    return Eigen::Map<const Matrix>(xs.data(), n, N + 1);
  }

  [[nodiscard]] double objective(const ConstVectorRef& u) const { return 0.5 * u.dot(H * u) + h.dot(u) + c; }
};

inline CondensedQp condense(int N, const ConstVectorRef& x_init, const LtiSystem& sys, const CostWeights& w) {
  require(N >= 0, ErrorCode::kInvalidArgument, "condense: negative horizon");
  require(x_init.size() == sys.n(), ErrorCode::kDimensionMismatch, "condense: x_init dimension");
  CondensedQp qp;
  const Eigen::Index n = sys.n(), m = sys.m(), p = sys.p();
  qp.N = N;
  qp.n = n;
  qp.m = m;
  qp.p = p;
  qp.Phi.resize(n * (N + 1), n);
  qp.Gamma = Matrix::Zero(n * (N + 1), m * N);
  qp.Phi.topRows(n).setIdentity();
  for (int t = 1; t <= N; ++t) {
    qp.Phi.middleRows(n * t, n) = sys.A * qp.Phi.middleRows(n * (t - 1), n);
    qp.Gamma.block(n * t, 0, n, m * (t - 1)) = sys.A * qp.Gamma.block(n * (t - 1), 0, n, m * (t - 1));
    qp.Gamma.block(n * t, m * (t - 1), n, m) = sys.B;
  }

  Matrix Qbar = Matrix::Zero(n * (N + 1), n * (N + 1));
  for (int t = 0; t < N; ++t) Qbar.block(n * t, n * t, n, n) = w.Q;
  Qbar.block(n * N, n * N, n, n) = w.P;
  Matrix Rbar = Matrix::Zero(m * N, m * N);
  for (int t = 0; t < N; ++t) Rbar.block(m * t, m * t, m, m) = w.R;

  const Vector free = qp.Phi * x_init;
  qp.H = qp.Gamma.transpose() * Qbar * qp.Gamma + Rbar;
  qp.H = 0.5 * (qp.H + qp.H.transpose()).eval();
  qp.h = qp.Gamma.transpose() * (Qbar * free);
  qp.c = 0.5 * free.dot(Qbar * free);

  qp.F = Matrix::Zero(p * (N + 1), m * N);
  qp.g.resize(p * (N + 1));
  for (int t = 0; t <= N; ++t) {
    qp.F.middleRows(p * t, p) = sys.C * qp.Gamma.middleRows(n * t, n);
    if (t < N) qp.F.block(p * t, m * t, p, m) += sys.D;
    qp.g.segment(p * t, p) = sys.d - sys.C * free.segment(n * t, n);
  }
  return qp;
}

struct KktResidual {
  double stationarity{0.0};
  double primal{0.0};
  double dual{0.0};
  double complementarity{0.0};
  [[nodiscard]] double max() const { return std::max({stationarity, primal, dual, complementarity}); }
};

inline KktResidual kkt_residual(const CondensedQp& qp, const ConstVectorRef& u, const ConstVectorRef& nu) {
  KktResidual r;
  if (qp.H.size() > 0) r.stationarity = (qp.H * u + qp.h + qp.F.transpose() * nu).cwiseAbs().maxCoeff();
  const Vector slack = qp.F * u - qp.g;
  r.primal = std::max(0.0, slack.maxCoeff());
  r.dual = std::max(0.0, -nu.minCoeff());
  r.complementarity = (nu.array() * slack.array()).abs().maxCoeff();
  return r;
}

struct FhSolution {
  int N{0};
  Matrix u;       // m × N
  Matrix x;       // n × (N+1)
  Matrix nu;      // p × (N+1), multipliers of C x_t + D u_t ≤ d
  double cost{0.0};
  KktResidual kkt;
  std::int64_t iterations{0};
};

struct FhQpOptions {
  double kkt_tol{1e-9};
  std::int64_t max_iter{200000};
  int polish_every{25};
};

namespace detail {

// Primal-dual active-set refinement started from a dual estimate. Returns true
// and overwrites `nu` when it reaches a point that passes the KKT test.
inline bool active_set_polish(const CondensedQp& qp, const Matrix& M, const Vector& Fu_free, Vector& nu,
                              double tol, double c_scale) {
  const Eigen::Index r = nu.size();
  std::vector<char> active(r), previous(r, 2);
  Vector slack = Fu_free - M * nu - qp.g;
  for (Eigen::Index i = 0; i < r; ++i) active[i] = nu(i) + c_scale * slack(i) > 0.0;
  for (int round = 0; round < 50; ++round) {
    if (active == previous) break;
    previous = active;
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < r; ++i)
      if (active[i]) idx.push_back(i);
    Vector cand = Vector::Zero(r);
    if (!idx.empty()) {
      const auto k = static_cast<Eigen::Index>(idx.size());
      Matrix Maa(k, k);
      Vector rhs(k);
      for (Eigen::Index a = 0; a < k; ++a) {
        rhs(a) = Fu_free(idx[a]) - qp.g(idx[a]);
        for (Eigen::Index b = 0; b < k; ++b) Maa(a, b) = M(idx[a], idx[b]);
      }
      const Vector sol = Maa.completeOrthogonalDecomposition().solve(rhs);
      for (Eigen::Index a = 0; a < k; ++a) cand(idx[a]) = sol(a);
    }
    slack = Fu_free - M * cand - qp.g;
    const double scale = 1.0 + cand.cwiseAbs().maxCoeff();
    if (cand.minCoeff() >= -tol * scale && slack.maxCoeff() <= tol * scale) {
      nu = cand.cwiseMax(0.0);
      return true;
    }
    for (Eigen::Index i = 0; i < r; ++i) active[i] = cand(i) + c_scale * slack(i) > 0.0;
  }
  return false;
}

}  // namespace detail

/// Fixed-horizon problem without terminal constraint, solved by accelerated
/// projected gradient on the dual of the condensed form with periodic
/// active-set refinement. Throws Infeasible when no input sequence satisfies
/// the constraints and NoConvergence when the KKT tolerance is not met.
inline FhSolution solve_fh_qp(int N, const ConstVectorRef& x_init, const ProblemInstance& inst,
                              const FhQpOptions& opt = {}) {
  const LtiSystem& sys = inst.system;
  const CostWeights& w = inst.weights;
  const CondensedQp qp = condense(N, x_init, sys, w);
  FhSolution out;
  out.N = N;
  const Eigen::Index nu_dim = qp.F.rows();
  Vector u = Vector::Zero(qp.m * N);
  Vector nu = Vector::Zero(nu_dim);

  // Rows that do not depend on u are checks on x_init alone.
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < nu_dim; ++i) {
    if (qp.F.cols() == 0 || qp.F.row(i).cwiseAbs().maxCoeff() == 0.0) {
      if (qp.g(i) < -1e-12) throw Error(ErrorCode::kInfeasible, "solve_fh_qp: x_init violates a state constraint");
    } else {
      rows.push_back(i);
    }
  }

  if (N > 0 && !rows.empty()) {
    const auto r = static_cast<Eigen::Index>(rows.size());
    CondensedQp sub = qp;
    sub.F.resize(r, qp.F.cols());
    sub.g.resize(r);
    for (Eigen::Index i = 0; i < r; ++i) {
      sub.F.row(i) = qp.F.row(rows[i]);
      sub.g(i) = qp.g(rows[i]);
    }
    if (lp_maximize(Vector::Zero(sub.F.cols()), sub.F, sub.g).status == LpStatus::kInfeasible)
      throw Error(ErrorCode::kInfeasible, "solve_fh_qp: no input sequence satisfies the constraints");

    const Eigen::LLT<Matrix> llt(sub.H);
    require(llt.info() == Eigen::Success, ErrorCode::kNumericalFailure, "solve_fh_qp: Hessian not positive definite");
    const Vector u_free = -llt.solve(sub.h);
    const Matrix HiFt = llt.solve(sub.F.transpose());
    Matrix M = sub.F * HiFt;
    M = 0.5 * (M + M.transpose()).eval();
    const Vector Fu_free = sub.F * u_free;
    const double lip = Eigen::SelfAdjointEigenSolver<Matrix>(M, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double step = 1.0 / lip;
    const double tol_scale = 1.0 + std::max(sub.h.cwiseAbs().maxCoeff(), sub.g.cwiseAbs().maxCoeff());
    const double tol = opt.kkt_tol * tol_scale;

    Vector lam = Vector::Zero(r), lam_prev = lam, lam_hat = lam;
    double t_k = 1.0;
    auto dual_value = [&](const Vector& l) {
      const Vector q = sub.h + sub.F.transpose() * l;
      return -0.5 * q.dot(llt.solve(q)) - sub.g.dot(l);
    };
    double d_prev = dual_value(lam);
    bool done = false;
    std::int64_t k = 0;
    for (; k < opt.max_iter && !done; ++k) {
      const Vector grad = Fu_free - M * lam_hat - sub.g;
      lam_prev = lam;
      lam = (lam_hat + step * grad).cwiseMax(0.0);
      const double d_now = dual_value(lam);
      if (d_now < d_prev) {
        // Adaptive restart.
        t_k = 1.0;
        lam_hat = lam;
      } else {
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_k * t_k));
        lam_hat = lam + ((t_k - 1.0) / t_next) * (lam - lam_prev);
        t_k = t_next;
      }
      d_prev = d_now;
      if ((k + 1) % opt.polish_every == 0) {
        Vector trial = lam;
        if (detail::active_set_polish(sub, M, Fu_free, trial, 1e-12, step)) {
          const Vector u_trial = u_free - HiFt * trial;
          if (kkt_residual(sub, u_trial, trial).max() <= tol) {
            lam = trial;
            done = true;
          }
        }
      }
    }
    u = u_free - HiFt * lam;
    out.kkt = kkt_residual(sub, u, lam);
    out.iterations = k;
    if (out.kkt.max() > tol)
      throw Error(ErrorCode::kNoConvergence, "solve_fh_qp: KKT residual " + std::to_string(out.kkt.max()) +
                                                 " above tolerance after " + std::to_string(k) + " iterations");
    for (Eigen::Index i = 0; i < r; ++i) nu(rows[i]) = lam(i);
  } else if (N > 0) {
    u = -Eigen::LLT<Matrix>(qp.H).solve(qp.h);
  }

  out.u = Eigen::Map<const Matrix>(u.data(), qp.m, N);
  out.x = qp.states(x_init, u);
  out.nu = Eigen::Map<const Matrix>(nu.data(), qp.p, N + 1);
  out.cost = total_cost(out.u, x_init, N, w, sys);
  if (N == 0 || rows.empty()) out.kkt = kkt_residual(qp, u, nu);
  return out;
}

struct ClqrSolution {
  int N_infty{0};
  Matrix u;  // m × N_infty
  Matrix x;  // n × (N_infty+1)
  double cost{0.0};
  FhSolution fh;
};

/// Grows the horizon from N0 until the optimal fixed-horizon trajectory ends in
/// X_f. Infeasible from solve_fh_qp means x_init is not CLQR-feasible.
inline ClqrSolution scokaert_clqr(const ConstVectorRef& x_init, int N0, const ProblemInstance& inst) {
  require(N0 >= 0, ErrorCode::kInvalidArgument, "scokaert_clqr: negative N0");
  ClqrSolution out;
  const Polyhedron& Xf = inst.terminal_set;
  if (contains(Xf, x_init)) {
    out.N_infty = 0;
    out.u.resize(inst.system.m(), 0);
    out.x = x_init;
    out.cost = total_cost(out.u, x_init, 0, inst.weights, inst.system);
    out.fh = solve_fh_qp(0, x_init, inst);
    return out;
  }
  for (int N = N0;; ++N) {
    if (N > inst.config.N_max)
      throw Error(ErrorCode::kHorizonCapReached, "scokaert_clqr: horizon cap reached");
    FhSolution fh = solve_fh_qp(N, x_init, inst);
    if (contains(Xf, fh.x.col(N))) {
      out.N_infty = N;
      out.u = fh.u;
      out.x = fh.x;
      out.cost = fh.cost;
      out.fh = std::move(fh);
      return out;
    }
  }
}

/// True when x_init admits a constraint-feasible infinite-horizon input sequence.
inline bool clqr_feasible(const ConstVectorRef& x_init, const ProblemInstance& inst) {
  try {
    scokaert_clqr(x_init, 0, inst);
    return true;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInfeasible) return false;
    throw;
  }
}

/// Multipliers of the time-split problem recovered from a fixed-horizon
/// solution: λ_t = −ν_t, the costate recursion for w and v = −w. Returned as
/// (λ p×(N+1), w n×(N+1), v n×(N+1)) with column 0 of w and v zero.
struct SplitDual {
  Matrix lambda, w, v;
};

inline SplitDual split_dual_from_qp(const FhSolution& fh, const ProblemInstance& inst) {
  const LtiSystem& s = inst.system;
  const CostWeights& wt = inst.weights;
  const int N = fh.N;
  SplitDual out;
  out.lambda = -fh.nu;
  out.w = Matrix::Zero(s.n(), N + 1);
  out.v = Matrix::Zero(s.n(), N + 1);
  if (N == 0) return out;
  out.w.col(N) = wt.P * fh.x.col(N) - s.C.transpose() * out.lambda.col(N);
  for (int t = N - 1; t >= 1; --t)
    out.w.col(t) = wt.Q * fh.x.col(t) - s.C.transpose() * out.lambda.col(t) + s.A.transpose() * out.w.col(t + 1);
  out.v = -out.w;
  return out;
}

/// Stacked [y_0 … y_N], y_t = (x_t, u_t) with u_N = 0.
inline Vector stacked_primal_reference(const FhSolution& fh) {
  const Eigen::Index n = fh.x.rows(), m = fh.u.rows();
  Vector y = Vector::Zero((n + m) * (fh.N + 1));
  for (int t = 0; t <= fh.N; ++t) {
    y.segment((n + m) * t, n) = fh.x.col(t);
    if (t < fh.N) y.segment((n + m) * t + n, m) = fh.u.col(t);
  }
  return y;
}

struct TheoremMetrics {
  Matrix B_tilde;  // (m+n)N × mN; block row t maps δu to (δu_t, δx_t)
  Matrix H_y;      // blockdiag(H1 × N, H2 × N, −G × (N+1))
  double eig_max_Hy{0.0};
  double sigma_f{0.0};
};

/// eig_max(H_y) is read as the largest eigenvalue of the constraint operator
/// acting on the stacked primal y, i.e. of Σ (stage blocks)ᵀ(stage blocks).
inline TheoremMetrics theorem_metrics(int N, const ProblemInstance& inst) {
  require(N >= 0, ErrorCode::kInvalidArgument, "theorem_metrics: negative horizon");
  const LtiSystem& s = inst.system;
  const Eigen::Index n = s.n(), m = s.m(), p = s.p(), ny = n + m;
  TheoremMetrics out;
  out.sigma_f = inst.weights.sigma_f;

  out.B_tilde = Matrix::Zero(ny * N, m * N);
  for (int t = 0; t < N; ++t) {
    out.B_tilde.block(ny * t, m * t, m, m).setIdentity();
    Matrix Apow = Matrix::Identity(n, n);
    for (int j = t - 1; j >= 0; --j) {
      out.B_tilde.block(ny * t + m, m * j, n, m) = Apow * s.B;
      Apow = s.A * Apow;
    }
  }

  const Eigen::Index rows = 2 * n * N + p * (N + 1);
  out.H_y = Matrix::Zero(rows, ny * (N + 1));
  Matrix H1 = Matrix::Zero(n, ny), H2(n, ny);
  H1.leftCols(n).setIdentity();
  H2 << s.A, s.B;
  const Matrix G = s.G();
  for (int t = 1; t <= N; ++t) {
    out.H_y.block(n * (t - 1), ny * t, n, ny) = H1;
    out.H_y.block(n * N + n * (t - 1), ny * (t - 1), n, ny) = H2;
  }
  for (int t = 0; t <= N; ++t) out.H_y.block(2 * n * N + p * t, ny * t, p, ny) = -G;
  // Stage 0 fixes x_0 and stage N fixes u_N, so those columns are not free.
  std::vector<Eigen::Index> cols;
  for (int t = 0; t <= N; ++t)
    for (Eigen::Index j = 0; j < ny; ++j) {
      const bool fixed = (t == 0 && j < n) || (t == N && j >= n);
      if (!fixed) cols.push_back(ny * t + j);
    }
  Matrix Hfree(rows, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) Hfree.col(static_cast<Eigen::Index>(j)) = out.H_y.col(cols[j]);
  out.eig_max_Hy = cols.empty() ? 0.0 : eig_max_gram(Hfree);
  return out;
}

/// (u_a − u_b)ᵀ B̃ᵀB̃ (u_a − u_b) on the first N∞ inputs; both arguments are
/// m × N∞.
inline double control_error_metric(const ConstMatrixRef& u_a, const ConstMatrixRef& u_b, const TheoremMetrics& tm) {
  require(u_a.rows() == u_b.rows() && u_a.cols() == u_b.cols(), ErrorCode::kDimensionMismatch,
          "control_error_metric: length mismatch");
  require(u_a.size() == tm.B_tilde.cols(), ErrorCode::kDimensionMismatch,
          "control_error_metric: metric built for a different horizon");
  const Matrix diff = u_a - u_b;
  const Vector du = Eigen::Map<const Vector>(diff.data(), diff.size());
  return (tm.B_tilde * du).squaredNorm();
}

/// 2·eig_max(H_y)·‖μ⁰−μ*‖² / (σ_f (k+1)²) scaled by `factor` (2 for the dual
/// gap, 4 for the primal error).
inline double rate_bound(double factor, const TheoremMetrics& tm, double mu_dist_sq, std::int64_t k) {
  const double kk = static_cast<double>(k) + 1.0;
  return factor * tm.eig_max_Hy * mu_dist_sq / (tm.sigma_f * kk * kk);
}

struct TraceEntry {
  std::int64_t k{0};
  double dual_value{0.0};
  double primal_error_sq{0.0};
};

struct BoundRow {
  std::int64_t k{0};
  double dual_gap{0.0}, dual_bound{0.0};
  double primal_error{0.0}, primal_bound{0.0};
  bool violated{false};
};

struct BoundReport {
  std::vector<BoundRow> rows;
  int violations{0};
  double worst_dual_ratio{0.0};
  double worst_primal_ratio{0.0};
};

/// Checks D* − D(μ^k) and ‖y^k − y*‖² against their rate bounds with a
/// relative slack.
inline BoundReport bound_check(const std::vector<TraceEntry>& trace, double dual_star, double mu_dist_sq,
                               const TheoremMetrics& tm, double rel_slack = 1e-8) {
  BoundReport rep;
  rep.rows.reserve(trace.size());
  for (const TraceEntry& e : trace) {
    BoundRow row;
    row.k = e.k;
    row.dual_gap = dual_star - e.dual_value;
    row.dual_bound = rate_bound(2.0, tm, mu_dist_sq, e.k);
    row.primal_error = e.primal_error_sq;
    row.primal_bound = rate_bound(4.0, tm, mu_dist_sq, e.k);
    const double dual_slack = rel_slack * (std::abs(dual_star) + row.dual_bound) + 1e-12;
    const double primal_slack = rel_slack * row.primal_bound + 1e-12;
    row.violated = !(row.dual_gap <= row.dual_bound + dual_slack) || !(row.primal_error <= row.primal_bound + primal_slack);
    if (row.violated) ++rep.violations;
    if (row.dual_bound > 0.0) rep.worst_dual_ratio = std::max(rep.worst_dual_ratio, row.dual_gap / row.dual_bound);
    if (row.primal_bound > 0.0)
      rep.worst_primal_ratio = std::max(rep.worst_primal_ratio, row.primal_error / row.primal_bound);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace clqr

#endif  // CLQR_ORACLE_HPP_
