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

#ifndef CLQR_RICCATI_HPP_
#define CLQR_RICCATI_HPP_

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>

#include "clqr/common.hpp"

namespace clqr {

struct DareSolution {
  Matrix P;  // terminal weight / cost-to-go
  Matrix K;  // u = K x
  std::int64_t iterations{0};
};

/// K = −(R + BᵀPB)⁻¹ BᵀPA.
inline Matrix lqr_gain(const ConstMatrixRef& A, const ConstMatrixRef& B, const ConstMatrixRef& R,
                       const ConstMatrixRef& P) {
  const Matrix BtP = B.transpose() * P;
  return -(R + BtP * B).ldlt().solve(BtP * A);
}

/// Right-hand side of the Riccati map Q + AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA.
inline Matrix riccati_map(const ConstMatrixRef& A, const ConstMatrixRef& B, const ConstMatrixRef& Q,
                          const ConstMatrixRef& R, const ConstMatrixRef& P) {
  const Matrix BtPA = B.transpose() * P * A;
  return Q + A.transpose() * P * A - BtPA.transpose() * (R + B.transpose() * P * B).ldlt().solve(BtPA);
}

inline double riccati_residual(const ConstMatrixRef& A, const ConstMatrixRef& B, const ConstMatrixRef& Q,
                               const ConstMatrixRef& R, const ConstMatrixRef& P) {
  return (P - riccati_map(A, B, Q, R, P)).cwiseAbs().maxCoeff();
}

inline double spectral_radius(const ConstMatrixRef& M) {
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Value iteration P ← Q + AᵀPA − AᵀPB(R+BᵀPB)⁻¹BᵀPA from P₀ = Q, until the
/// max-abs change drops below `tol`.
inline DareSolution solve_dare(const ConstMatrixRef& A, const ConstMatrixRef& B, const ConstMatrixRef& Q,
                               const ConstMatrixRef& R, double tol = 1e-12,
                               std::int64_t max_iter = 1'000'000) {
  const auto n = A.rows();
  require(A.cols() == n && B.rows() == n && Q.rows() == n && Q.cols() == n &&
              R.rows() == B.cols() && R.cols() == B.cols(),
          ErrorCode::kDimensionMismatch, "solve_dare: inconsistent A, B, Q, R");
  DareSolution out;
  Matrix P = Q;
  for (std::int64_t k = 1; k <= max_iter; ++k) {
    Matrix next = riccati_map(A, B, Q, R, P);
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) break;
    const double change = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (change <= tol) {
      out.P = P;
      out.K = lqr_gain(A, B, R, P);
      out.iterations = k;
      return out;
    }
  }
  throw Error(ErrorCode::kNoConvergence,
              "solve_dare: Riccati iteration did not converge (is (A,B) stabilizable?)");
}

/// Structure-preserving doubling: each step squares the horizon covered by the
/// Riccati recursion, so convergence is quadratic. Requires R invertible.
inline DareSolution solve_dare_doubling(const ConstMatrixRef& A, const ConstMatrixRef& B,
                                        const ConstMatrixRef& Q, const ConstMatrixRef& R,
                                        double tol = 1e-12, std::int64_t max_iter = 200) {
  const auto n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  Matrix Ak = A;
  Matrix Gk = B * R.ldlt().solve(B.transpose());
  Matrix Hk = Q;
  for (std::int64_t k = 1; k <= max_iter; ++k) {
    const Eigen::PartialPivLU<Matrix> W(I + Gk * Hk);
    const Matrix WinvA = W.solve(Ak);
    const Matrix WinvG = W.solve(Gk);
    Matrix H_next = Hk + Ak.transpose() * Hk * WinvA;
    Matrix G_next = Gk + Ak * WinvG * Ak.transpose();
    Ak = Ak * WinvA;
    H_next = 0.5 * (H_next + H_next.transpose());
    G_next = 0.5 * (G_next + G_next.transpose());
    if (!H_next.allFinite()) break;
    const double change = (H_next - Hk).cwiseAbs().maxCoeff();
    Hk = std::move(H_next);
    Gk = std::move(G_next);
    if (change <= tol * (1.0 + Hk.cwiseAbs().maxCoeff())) {
      return DareSolution{Hk, lqr_gain(A, B, R, Hk), k};
    }
  }
  throw Error(ErrorCode::kNoConvergence, "solve_dare_doubling: did not converge");
}

/// A + BK; throws Unstable unless the spectral radius is below 1 − 1e-12.
inline Matrix closed_loop(const ConstMatrixRef& A, const ConstMatrixRef& B, const ConstMatrixRef& K) {
  require(B.rows() == A.rows() && K.rows() == B.cols() && K.cols() == A.cols(),
          ErrorCode::kDimensionMismatch, "closed_loop: inconsistent A, B, K");
  Matrix Acl = A + B * K;
  const double rho = spectral_radius(Acl);
  require(rho < 1.0 - 1e-12, ErrorCode::kUnstable,
          "closed_loop: spectral radius " + std::to_string(rho) + " >= 1");
  return Acl;
}

}  // namespace clqr

#endif  // CLQR_RICCATI_HPP_
