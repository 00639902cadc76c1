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

#ifndef CLQR_COMMON_HPP_
#define CLQR_COMMON_HPP_

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace clqr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<Vector>;
using ConstVectorRef = Eigen::Ref<const Vector>;
using ConstMatrixRef = Eigen::Ref<const Matrix>;

enum class ErrorCode {
  kDimensionMismatch,
  kInvalidArgument,
  kNoConvergence,
  kUnstable,
  kEmptySet,
  kNotABox,
  kHorizonUnderflow,
  kHorizonCapReached,
  kTailInfeasible,
  kNumericalFailure,
  kInfeasible,
  kConfig,
  kIo,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kUnstable: return "Unstable";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kNotABox: return "NotABox";
    case ErrorCode::kHorizonUnderflow: return "HorizonUnderflow";
    case ErrorCode::kHorizonCapReached: return "HorizonCapReached";
    case ErrorCode::kTailInfeasible: return "TailInfeasible";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

/// Exception type thrown by every module; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

/// Largest eigenvalue of MᵀM, i.e. the squared spectral norm of M.
inline double eig_max_gram(const ConstMatrixRef& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(M.transpose() * M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

inline double eig_min_sym(const ConstMatrixRef& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline bool is_symmetric(const ConstMatrixRef& S, double tol = 1e-10) {
  return S.rows() == S.cols() && (S - S.transpose()).cwiseAbs().maxCoeff() <= tol * (1.0 + S.cwiseAbs().maxCoeff());
}

inline bool is_positive_definite(const ConstMatrixRef& S) {
  if (S.rows() == 0 || !is_symmetric(S)) return false;
  Eigen::LLT<Matrix> llt(S);
  return llt.info() == Eigen::Success;
}

inline Matrix block_diag(const ConstMatrixRef& a, const ConstMatrixRef& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace clqr

#endif  // CLQR_COMMON_HPP_
