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

#ifndef CLQR_LP_HPP_
#define CLQR_LP_HPP_

#include <cmath>
#include <limits>
#include <vector>

#include "clqr/common.hpp"

namespace clqr {

enum class LpStatus { kOptimal, kUnbounded, kInfeasible };

struct LpResult {
  LpStatus status{LpStatus::kInfeasible};
  double optimum{-std::numeric_limits<double>::infinity()};
  Vector argmax;
};

namespace detail {

/// Dense two-phase tableau simplex with Bland's anti-cycling rule.
///
/// Solves   maximize cᵀx  s.t.  F x ≤ f,  x free,
/// via x = x⁺ − x⁻, one slack per row and one artificial per row with f_i < 0.
/// Column layout: [x⁺ (n) | x⁻ (n) | slack (q) | artificial (n_art) | rhs].
class Tableau {
 public:
  Tableau(const ConstVectorRef& c, const ConstMatrixRef& F, const ConstVectorRef& f)
      : n_(F.cols()), q_(F.rows()) {
    std::vector<Eigen::Index> art_rows;
    for (Eigen::Index i = 0; i < q_; ++i)
      if (f(i) < 0.0) art_rows.push_back(i);
    n_art_ = static_cast<Eigen::Index>(art_rows.size());
    cols_ = 2 * n_ + q_ + n_art_;
    T_ = Matrix::Zero(q_ + 1, cols_ + 1);
    basis_.assign(static_cast<std::size_t>(q_), 0);
    scale_ = 1.0;
    for (Eigen::Index i = 0; i < q_; ++i) scale_ = std::max(scale_, std::abs(f(i)));

    Eigen::Index a = 0;
    for (Eigen::Index i = 0; i < q_; ++i) {
      const double s = f(i) < 0.0 ? -1.0 : 1.0;
      T_.row(i).segment(0, n_) = s * F.row(i);
      T_.row(i).segment(n_, n_) = -s * F.row(i);
      T_(i, 2 * n_ + i) = s;
      T_(i, cols_) = s * f(i);
      if (s < 0.0) {
        const Eigen::Index col = 2 * n_ + q_ + a++;
        T_(i, col) = 1.0;
        basis_[static_cast<std::size_t>(i)] = col;
      } else {
        basis_[static_cast<std::size_t>(i)] = 2 * n_ + i;
      }
    }
    c_ = c;
  }

  LpResult solve() {
    LpResult out;
    if (n_art_ > 0) {
      // Phase 1: maximize −Σ artificials.
      T_.row(q_).setZero();
      T_.row(q_).segment(2 * n_ + q_, n_art_).setOnes();
      price_out();
      if (!iterate(cols_)) {
        out.status = LpStatus::kInfeasible;  // cannot happen: phase 1 is bounded
        return out;
      }
      if (T_(q_, cols_) < -feas_tol()) {
        out.status = LpStatus::kInfeasible;
        return out;
      }
      drive_out_artificials();
    }
    // Phase 2.
    T_.row(q_).setZero();
    T_.row(q_).segment(0, n_) = -c_.transpose();
    T_.row(q_).segment(n_, n_) = c_.transpose();
    price_out();
    if (!iterate(2 * n_ + q_)) {
      out.status = LpStatus::kUnbounded;
      out.optimum = std::numeric_limits<double>::infinity();
      return out;
    }
    out.status = LpStatus::kOptimal;
    out.argmax = Vector::Zero(n_);
    for (Eigen::Index i = 0; i < q_; ++i) {
      const Eigen::Index b = basis_[static_cast<std::size_t>(i)];
      if (b < n_) out.argmax(b) += T_(i, cols_);
      else if (b < 2 * n_) out.argmax(b - n_) -= T_(i, cols_);
    }
    out.optimum = c_.dot(out.argmax);
    return out;
  }

 private:
  [[nodiscard]] double feas_tol() const { return 1e-9 * scale_; }
  static constexpr double kPivotTol = 1e-11;

  void price_out() {
    for (Eigen::Index i = 0; i < q_; ++i) {
      const Eigen::Index b = basis_[static_cast<std::size_t>(i)];
      const double coef = T_(q_, b);
      if (coef != 0.0) T_.row(q_) -= coef * T_.row(i);
    }
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    T_.row(row) /= T_(row, col);
    for (Eigen::Index i = 0; i <= q_; ++i) {
      if (i == row) continue;
      const double coef = T_(i, col);
      if (coef != 0.0) T_.row(i) -= coef * T_.row(row);
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  // Returns false when the objective is unbounded. Only columns < `allowed`
  // may enter the basis.
  bool iterate(Eigen::Index allowed) {
    for (;;) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed; ++j) {
        if (T_(q_, j) < -1e-12) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < q_; ++i) {
        const double a = T_(i, enter);
        if (a <= kPivotTol) continue;
        const double ratio = T_(i, cols_) / a;
        const double tie = 1e-12 * (1.0 + std::abs(best));
        if (leave < 0 || ratio < best - tie) {
          best = ratio;
          leave = i;
        } else if (ratio <= best + tie &&
                   basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]) {
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

  void drive_out_artificials() {
    const Eigen::Index first_art = 2 * n_ + q_;
    for (Eigen::Index i = 0; i < q_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < first_art) continue;
      Eigen::Index col = -1;
      for (Eigen::Index j = 0; j < first_art; ++j) {
        if (std::abs(T_(i, j)) > 1e-9) {
          col = j;
          break;
        }
      }
      if (col >= 0) {
        pivot(i, col);
      } else {
        // Redundant equality row: neutralize it.
        T_.row(i).setZero();
        T_(i, basis_[static_cast<std::size_t>(i)]) = 1.0;
      }
    }
    T_.block(0, first_art, q_ + 1, n_art_).setZero();
    for (Eigen::Index i = 0; i < q_; ++i)
      if (basis_[static_cast<std::size_t>(i)] >= first_art)
        T_(i, basis_[static_cast<std::size_t>(i)]) = 1.0;
  }

  Eigen::Index n_, q_, n_art_{0}, cols_{0};
  Matrix T_;
  Vector c_;
  std::vector<Eigen::Index> basis_;
  double scale_;
};

}  // namespace detail

/// maximize cᵀx subject to F x ≤ f. Infeasible / Unbounded are reported in the
/// status, not thrown.
inline LpResult lp_maximize(const ConstVectorRef& c, const ConstMatrixRef& F, const ConstVectorRef& f) {
  require(c.size() == F.cols() && F.rows() == f.size(), ErrorCode::kDimensionMismatch,
          "lp_maximize: c, F, f sizes disagree");
  if (F.rows() == 0) {
    LpResult out;
    if (c.isZero(0.0)) {
      out.status = LpStatus::kOptimal;
      out.optimum = 0.0;
      out.argmax = Vector::Zero(c.size());
    } else {
      out.status = LpStatus::kUnbounded;
      out.optimum = std::numeric_limits<double>::infinity();
    }
    return out;
  }
  detail::Tableau tableau(c, F, f);
  return tableau.solve();
}

}  // namespace clqr

#endif  // CLQR_LP_HPP_
