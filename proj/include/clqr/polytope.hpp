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

#ifndef CLQR_POLYTOPE_HPP_
#define CLQR_POLYTOPE_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "clqr/common.hpp"
#include "clqr/io.hpp"
#include "clqr/lp.hpp"

namespace clqr {

/// Halfspace polyhedron {x : F x ≤ f}.
///
/// Rows with a zero normal are dropped when their offset is nonnegative; a
/// zero row with a negative offset marks the set as empty.
class Polyhedron {
 public:
  Polyhedron() = default;

  Polyhedron(const ConstMatrixRef& F, const ConstVectorRef& f) {
    require(F.rows() == f.size(), ErrorCode::kDimensionMismatch, "Polyhedron: F and f row counts differ");
    require(F.rows() >= 1, ErrorCode::kInvalidArgument, "Polyhedron: need at least one halfspace");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < F.rows(); ++i) {
      if (F.row(i).cwiseAbs().maxCoeff() == 0.0) {
        if (f(i) < 0.0) empty_ = true;
        continue;
      }
      keep.push_back(i);
    }
    F_.resize(static_cast<Eigen::Index>(keep.size()), F.cols());
    f_.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      F_.row(static_cast<Eigen::Index>(k)) = F.row(keep[k]);
      f_(static_cast<Eigen::Index>(k)) = f(keep[k]);
    }
  }

  /// Axis-aligned box lower ≤ x ≤ upper.
  static Polyhedron box(const ConstVectorRef& lower, const ConstVectorRef& upper) {
    const auto n = lower.size();
    require(upper.size() == n, ErrorCode::kDimensionMismatch, "box: bound sizes differ");
    Matrix F(2 * n, n);
    F << Matrix::Identity(n, n), -Matrix::Identity(n, n);
    Vector f(2 * n);
    f << upper, -lower;
    return {F, f};
  }

  /// The whole space ℝⁿ (no halfspaces).
  static Polyhedron universe(Eigen::Index n) {
    Polyhedron out;
    out.F_.resize(0, n);
    out.f_.resize(0);
    return out;
  }

  [[nodiscard]] const Matrix& F() const { return F_; }
  [[nodiscard]] const Vector& f() const { return f_; }
  [[nodiscard]] Eigen::Index dim() const { return F_.cols(); }
  [[nodiscard]] Eigen::Index num_rows() const { return F_.rows(); }
  [[nodiscard]] bool trivially_empty() const { return empty_; }

 private:
  Matrix F_;
  Vector f_;
  bool empty_{false};
};

inline bool contains(const Polyhedron& poly, const ConstVectorRef& x, double tol = 0.0) {
  require(x.size() == poly.dim(), ErrorCode::kDimensionMismatch, "contains: dimension mismatch");
  if (poly.trivially_empty()) return false;
  if (poly.num_rows() == 0) return true;
  return ((poly.F() * x - poly.f()).array() <= tol).all();
}

inline LpResult lp_maximize(const ConstVectorRef& c, const Polyhedron& poly) {
  if (poly.trivially_empty()) return LpResult{};
  return lp_maximize(c, poly.F(), poly.f());
}

inline bool is_empty(const Polyhedron& poly) {
  return lp_maximize(Vector::Zero(poly.dim()), poly).status == LpStatus::kInfeasible;
}

/// Intersection: rows of `a` followed by rows of `b`.
inline Polyhedron intersect(const Polyhedron& a, const Polyhedron& b) {
  require(a.dim() == b.dim(), ErrorCode::kDimensionMismatch, "intersect: dimension mismatch");
  Matrix F(a.num_rows() + b.num_rows(), a.dim());
  Vector f(F.rows());
  F.topRows(a.num_rows()) = a.F();
  F.bottomRows(b.num_rows()) = b.F();
  f.head(a.num_rows()) = a.f();
  f.tail(b.num_rows()) = b.f();
  if (F.rows() == 0 && !a.trivially_empty() && !b.trivially_empty()) return Polyhedron::universe(a.dim());
  if (a.trivially_empty() || b.trivially_empty()) {
    F.conservativeResize(F.rows() + 1, Eigen::NoChange);
    f.conservativeResize(f.size() + 1);
    F.row(F.rows() - 1).setZero();
    f(f.size() - 1) = -1.0;
  }
  return {F, f};
}

/// True when every halfspace of `outer` is implied by `inner` (inner ⊆ outer).
inline bool is_subset(const Polyhedron& inner, const Polyhedron& outer, double tol = 1e-9) {
  if (is_empty(inner)) return true;
  for (Eigen::Index i = 0; i < outer.num_rows(); ++i) {
    const LpResult r = lp_maximize(outer.F().row(i).transpose(), inner);
    if (r.status == LpStatus::kUnbounded) return false;
    if (r.optimum > outer.f()(i) + tol * (1.0 + outer.F().row(i).norm())) return false;
  }
  return true;
}

/// Drops every row implied by the remaining ones. Rows are visited in order and
/// each is tested against the rows still kept, so duplicates keep one copy.
inline Polyhedron remove_redundancy(const Polyhedron& poly, double tol = 1e-9) {
  require(!is_empty(poly), ErrorCode::kEmptySet, "remove_redundancy: polyhedron is empty");
  const auto q = poly.num_rows();
  std::vector<bool> kept(static_cast<std::size_t>(q), true);
  for (Eigen::Index i = 0; i < q; ++i) {
    Eigen::Index others = 0;
    for (Eigen::Index j = 0; j < q; ++j)
      if (j != i && kept[static_cast<std::size_t>(j)]) ++others;
    Matrix F(others, poly.dim());
    Vector f(others);
    Eigen::Index r = 0;
    for (Eigen::Index j = 0; j < q; ++j) {
      if (j == i || !kept[static_cast<std::size_t>(j)]) continue;
      F.row(r) = poly.F().row(j);
      f(r++) = poly.f()(j);
    }
    const LpResult lp = lp_maximize(poly.F().row(i).transpose(), F, f);
    const bool redundant = lp.status == LpStatus::kOptimal &&
                           lp.optimum <= poly.f()(i) + tol * (1.0 + poly.F().row(i).norm());
    if (redundant) kept[static_cast<std::size_t>(i)] = false;
  }
  Eigen::Index count = 0;
  for (bool k : kept) count += k ? 1 : 0;
  Matrix F(count, poly.dim());
  Vector f(count);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < q; ++i) {
    if (!kept[static_cast<std::size_t>(i)]) continue;
    F.row(r) = poly.F().row(i);
    f(r++) = poly.f()(i);
  }
  if (count == 0) return Polyhedron::universe(poly.dim());
  return {F, f};
}

/// Maximal positively invariant subset of `base` for x⁺ = A_cl x.
///
/// Ω₀ = base, Ω_{k+1} = Ω_k ∩ {x : A_cl x ∈ Ω_k}; stops once every row of the
/// pre-image is redundant for Ω_k. Optionally records each iterate.
inline Polyhedron max_positively_invariant(const ConstMatrixRef& A_cl, const Polyhedron& base,
                                           int max_iter = 500,
                                           std::vector<Polyhedron>* iterates = nullptr) {
  require(A_cl.rows() == base.dim() && A_cl.cols() == base.dim(), ErrorCode::kDimensionMismatch,
          "max_positively_invariant: A_cl does not match the base dimension");
  require(!base.trivially_empty() && (base.f().array() > 0.0).all(), ErrorCode::kInvalidArgument,
          "max_positively_invariant: origin must lie in the interior of the base set");
  Polyhedron omega = remove_redundancy(base);
  if (iterates) iterates->push_back(omega);
  for (int k = 0; k < max_iter; ++k) {
    const Matrix pre_F = omega.F() * A_cl;
    bool all_redundant = true;
    for (Eigen::Index i = 0; i < pre_F.rows() && all_redundant; ++i) {
      if (pre_F.row(i).cwiseAbs().maxCoeff() == 0.0) continue;
      const LpResult lp = lp_maximize(pre_F.row(i).transpose(), omega);
      if (lp.status != LpStatus::kOptimal ||
          lp.optimum > omega.f()(i) + 1e-9 * (1.0 + pre_F.row(i).norm()))
        all_redundant = false;
    }
    if (all_redundant) return omega;
    omega = remove_redundancy(intersect(omega, Polyhedron(pre_F, omega.f())));
    if (iterates) iterates->push_back(omega);
  }
  throw Error(ErrorCode::kNoConvergence, "max_positively_invariant: no fixed point within max_iter");
}

/// {x : F̂x ≤ f̂ − eps} where (F̂, f̂) are the rows scaled to unit normal when
/// `normalize` is set, the raw rows otherwise.
inline Polyhedron tighten(const Polyhedron& poly, double eps, bool normalize = true) {
  require(eps >= 0.0, ErrorCode::kInvalidArgument, "tighten: eps must be nonnegative");
  Matrix F = poly.F();
  Vector f = poly.f();
  if (normalize) {
    for (Eigen::Index i = 0; i < F.rows(); ++i) {
      const double norm = F.row(i).norm();
      F.row(i) /= norm;
      f(i) /= norm;
    }
  }
  f.array() -= eps;
  if (F.rows() == 0) return poly;
  Polyhedron out(F, f);
  require(!is_empty(out), ErrorCode::kEmptySet, "tighten: tightened set is empty");
  return out;
}

/// Extracts per-coordinate bounds when `poly` is an axis-aligned box.
inline std::pair<Vector, Vector> box_bounds(const Polyhedron& poly) {
  const auto n = poly.dim();
  Vector lower = Vector::Constant(n, -std::numeric_limits<double>::infinity());
  Vector upper = Vector::Constant(n, std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < poly.num_rows(); ++i) {
    Eigen::Index nz = 0, idx = -1;
    for (Eigen::Index j = 0; j < n; ++j)
      if (poly.F()(i, j) != 0.0) {
        ++nz;
        idx = j;
      }
    require(nz == 1, ErrorCode::kNotABox, "box_bounds: row " + std::to_string(i) + " is not axis-aligned");
    const double a = poly.F()(i, idx);
    const double bound = poly.f()(i) / a;
    if (a > 0.0) upper(idx) = std::min(upper(idx), bound);
    else lower(idx) = std::max(lower(idx), bound);
  }
  for (Eigen::Index j = 0; j < n; ++j)
    require(std::isfinite(lower(j)) && std::isfinite(upper(j)) && lower(j) <= upper(j), ErrorCode::kNotABox,
            "box_bounds: coordinate " + std::to_string(j) + " is not bounded on both sides");
  return {lower, upper};
}

/// Uniform points in a box, deterministic for a given seed. Uses the top 53
/// bits of mt19937_64 directly so the stream does not depend on the standard
/// library's distribution implementation.
class BoxSampler {
 public:
  BoxSampler(const Polyhedron& box, std::uint64_t seed) : rng_(seed) {
    std::tie(lower_, upper_) = box_bounds(box);
  }

  Vector next() {
    Vector x(lower_.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double unit = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
      x(j) = lower_(j) + unit * (upper_(j) - lower_(j));
    }
    return x;
  }

 private:
  std::mt19937_64 rng_;
  Vector lower_, upper_;
};

/// The first `count` points of BoxSampler(box, seed).
inline std::vector<Vector> sample_uniform(const Polyhedron& box, std::size_t count, std::uint64_t seed) {
  BoxSampler sampler(box, seed);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) out.push_back(sampler.next());
  return out;
}

/// Rows "F₁ … Fₙ f", one halfspace per line.
inline void write_polyhedron(std::ostream& os, const Polyhedron& poly) {
  Matrix M(poly.num_rows(), poly.dim() + 1);
  M << poly.F(), poly.f();
  write_matrix(os, M);
}

inline Polyhedron read_polyhedron(std::istream& is) {
  const Matrix M = read_matrix(is);
  require(M.cols() >= 2, ErrorCode::kIo, "polyhedron file needs at least two columns");
  return {M.leftCols(M.cols() - 1), M.col(M.cols() - 1)};
}

}  // namespace clqr

#endif  // CLQR_POLYTOPE_HPP_
