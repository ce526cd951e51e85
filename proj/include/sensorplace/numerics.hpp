#pragma once

// Dense linear-algebra kernels: truncated SVD, greedy column-pivoted QR with
// pluggable norm modifiers, SPD solve and pseudoinverse.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sensorplace/error.hpp"

namespace sensorplace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = std::size_t;

inline constexpr double kDefaultRcond = 1e-12;

struct SvdResult {
  Matrix left_modes;      // rows x r
  Vector singular_values; // r, nonincreasing
  Matrix right_modes;     // cols x r
};

/// Pivot order of a greedy column-pivoted QR run. step_norms[k] is the
/// residual column norm of pivots[k] at the moment it was chosen, before any
/// norm modifier was applied.
struct PivotTrace {
  std::vector<Index> pivots;
  std::vector<double> step_norms;
  // Set when pivoting stopped early because every residual column was zero.
  bool rank_exhausted = false;
};

/// Called once per pivot step with the current residual norms of every column
/// (selected columns read as 0). May rewrite entries in place; the column with
/// the largest rewritten value among unselected columns is pivoted next.
using NormModifier =
    std::function<void(std::size_t step, std::span<double> norms, std::span<const Index> selected)>;

namespace detail {

inline void require_finite(const Matrix& m, const char* what) {
  if (m.size() == 0) throw Error(ErrorCode::InvalidInput, std::string(what) + " is empty");
  if (!m.allFinite()) throw Error(ErrorCode::InvalidInput, std::string(what) + " has non-finite entries");
}

// Flip each mode so that its largest-magnitude entry (lowest index on ties)
// is positive. Makes SVD output reproducible across code paths.
inline void canonicalize_signs(Matrix& left, Matrix& right) {
  for (Eigen::Index k = 0; k < right.cols(); ++k) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < right.rows(); ++i) {
      const double a = std::abs(right(i, k));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (right(best, k) < 0.0) {
      right.col(k) *= -1.0;
      left.col(k) *= -1.0;
    }
  }
}

}  // namespace detail

/// Top-r singular triplets of m. Backed by Eigen's divide-and-conquer SVD.
inline SvdResult svd_truncated(const Matrix& m, Index r) {
  detail::require_finite(m, "matrix");
  const auto max_rank = static_cast<Index>(std::min(m.rows(), m.cols()));
  if (r < 1 || r > max_rank) {
    throw Error(ErrorCode::InvalidRank,
                "rank " + std::to_string(r) + " outside [1, " + std::to_string(max_rank) + "]");
  }
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto rr = static_cast<Eigen::Index>(r);
  SvdResult out{svd.matrixU().leftCols(rr), svd.singularValues().head(rr), svd.matrixV().leftCols(rr)};
  detail::canonicalize_signs(out.left_modes, out.right_modes);
  return out;
}

/// Greedy column-pivoted QR (modified Gram-Schmidt on the residual).
///
/// Columns are candidates. At each step the unselected column with the
/// largest (modified) residual norm is chosen, lowest index on ties, and every
/// column is deflated by the projection onto the chosen residual direction.
/// Residual norms are downdated incrementally and recomputed from the
/// residual whenever the squared norm falls below 1e-6 of its original value.
///
/// Throws InfeasibleConstraintError when a modifier has zeroed every
/// remaining candidate while some column still has nonzero residual. Stops
/// early with rank_exhausted set when every residual is exactly zero.
inline PivotTrace qr_pivot_greedy(const Matrix& m, Index p, const NormModifier& modifier = {}) {
  detail::require_finite(m, "matrix");
  const auto cols = static_cast<Index>(m.cols());
  if (p < 1 || p > cols) {
    throw Error(ErrorCode::InvalidCount,
                "pivot count " + std::to_string(p) + " outside [1, " + std::to_string(cols) + "]");
  }

  constexpr double kRecomputeRatio = 1e-6;
  Matrix residual = m;
  std::vector<double> original(cols), norm2(cols), scratch(cols);
  for (Index c = 0; c < cols; ++c) {
    norm2[c] = residual.col(static_cast<Eigen::Index>(c)).squaredNorm();
    original[c] = norm2[c];
  }
  std::vector<char> taken(cols, 0);

  PivotTrace trace;
  trace.pivots.reserve(p);
  trace.step_norms.reserve(p);

  for (Index step = 0; step < p; ++step) {
    bool any_residual = false;
    for (Index c = 0; c < cols; ++c) {
      scratch[c] = taken[c] ? 0.0 : std::sqrt(std::max(norm2[c], 0.0));
      if (!taken[c] && scratch[c] > 0.0) any_residual = true;
    }
    if (!any_residual) {
      trace.rank_exhausted = true;
      break;
    }
    if (modifier) modifier(step, std::span<double>(scratch), std::span<const Index>(trace.pivots));

    Index best = cols;
    double best_value = -std::numeric_limits<double>::infinity();
    bool any_admissible = false;
    for (Index c = 0; c < cols; ++c) {
      if (taken[c]) continue;
      if (scratch[c] != 0.0) any_admissible = true;
      if (scratch[c] > best_value) {
        best_value = scratch[c];
        best = c;
      }
    }
    if (!any_admissible || best == cols) {
      throw InfeasibleConstraintError(
          "no admissible candidate left at pivot step " + std::to_string(step), trace.pivots);
    }

    const auto jb = static_cast<Eigen::Index>(best);
    const double column_norm = residual.col(jb).norm();
    taken[best] = 1;
    trace.pivots.push_back(best);
    trace.step_norms.push_back(column_norm);
    if (column_norm == 0.0) continue;

    const Vector direction = residual.col(jb) / column_norm;
    const Eigen::RowVectorXd weights = direction.transpose() * residual;
    residual.noalias() -= direction * weights;
    for (Index c = 0; c < cols; ++c) {
      if (taken[c]) continue;
      const double w = weights(static_cast<Eigen::Index>(c));
      norm2[c] -= w * w;
      if (norm2[c] < kRecomputeRatio * original[c]) {
        norm2[c] = residual.col(static_cast<Eigen::Index>(c)).squaredNorm();
      }
    }
  }
  return trace;
}

/// Solves m z = rhs for symmetric positive-definite m via Cholesky.
inline Matrix spd_solve(const Matrix& m, const Matrix& rhs) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::InvalidInput, "spd_solve needs a nonempty square matrix");
  }
  if (rhs.rows() != m.rows()) throw Error(ErrorCode::InvalidInput, "spd_solve: rhs row count mismatch");
  if (!m.allFinite() || !rhs.allFinite()) throw Error(ErrorCode::InvalidInput, "spd_solve: non-finite input");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(ErrorCode::InvalidInput, "spd_solve: matrix is not symmetric");
  }
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "Cholesky factorization hit a nonpositive pivot");
  }
  return llt.solve(rhs);
}

/// log det of an SPD matrix.
inline double spd_log_det(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "log-determinant of a non-SPD matrix");
  }
  const Matrix& l = llt.matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i));
  return 2.0 * acc;
}

/// Moore-Penrose pseudoinverse. Singular values at or below rcond * sigma_max
/// are treated as zero.
inline Matrix pseudoinverse(const Matrix& m, double rcond = kDefaultRcond) {
  detail::require_finite(m, "matrix");
  if (!(rcond >= 0.0)) throw Error(ErrorCode::InvalidInput, "rcond must be nonnegative");
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Matrix out = Matrix::Zero(m.cols(), m.rows());
  if (s.size() == 0 || s(0) == 0.0) return out;
  const double cutoff = rcond * s(0);
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) <= cutoff) break;
    out.noalias() += (svd.matrixV().col(k) / s(k)) * svd.matrixU().col(k).transpose();
  }
  return out;
}

/// Numerical rank: count of singular values above rcond * sigma_max.
inline Index numerical_rank(const Matrix& m, double rcond) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Index rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) > rcond * s(0)) ++rank;
  }
  return rank;
}

}  // namespace sensorplace
