#pragma once

// Sensor selection: pivoted-QR (D-optimal greedy), cost-weighted QR,
// constraint-aware QR and the two-point greedy optimizer.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sensorplace/basis.hpp"
#include "sensorplace/constraints.hpp"
#include "sensorplace/error.hpp"
#include "sensorplace/numerics.hpp"

namespace sensorplace {

/// Ordered sensor indices, best first.
struct SensorSelection {
  std::vector<Index> gamma;
  // Leading entries whose order is meaningful. For QR past the basis rank the
  // remaining picks run on a numerically zero residual and carry no ranking.
  Index ranked = 0;
  // Fewer than the requested number of sensors could be placed.
  bool rank_deficient = false;
  // Per-pick score: residual norm for the QR family, marginal energy for TPGR.
  std::vector<double> scores;

  Index size() const noexcept { return gamma.size(); }
};

namespace detail {

inline void require_count(Index p, Index n) {
  if (p < 1 || p > n) {
    throw Error(ErrorCode::InvalidCount,
                "sensor count " + std::to_string(p) + " outside [1, " + std::to_string(n) + "]");
  }
}

inline SensorSelection from_trace(PivotTrace trace, Index requested, Index r) {
  SensorSelection out;
  out.rank_deficient = trace.pivots.size() < requested;
  out.gamma = std::move(trace.pivots);
  out.scores = std::move(trace.step_norms);
  out.ranked = std::min<Index>(out.gamma.size(), r);
  return out;
}

inline void require_unique_in_range(std::span<const Index> idx, Index n, const char* what) {
  std::vector<char> seen(n, 0);
  for (const Index i : idx) {
    if (i >= n) throw Error(ErrorCode::InvalidInput, std::string(what) + " index " + std::to_string(i) + " out of range");
    if (seen[i]) throw Error(ErrorCode::InvalidInput, std::string(what) + " index " + std::to_string(i) + " repeated");
    seen[i] = 1;
  }
}

}  // namespace detail

/// Unconstrained greedy D-optimal selection: pivots of QR on Psi^T.
inline SensorSelection qr_select(const BasisModes& basis, Index p) {
  detail::require_count(p, basis.n_states());
  return detail::from_trace(qr_pivot_greedy(basis.modes.transpose(), p), p, basis.n_modes());
}

/// Pivoting on (residual norm - cost). Costs are in the units of the
/// unnormalized residual norms.
inline SensorSelection ccqr_select(const BasisModes& basis, Index p, std::span<const double> costs) {
  const Index n = basis.n_states();
  detail::require_count(p, n);
  if (costs.size() != n) {
    throw Error(ErrorCode::InvalidInput, "cost map has " + std::to_string(costs.size()) + " entries, expected " + std::to_string(n));
  }
  for (const double c : costs) {
    if (!std::isfinite(c) || c < 0.0) throw Error(ErrorCode::InvalidInput, "costs must be finite and nonnegative");
  }
  const NormModifier subtract_costs = [costs](std::size_t, std::span<double> norms, std::span<const Index>) {
    for (std::size_t i = 0; i < norms.size(); ++i) norms[i] -= costs[i];
  };
  return detail::from_trace(qr_pivot_greedy(basis.modes.transpose(), p, subtract_costs), p, basis.n_modes());
}

/// The per-mode norm modifier used by constrained QR. Exposed so the full
/// candidate ordering can reuse the constrained prefix.
inline NormModifier make_constraint_modifier(const ConstraintSpec& spec, Index n, Index p,
                                             std::vector<Index> predetermined) {
  auto in_region = std::make_shared<std::vector<char>>(n, 0);
  for (const Index i : spec.idx_constrained) (*in_region)[i] = 1;
  const Index s = spec.s;

  switch (spec.mode) {
    case ConstraintMode::MaxN:
    case ConstraintMode::ExactN: {
      const bool exact = spec.mode == ConstraintMode::ExactN;
      return [in_region, s, p, exact](std::size_t step, std::span<double> norms, std::span<const Index> selected) {
        Index placed = 0;
        for (const Index j : selected) placed += (*in_region)[j];
        if (placed >= s) {
          for (std::size_t i = 0; i < norms.size(); ++i)
            if ((*in_region)[i]) norms[i] = 0.0;
        }
        if (exact && placed < s && p - step == s - placed) {
          for (std::size_t i = 0; i < norms.size(); ++i)
            if (!(*in_region)[i]) norms[i] = 0.0;
        }
      };
    }
    case ConstraintMode::Predetermined: {
      auto forced = std::make_shared<std::vector<Index>>(std::move(predetermined));
      return [forced](std::size_t step, std::span<double> norms, std::span<const Index>) {
        if (step >= forced->size()) return;
        std::fill(norms.begin(), norms.end(), 0.0);
        norms[(*forced)[step]] = std::numeric_limits<double>::infinity();
      };
    }
    case ConstraintMode::Distance: {
      auto blocked = std::make_shared<std::vector<char>>(n, 0);
      auto processed = std::make_shared<std::size_t>(0);
      const GridGeometry geometry = *spec.geometry;
      const double d = spec.d;
      return [blocked, processed, geometry, d](std::size_t, std::span<double> norms, std::span<const Index> selected) {
        for (; *processed < selected.size(); ++*processed) {
          const Point anchor = geometry.point(selected[*processed]);
          for (Index i = 0; i < norms.size(); ++i) {
            if (!(*blocked)[i] && distance(anchor, geometry.point(i)) < d) (*blocked)[i] = 1;
          }
        }
        for (std::size_t i = 0; i < norms.size(); ++i)
          if ((*blocked)[i]) norms[i] = 0.0;
      };
    }
  }
  return {};
}

namespace detail {

// Validates a constrained request and returns the resolved predetermined list.
inline std::vector<Index> check_constraint_request(const BasisModes& basis, Index p, const ConstraintSpec& spec,
                                                   std::optional<std::span<const Index>> predetermined) {
  const Index n = basis.n_states();
  require_count(p, n);
  if (p > basis.n_modes()) {
    throw Error(ErrorCode::InvalidCount, "constrained selection supports at most r = " +
                                             std::to_string(basis.n_modes()) + " sensors, got " + std::to_string(p));
  }
  require_unique_in_range(spec.idx_constrained, n, "constrained");
  const Index region = spec.idx_constrained.size();

  switch (spec.mode) {
    case ConstraintMode::MaxN:
      if (n - region < p - std::min({spec.s, region, p})) {
        throw InfeasibleConstraintError("max_n: not enough candidates outside the region", {});
      }
      return {};
    case ConstraintMode::ExactN:
      if (spec.s > p) throw InfeasibleConstraintError("exact_n: s exceeds the sensor count", {});
      if (region < spec.s || n - region < p - spec.s) {
        throw InfeasibleConstraintError("exact_n: region cannot host exactly s of the p sensors", {});
      }
      return {};
    case ConstraintMode::Predetermined: {
      std::vector<Index> list;
      if (predetermined) {
        list.assign(predetermined->begin(), predetermined->end());
      } else {
        list.assign(spec.idx_constrained.begin(),
                    spec.idx_constrained.begin() + static_cast<std::ptrdiff_t>(std::min(spec.s, region)));
      }
      require_unique_in_range(list, n, "predetermined");
      if (list.size() != spec.s) {
        throw Error(ErrorCode::InvalidInput, "predetermined list must hold exactly s = " + std::to_string(spec.s) + " indices");
      }
      if (spec.s > p) throw InfeasibleConstraintError("predetermined: s exceeds the sensor count", {});
      return list;
    }
    case ConstraintMode::Distance:
      if (!(spec.d >= 0.0) || !std::isfinite(spec.d)) throw Error(ErrorCode::InvalidInput, "distance d must be finite and nonnegative");
      if (!spec.geometry) throw Error(ErrorCode::InvalidInput, "distance constraint needs a geometry");
      if (spec.geometry->size() != n) throw Error(ErrorCode::InvalidInput, "geometry does not cover every state");
      return {};
  }
  return {};
}

}  // namespace detail

/// Constraint-aware greedy QR. Mode semantics:
///   max_n          at most s sensors inside the region
///   exact_n        exactly s sensors inside the region
///   predetermined  the s listed sensors are placed first, in order
///   distance       all pairwise distances at least d
inline SensorSelection gqr_select(const BasisModes& basis, Index p, const ConstraintSpec& spec,
                                  std::optional<std::span<const Index>> predetermined = std::nullopt) {
  auto forced = detail::check_constraint_request(basis, p, spec, predetermined);
  const NormModifier modifier = make_constraint_modifier(spec, basis.n_states(), p, std::move(forced));
  return detail::from_trace(qr_pivot_greedy(basis.modes.transpose(), p, modifier), p, basis.n_modes());
}

/// One-point energies and pairwise interactions of the two-point expansion of
/// -log det(S^-2 + (S Psi)^T (S Psi) / eta^2).
class PairEnergies {
 public:
  PairEnergies(const BasisModes& basis, const GaussianPrior& prior) {
    if (prior.size() != basis.n_modes()) {
      throw Error(ErrorCode::InvalidInput, "prior has " + std::to_string(prior.size()) + " entries, basis has " +
                                               std::to_string(basis.n_modes()) + " modes");
    }
    scaled_ = basis.modes * prior.prior_std().asDiagonal();
    scaled_ /= prior.noise();
    gain_ = scaled_.rowwise().squaredNorm();
    h_ = gain_.unaryExpr([](double a) { return -std::log1p(a); });
  }

  Index size() const noexcept { return static_cast<Index>(h_.size()); }

  /// h_i = -log(1 + a_i), a_i = |diag(S) beta_i / eta|^2.
  const Vector& one_point() const noexcept { return h_; }

  /// J(i, j) = -log(1 - (v_i . v_j)^2 / ((1 + a_i)(1 + a_j))).
  double pair(Index i, Index j) const {
    const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
    const double c = scaled_.row(ii).dot(scaled_.row(jj));
    return -std::log1p(-(c * c) / ((1.0 + gain_(ii)) * (1.0 + gain_(jj))));
  }

  /// J(., j) for every location, with the self term J(j, j) set to 0.
  Vector interaction_with(Index j) const {
    const auto jj = static_cast<Eigen::Index>(j);
    const Vector c = scaled_ * scaled_.row(jj).transpose();
    Vector out(c.size());
    const double denom_j = 1.0 + gain_(jj);
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      out(i) = -std::log1p(-(c(i) * c(i)) / ((1.0 + gain_(i)) * denom_j));
    }
    out(jj) = 0.0;
    return out;
  }

 private:
  Matrix scaled_;
  Vector gain_;
  Vector h_;
};

/// E_b = -log det(S^-2) = 2 sum log S_k.
inline double baseline_energy(const GaussianPrior& prior) {
  return 2.0 * prior.prior_std().array().log().sum();
}

/// Two-point greedy: each step adds the location minimizing
/// h_i + sum_{j placed} J(i, j). Interaction sums are accumulated
/// incrementally, O(n r) per step.
inline SensorSelection tpgr_select(const BasisModes& basis, Index p, const GaussianPrior& prior) {
  const Index n = basis.n_states();
  detail::require_count(p, n);
  const PairEnergies energies(basis, prior);

  Vector energy = energies.one_point();
  std::vector<char> taken(n, 0);
  SensorSelection out;
  out.gamma.reserve(p);
  out.scores.reserve(p);
  for (Index step = 0; step < p; ++step) {
    Index best = n;
    double best_value = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      if (!taken[i] && energy(static_cast<Eigen::Index>(i)) < best_value) {
        best_value = energy(static_cast<Eigen::Index>(i));
        best = i;
      }
    }
    taken[best] = 1;
    out.gamma.push_back(best);
    out.scores.push_back(best_value);
    if (step + 1 < p) energy += energies.interaction_with(best);
  }
  out.ranked = out.gamma.size();
  return out;
}

/// H = -log det(S^-2 + (S Psi)^T (S Psi) / eta^2), evaluated directly.
inline double exact_objective(const BasisModes& basis, std::span<const Index> gamma, const GaussianPrior& prior) {
  if (prior.size() != basis.n_modes()) throw Error(ErrorCode::InvalidInput, "prior length does not match basis");
  detail::require_unique_in_range(gamma, basis.n_states(), "sensor");
  const Matrix rows = basis.sensor_rows(gamma);
  Matrix info = (rows.transpose() * rows) / (prior.noise() * prior.noise());
  info.diagonal() += prior.prior_std().array().square().inverse().matrix();
  return -spd_log_det(info);
}

}  // namespace sensorplace
