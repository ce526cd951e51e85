#pragma once

// Noise-induced reconstruction uncertainty and energy landscapes.

#include <cmath>
#include <optional>
#include <span>

#include "sensorplace/basis.hpp"
#include "sensorplace/error.hpp"
#include "sensorplace/optimizers.hpp"
#include "sensorplace/reconstruct.hpp"

namespace sensorplace {

struct UncertaintyMap {
  Vector sigma;  // per-state std, field units
};

enum class LandscapeKind { OnePoint, TwoPoint };

struct EnergyLandscape {
  Vector values;
  LandscapeKind kind = LandscapeKind::OnePoint;
  std::optional<std::vector<Index>> reference_sensors;
};

/// sigma_i = sqrt(K_ii) for K = Psi B B^T Psi^T, B = eta A. Evaluated as
/// eta * |row i of Psi A| so the n x n covariance is never formed.
inline UncertaintyMap uncertainty_heatmap(const BasisModes& basis, const ReconstructionMatrix& rm, double noise) {
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw Error(ErrorCode::InvalidInput, "noise must be finite and nonnegative");
  if (rm.n_modes() != basis.n_modes()) throw Error(ErrorCode::InvalidInput, "reconstruction matrix does not match basis");
  if (rm.n_sensors() == 0) return {Vector::Zero(basis.modes.rows())};
  const Matrix gain = basis.modes * rm.a_matrix;  // n x p
  return {noise * gain.rowwise().norm()};
}

inline EnergyLandscape one_pt_energy_landscape(const BasisModes& basis, const GaussianPrior& prior) {
  return {PairEnergies(basis, prior).one_point(), LandscapeKind::OnePoint, std::nullopt};
}

/// Sum over reference sensors of the pairwise interaction J(i, j); a
/// reference sensor's own entry excludes its self term.
inline EnergyLandscape two_pt_energy_landscape(const BasisModes& basis, const GaussianPrior& prior,
                                               std::span<const Index> reference) {
  if (reference.empty()) throw Error(ErrorCode::InvalidInput, "two-point landscape needs at least one reference sensor");
  detail::require_unique_in_range(reference, basis.n_states(), "reference");
  const PairEnergies energies(basis, prior);
  Vector values = Vector::Zero(basis.modes.rows());
  for (const Index j : reference) values += energies.interaction_with(j);
  return {std::move(values), LandscapeKind::TwoPoint, std::vector<Index>(reference.begin(), reference.end())};
}

}  // namespace sensorplace
