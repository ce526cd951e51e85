#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sensorplace/basis.hpp"
#include "sensorplace/error.hpp"
#include "sensorplace/numerics.hpp"

namespace sensorplace {

enum class ReconstructionMethod { Ls, Rls };

/// Linear estimator a_hat = A y for a fixed sensor set; A is r x p.
struct ReconstructionMatrix {
  Matrix a_matrix;
  ReconstructionMethod method = ReconstructionMethod::Rls;
  std::optional<GaussianPrior> prior;
  // LS only: the sensor rows did not have full column rank, so the
  // pseudoinverse dropped directions.
  bool rank_deficient = false;

  Index n_modes() const noexcept { return static_cast<Index>(a_matrix.rows()); }
  Index n_sensors() const noexcept { return static_cast<Index>(a_matrix.cols()); }
};

struct Reconstruction {
  Vector coefficients;
  Vector state;
};

/// Least squares through the pseudoinverse of the sensor rows.
inline ReconstructionMatrix build_ls(const BasisModes& basis, std::span<const Index> gamma) {
  if (gamma.empty()) throw Error(ErrorCode::InvalidInput, "least squares needs at least one sensor");
  const Matrix rows = basis.sensor_rows(gamma);
  ReconstructionMatrix rm;
  rm.a_matrix = pseudoinverse(rows, kDefaultRcond);
  rm.method = ReconstructionMethod::Ls;
  rm.rank_deficient = numerical_rank(rows, kDefaultRcond) < basis.n_modes();
  return rm;
}

/// Regularized least squares:
///   A = (S^-2 + Phi^T Phi / eta^2)^-1 Phi^T / eta^2,   Phi = rows of Psi at gamma.
/// Well posed for any number of sensors, including none.
inline ReconstructionMatrix build_rls(const BasisModes& basis, std::span<const Index> gamma, const GaussianPrior& prior) {
  if (prior.size() != basis.n_modes()) {
    throw Error(ErrorCode::InvalidInput, "prior has " + std::to_string(prior.size()) + " entries, basis has " +
                                             std::to_string(basis.n_modes()) + " modes");
  }
  const Matrix rows = basis.sensor_rows(gamma);
  const double inv_noise2 = 1.0 / (prior.noise() * prior.noise());
  Matrix system = rows.transpose() * rows * inv_noise2;
  system.diagonal() += prior.prior_std().array().square().inverse().matrix();
  const Matrix rhs = rows.transpose() * inv_noise2;

  ReconstructionMatrix rm;
  rm.a_matrix = rhs.cols() == 0 ? Matrix(system.rows(), 0) : spd_solve(system, rhs);
  rm.method = ReconstructionMethod::Rls;
  rm.prior = prior;
  return rm;
}

inline Reconstruction predict(const ReconstructionMatrix& rm, const BasisModes& basis, const Vector& y) {
  if (static_cast<Index>(y.size()) != rm.n_sensors()) {
    throw Error(ErrorCode::InvalidMeasurement, "expected " + std::to_string(rm.n_sensors()) +
                                                   " measurements, got " + std::to_string(y.size()));
  }
  if (!y.allFinite()) throw Error(ErrorCode::InvalidMeasurement, "measurements must be finite");
  if (rm.n_modes() != basis.n_modes()) throw Error(ErrorCode::InvalidInput, "reconstruction matrix does not match basis");
  Reconstruction out;
  out.coefficients = rm.n_sensors() == 0 ? Vector::Zero(rm.a_matrix.rows()) : Vector(rm.a_matrix * y);
  out.state = basis.modes * out.coefficients;
  return out;
}

/// Reconstructs every row of `measurements` (N x p); returns N x n states.
inline Matrix predict_batch(const ReconstructionMatrix& rm, const BasisModes& basis, const Matrix& measurements) {
  if (static_cast<Index>(measurements.cols()) != rm.n_sensors()) {
    throw Error(ErrorCode::InvalidMeasurement, "measurement width " + std::to_string(measurements.cols()) +
                                                   " does not match " + std::to_string(rm.n_sensors()) + " sensors");
  }
  if (!measurements.allFinite()) throw Error(ErrorCode::InvalidMeasurement, "measurements must be finite");
  if (rm.n_sensors() == 0) return Matrix::Zero(measurements.rows(), basis.modes.rows());
  const Matrix coefficients = measurements * rm.a_matrix.transpose();  // N x r
  return coefficients * basis.modes.transpose();
}

/// Root-mean-square error over every state entry of every test snapshot
/// jointly, using noiseless measurements x[gamma].
inline double score_rmse(const BasisModes& basis, const ReconstructionMatrix& rm, std::span<const Index> gamma,
                         const SnapshotMatrix& test) {
  if (test.n_states() != basis.n_states()) throw Error(ErrorCode::InvalidInput, "test data has the wrong number of states");
  Matrix y(test.data().rows(), static_cast<Eigen::Index>(gamma.size()));
  for (Eigen::Index k = 0; k < y.cols(); ++k) y.col(k) = test.data().col(static_cast<Eigen::Index>(gamma[k]));
  const Matrix estimate = predict_batch(rm, basis, y);
  return std::sqrt((estimate - test.data()).squaredNorm() / static_cast<double>(test.data().size()));
}

}  // namespace sensorplace
