#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "sensorplace/error.hpp"
#include "sensorplace/numerics.hpp"

namespace sensorplace {

/// Training data, one snapshot (full state) per row.
class SnapshotMatrix {
 public:
  explicit SnapshotMatrix(Matrix data) : data_(std::move(data)) {
    if (data_.rows() < 1 || data_.cols() < 1) {
      throw Error(ErrorCode::InvalidInput, "snapshot matrix must have at least one row and column");
    }
    if (!data_.allFinite()) throw Error(ErrorCode::InvalidInput, "snapshot matrix has non-finite entries");
  }

  Index n_snapshots() const noexcept { return static_cast<Index>(data_.rows()); }
  Index n_states() const noexcept { return static_cast<Index>(data_.cols()); }
  const Matrix& data() const noexcept { return data_; }

  /// Column means (one per state).
  Vector mean() const { return data_.colwise().mean().transpose(); }

  SnapshotMatrix centered() const {
    Matrix c = data_.rowwise() - data_.colwise().mean();
    return SnapshotMatrix(std::move(c));
  }

 private:
  Matrix data_;
};

enum class BasisKind { Identity, Svd, RandomProjection, Custom };

constexpr std::string_view to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::Identity: return "identity";
    case BasisKind::Svd: return "svd";
    case BasisKind::RandomProjection: return "random_projection";
    case BasisKind::Custom: return "custom";
  }
  return "unknown";
}

/// n x r mode matrix; a state is x = modes * a for coefficients a.
struct BasisModes {
  Matrix modes;
  BasisKind kind = BasisKind::Identity;
  std::optional<Vector> singular_values;  // present iff kind == Svd

  Index n_states() const noexcept { return static_cast<Index>(modes.rows()); }
  Index n_modes() const noexcept { return static_cast<Index>(modes.cols()); }

  /// Rows of the mode matrix at the given state indices (the p x r matrix S Psi).
  template <typename Indices>
  Matrix sensor_rows(const Indices& gamma) const {
    Matrix out(static_cast<Eigen::Index>(std::size(gamma)), modes.cols());
    Eigen::Index k = 0;
    for (const auto i : gamma) {
      if (static_cast<Index>(i) >= n_states()) {
        throw Error(ErrorCode::InvalidInput, "sensor index " + std::to_string(i) + " out of range");
      }
      out.row(k++) = modes.row(static_cast<Eigen::Index>(i));
    }
    return out;
  }
};

/// Diagonal Gaussian prior on mode coefficients plus the assumed sensor noise.
class GaussianPrior {
 public:
  GaussianPrior(Vector prior_std, double noise) : prior_std_(std::move(prior_std)), noise_(noise) {
    if (prior_std_.size() == 0) throw Error(ErrorCode::DegeneratePrior, "prior has no entries");
    for (Eigen::Index k = 0; k < prior_std_.size(); ++k) {
      if (!(prior_std_(k) > 0.0) || !std::isfinite(prior_std_(k))) {
        throw Error(ErrorCode::DegeneratePrior,
                    "prior std at mode " + std::to_string(k) + " must be positive and finite");
      }
    }
    if (!(noise_ > 0.0) || !std::isfinite(noise_)) {
      throw Error(ErrorCode::DegeneratePrior, "noise magnitude must be positive and finite");
    }
  }

  /// Isotropic prior with every coefficient std equal to scale.
  static GaussianPrior flat(Index r, double scale, double noise) {
    return GaussianPrior(Vector::Constant(static_cast<Eigen::Index>(r), scale), noise);
  }

  const Vector& prior_std() const noexcept { return prior_std_; }
  double noise() const noexcept { return noise_; }
  Index size() const noexcept { return static_cast<Index>(prior_std_.size()); }

 private:
  Vector prior_std_;
  double noise_;
};

inline BasisModes fit_identity(const SnapshotMatrix& x) {
  const auto n = static_cast<Eigen::Index>(x.n_states());
  return BasisModes{Matrix::Identity(n, n), BasisKind::Identity, std::nullopt};
}

/// Top-r right singular vectors of the snapshots-in-rows data matrix.
inline BasisModes fit_svd(const SnapshotMatrix& x, Index r) {
  const auto max_rank = std::min(x.n_snapshots(), x.n_states());
  if (r < 1 || r > max_rank) {
    throw Error(ErrorCode::InvalidRank,
                "basis rank " + std::to_string(r) + " outside [1, " + std::to_string(max_rank) + "]");
  }
  SvdResult svd = svd_truncated(x.data(), r);
  return BasisModes{std::move(svd.right_modes), BasisKind::Svd, std::move(svd.singular_values)};
}

/// i.i.d. standard normal entries scaled by 1/sqrt(r).
inline BasisModes fit_random_projection(Index n, Index r, std::uint64_t seed) {
  if (r < 1 || r > n) {
    throw Error(ErrorCode::InvalidRank,
                "projection rank " + std::to_string(r) + " outside [1, " + std::to_string(n) + "]");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(r));
  Matrix modes(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r));
  for (Eigen::Index j = 0; j < modes.cols(); ++j)
    for (Eigen::Index i = 0; i < modes.rows(); ++i) modes(i, j) = normal(rng) * scale;
  return BasisModes{std::move(modes), BasisKind::RandomProjection, std::nullopt};
}

/// User-supplied modes, stored verbatim (no orthonormalization).
inline BasisModes fit_custom(Matrix modes) {
  detail::require_finite(modes, "custom basis");
  if (modes.cols() > modes.rows()) {
    throw Error(ErrorCode::InvalidRank, "custom basis has more modes than states");
  }
  if (numerical_rank(modes, 1e-10) < static_cast<Index>(modes.cols())) {
    throw Error(ErrorCode::RankDeficientBasis, "custom basis columns are linearly dependent");
  }
  return BasisModes{std::move(modes), BasisKind::Custom, std::nullopt};
}

/// Prior std set to the normalized training singular values sigma_k / sqrt(N).
inline GaussianPrior decreasing_prior(const SnapshotMatrix& x, Index r, double noise) {
  const auto max_rank = std::min(x.n_snapshots(), x.n_states());
  if (r < 1 || r > max_rank) {
    throw Error(ErrorCode::InvalidRank,
                "prior rank " + std::to_string(r) + " outside [1, " + std::to_string(max_rank) + "]");
  }
  Eigen::BDCSVD<Matrix> svd(x.data());
  Vector s = svd.singularValues().head(static_cast<Eigen::Index>(r));
  if (s(0) <= 0.0 || s.minCoeff() <= kDefaultRcond * s(0)) {
    throw Error(ErrorCode::DegeneratePrior, "training data has a zero singular value within the top r");
  }
  s /= std::sqrt(static_cast<double>(x.n_snapshots()));
  return GaussianPrior(std::move(s), noise);
}

}  // namespace sensorplace
