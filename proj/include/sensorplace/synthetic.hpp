#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "sensorplace/error.hpp"
#include "sensorplace/numerics.hpp"

namespace sensorplace {

/// Seeded smooth random fields on an image grid: each snapshot is a random
/// combination of fixed low-frequency plane-wave patterns plus i.i.d.
/// Gaussian noise.
struct SyntheticFieldOptions {
  Index height = 32;
  Index width = 32;
  Index snapshots = 200;
  Index components = 40;   // number of plane-wave patterns
  Index max_frequency = 4; // per axis, in cycles across the grid
  double decay = 0.5;      // pattern k has amplitude std (k + 1)^-decay
  double noise = 0.05;     // additive per-pixel noise std
  std::uint64_t seed = 0;
};

/// Returns snapshots x (height * width) states, row-major pixels.
inline Matrix generate_smooth_fields(const SyntheticFieldOptions& opt) {
  if (opt.height == 0 || opt.width == 0 || opt.snapshots == 0 || opt.components == 0) {
    throw Error(ErrorCode::InvalidInput, "synthetic field dimensions must be positive");
  }
  if (!(opt.noise >= 0.0)) throw Error(ErrorCode::InvalidInput, "synthetic noise must be nonnegative");
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<int> freq(-static_cast<int>(opt.max_frequency), static_cast<int>(opt.max_frequency));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto n = static_cast<Eigen::Index>(opt.height * opt.width);
  const auto k = static_cast<Eigen::Index>(opt.components);
  Matrix patterns(k, n);
  for (Eigen::Index c = 0; c < k; ++c) {
    const double fx = freq(rng), fy = freq(rng), ph = phase(rng);
    const double amp = std::pow(static_cast<double>(c + 1), -opt.decay);
    for (Index row = 0; row < opt.height; ++row) {
      for (Index col = 0; col < opt.width; ++col) {
        const double arg = 2.0 * std::numbers::pi *
                               (fx * static_cast<double>(col) / static_cast<double>(opt.width) +
                                fy * static_cast<double>(row) / static_cast<double>(opt.height)) + ph;
        patterns(c, static_cast<Eigen::Index>(row * opt.width + col)) = amp * std::sin(arg);
      }
    }
  }

  Matrix coefficients(static_cast<Eigen::Index>(opt.snapshots), k);
  for (Eigen::Index i = 0; i < coefficients.rows(); ++i)
    for (Eigen::Index c = 0; c < k; ++c) coefficients(i, c) = normal(rng);
  Matrix x = coefficients * patterns;
  if (opt.noise > 0.0) {
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) += opt.noise * normal(rng);
  }
  return x;
}

}  // namespace sensorplace
