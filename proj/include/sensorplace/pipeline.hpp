#pragma once

// SsporModel: basis fitting + sensor selection + reconstruction + UQ behind
// one object, and RMSE-vs-sensor-count sweeps.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sensorplace/basis.hpp"
#include "sensorplace/constraints.hpp"
#include "sensorplace/error.hpp"
#include "sensorplace/optimizers.hpp"
#include "sensorplace/reconstruct.hpp"
#include "sensorplace/uq.hpp"

namespace sensorplace {

struct BasisConfig {
  BasisKind kind = BasisKind::Svd;
  Index modes = 1;  // r; ignored for Identity and Custom
  std::uint64_t seed = 0;
  bool center = false;
  std::optional<Matrix> custom_modes;  // required for Custom
};

struct FlatPrior {
  double scale = 1.0;
};
struct DecreasingPrior {};
struct ExplicitPrior {
  Vector values;
};

/// How to obtain a GaussianPrior once the basis is known.
struct PriorSpec {
  std::variant<FlatPrior, DecreasingPrior, ExplicitPrior> kind = FlatPrior{};
  double noise = 1.0;
};

struct QrOptimizer {};
struct CcqrOptimizer {
  std::vector<double> costs;
};
struct GqrOptimizer {
  ConstraintSpec spec;
  std::optional<std::vector<Index>> predetermined;
};
struct TpgrOptimizer {
  PriorSpec prior;
};

using OptimizerConfig = std::variant<QrOptimizer, CcqrOptimizer, GqrOptimizer, TpgrOptimizer>;

inline bool is_qr_family(const OptimizerConfig& config) { return !std::holds_alternative<TpgrOptimizer>(config); }

struct RmsePoint {
  Index p;
  double rmse_ls;
  double rmse_rls;
};

struct RmseCurve {
  std::vector<RmsePoint> points;
};

/// Measurement noise added to test measurements during scoring. A separate
/// seed from anything used for basis fitting.
struct NoiseInjection {
  double magnitude = 0.0;
  std::uint64_t seed = 0;
};

using WarningHandler = std::function<void(std::string_view)>;

class SsporModel {
 public:
  SsporModel(BasisConfig basis, OptimizerConfig optimizer, Index n_sensors)
      : basis_config_(std::move(basis)), optimizer_(std::move(optimizer)), n_sensors_(n_sensors) {}

  void set_warning_handler(WarningHandler handler) { warn_ = std::move(handler); }
  void set_n_sensors(Index p) {
    n_sensors_ = p;
    fitted_.reset();
  }

  Index n_sensors() const noexcept { return n_sensors_; }
  const OptimizerConfig& optimizer() const noexcept { return optimizer_; }
  const BasisConfig& basis_config() const noexcept { return basis_config_; }
  bool is_fitted() const noexcept { return fitted_.has_value(); }

  /// Fits the basis, then runs the optimizer. Replaces any earlier fit.
  SsporModel& fit(const SnapshotMatrix& train) {
    fitted_.reset();
    SnapshotMatrix data = basis_config_.center ? train.centered() : train;
    BasisModes modes = fit_basis(data);
    Fitted f{std::move(data), std::move(modes), {}, std::nullopt};
    if (basis_config_.center) f.mean = train.mean();
    f.selection = select(f);
    fitted_ = std::move(f);
    return *this;
  }

  const BasisModes& basis() const { return state().basis; }

  /// Training data as used for fitting (centered when the center flag is on).
  const SnapshotMatrix& training_data() const { return state().train; }

  SensorSelection get_selected_sensors() const { return state().selection; }

  /// Full candidate ranking: every state for the QR family (constrained
  /// prefix first, then unconstrained continuation), exactly p for TPGR.
  SensorSelection get_all_sensors() const {
    const Fitted& f = state();
    if (!is_qr_family(optimizer_)) return f.selection;
    const Index n = f.basis.n_states();
    NormModifier prefix;
    if (const auto* c = std::get_if<CcqrOptimizer>(&optimizer_)) {
      prefix = [costs = c->costs](std::size_t, std::span<double> norms, std::span<const Index>) {
        for (std::size_t i = 0; i < norms.size(); ++i) norms[i] -= costs[i];
      };
    } else {
      // Force the already-selected prefix, then continue unconstrained.
      prefix = [gamma = f.selection.gamma](std::size_t step, std::span<double> norms, std::span<const Index>) {
        if (step >= gamma.size()) return;
        std::fill(norms.begin(), norms.end(), 0.0);
        norms[gamma[step]] = std::numeric_limits<double>::infinity();
      };
    }
    PivotTrace trace = qr_pivot_greedy(f.basis.modes.transpose(), n, prefix);
    SensorSelection all;
    all.gamma = std::move(trace.pivots);
    all.scores = std::move(trace.step_norms);
    all.ranked = std::min<Index>(all.gamma.size(), f.basis.n_modes());
    std::vector<char> seen(n, 0);
    for (const Index i : all.gamma) seen[i] = 1;
    for (Index i = 0; i < n; ++i)
      if (!seen[i]) all.gamma.push_back(i);
    return all;
  }

  GaussianPrior resolve_prior(const PriorSpec& spec) const { return resolve(state(), spec); }

  /// LS when `regularized` is false; otherwise RLS with the given prior, or a
  /// flat unit prior (with a warning) when none is supplied.
  ReconstructionMatrix reconstruction_matrix(bool regularized, const std::optional<PriorSpec>& prior = std::nullopt) const {
    const Fitted& f = state();
    const auto& gamma = f.selection.gamma;
    if (!regularized) {
      ReconstructionMatrix rm = build_ls(f.basis, gamma);
      if (rm.rank_deficient) warn("sensor rows are rank deficient; least squares uses the pseudoinverse");
      return rm;
    }
    if (!prior) {
      warn("no prior supplied; using a flat prior of scale 1.0 (a decreasing prior is recommended)");
      return build_rls(f.basis, gamma, resolve_prior(PriorSpec{FlatPrior{1.0}, 1.0}));
    }
    return build_rls(f.basis, gamma, resolve_prior(*prior));
  }

  /// Reconstructs N snapshots from an N x p measurement matrix.
  Matrix predict(const Matrix& measurements, const ReconstructionMatrix& rm) const {
    const Fitted& f = state();
    if (!f.mean) return predict_batch(rm, f.basis, measurements);
    Matrix shifted = measurements;
    for (Eigen::Index k = 0; k < shifted.cols(); ++k) {
      shifted.col(k).array() -= (*f.mean)(static_cast<Eigen::Index>(f.selection.gamma[static_cast<Index>(k)]));
    }
    Matrix out = predict_batch(rm, f.basis, shifted);
    out.rowwise() += f.mean->transpose();
    return out;
  }

  /// Sensor readings x[gamma] of each test snapshot, optionally with noise.
  Matrix measure(const SnapshotMatrix& test, const NoiseInjection& noise = {}) const {
    const Fitted& f = state();
    if (test.n_states() != f.basis.n_states()) throw Error(ErrorCode::InvalidInput, "test data has the wrong number of states");
    const auto& gamma = f.selection.gamma;
    Matrix y(test.data().rows(), static_cast<Eigen::Index>(gamma.size()));
    for (Eigen::Index k = 0; k < y.cols(); ++k) y.col(k) = test.data().col(static_cast<Eigen::Index>(gamma[k]));
    if (noise.magnitude > 0.0) {
      std::mt19937_64 rng(noise.seed);
      std::normal_distribution<double> normal(0.0, noise.magnitude);
      for (Eigen::Index j = 0; j < y.cols(); ++j)
        for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, j) += normal(rng);
    }
    return y;
  }

  /// Joint RMSE over all entries of all test snapshots.
  double score(const SnapshotMatrix& test, const ReconstructionMatrix& rm, const NoiseInjection& noise = {}) const {
    const Matrix estimate = predict(measure(test, noise), rm);
    return std::sqrt((estimate - test.data()).squaredNorm() / static_cast<double>(test.data().size()));
  }

  UncertaintyMap uncertainty(const ReconstructionMatrix& rm, double noise) const {
    return uncertainty_heatmap(basis(), rm, noise);
  }

  EnergyLandscape one_pt_energy_landscape(const PriorSpec& prior) const {
    return sensorplace::one_pt_energy_landscape(basis(), resolve_prior(prior));
  }

  EnergyLandscape two_pt_energy_landscape(const PriorSpec& prior, std::span<const Index> reference) const {
    return sensorplace::two_pt_energy_landscape(basis(), resolve_prior(prior), reference);
  }

 private:
  struct Fitted {
    SnapshotMatrix train;
    BasisModes basis;
    SensorSelection selection;
    std::optional<Vector> mean;
  };

  static GaussianPrior resolve(const Fitted& f, const PriorSpec& spec) {
    const Index r = f.basis.n_modes();
    struct Visitor {
      const Fitted& f;
      Index r;
      double noise;
      GaussianPrior operator()(const FlatPrior& flat) const { return GaussianPrior::flat(r, flat.scale, noise); }
      GaussianPrior operator()(const DecreasingPrior&) const {
        if (f.basis.singular_values && f.basis.kind == BasisKind::Svd) {
          Vector s = *f.basis.singular_values / std::sqrt(static_cast<double>(f.train.n_snapshots()));
          if (s(0) <= 0.0 || s.minCoeff() <= kDefaultRcond * s(0)) {
            throw Error(ErrorCode::DegeneratePrior, "training data has a zero singular value within the top r");
          }
          return GaussianPrior(std::move(s), noise);
        }
        return decreasing_prior(f.train, r, noise);
      }
      GaussianPrior operator()(const ExplicitPrior& e) const {
        if (static_cast<Index>(e.values.size()) != r) {
          throw Error(ErrorCode::InvalidInput, "explicit prior has " + std::to_string(e.values.size()) +
                                                   " entries, basis has " + std::to_string(r) + " modes");
        }
        return GaussianPrior(e.values, noise);
      }
    };
    return std::visit(Visitor{f, r, spec.noise}, spec.kind);
  }

  const Fitted& state() const {
    if (!fitted_) throw Error(ErrorCode::NotFitted, "model has not been fitted");
    return *fitted_;
  }

  void warn(std::string_view message) const {
    if (warn_) warn_(message);
  }

  BasisModes fit_basis(const SnapshotMatrix& train) const {
    switch (basis_config_.kind) {
      case BasisKind::Identity: return fit_identity(train);
      case BasisKind::Svd: return fit_svd(train, basis_config_.modes);
      case BasisKind::RandomProjection:
        return fit_random_projection(train.n_states(), basis_config_.modes, basis_config_.seed);
      case BasisKind::Custom: {
        if (!basis_config_.custom_modes) throw Error(ErrorCode::InvalidInput, "custom basis selected but no modes given");
        if (static_cast<Index>(basis_config_.custom_modes->rows()) != train.n_states()) {
          throw Error(ErrorCode::InvalidInput, "custom basis row count does not match the number of states");
        }
        return fit_custom(*basis_config_.custom_modes);
      }
    }
    throw Error(ErrorCode::InvalidInput, "unknown basis kind");
  }

  SensorSelection select(const Fitted& f) const {
    struct Visitor {
      const Fitted& f;
      Index p;
      SensorSelection operator()(const QrOptimizer&) const { return qr_select(f.basis, p); }
      SensorSelection operator()(const CcqrOptimizer& c) const { return ccqr_select(f.basis, p, c.costs); }
      SensorSelection operator()(const GqrOptimizer& g) const {
        if (g.predetermined) return gqr_select(f.basis, p, g.spec, std::span<const Index>(*g.predetermined));
        return gqr_select(f.basis, p, g.spec);
      }
      SensorSelection operator()(const TpgrOptimizer& t) const {
        return tpgr_select(f.basis, p, resolve(f, t.prior));
      }
    };
    SensorSelection sel = std::visit(Visitor{f, n_sensors_}, optimizer_);
    if (sel.rank_deficient) warn("fewer sensors than requested could be placed (rank deficient basis)");
    else if (sel.ranked < sel.size()) warn("sensors beyond the basis rank are not ranked");
    return sel;
  }

  BasisConfig basis_config_;
  OptimizerConfig optimizer_;
  Index n_sensors_;
  WarningHandler warn_;
  std::optional<Fitted> fitted_;
};

/// For each p: refit, reconstruct the test snapshots with LS and with RLS
/// (prior resolved against that fit), record both RMSEs. Noise, when
/// requested, is drawn per p from a generator seeded by (seed, p), and both
/// methods see the same draw.
inline RmseCurve rmse_curve(const SsporModel& model_template, const SnapshotMatrix& train, const SnapshotMatrix& test,
                            std::span<const Index> p_values, const PriorSpec& prior, const NoiseInjection& noise = {}) {
  RmseCurve curve;
  for (std::size_t k = 0; k < p_values.size(); ++k) {
    const Index p = p_values[k];
    if (k > 0 && p <= p_values[k - 1]) throw Error(ErrorCode::InvalidInput, "sensor counts must be strictly increasing");
    try {
      SsporModel model = model_template;
      model.set_warning_handler({});
      model.set_n_sensors(p);
      model.fit(train);
      if (is_qr_family(model.optimizer()) && p > model.basis().n_modes()) {
        throw Error(ErrorCode::InvalidCount, "QR-family optimizers are capped at r = " +
                                                 std::to_string(model.basis().n_modes()) + " sensors");
      }
      std::seed_seq seq{static_cast<std::uint32_t>(noise.seed), static_cast<std::uint32_t>(noise.seed >> 32),
                        static_cast<std::uint32_t>(p)};
      std::uint64_t draw_seed = 0;
      {
        std::uint32_t words[2];
        seq.generate(words, words + 2);
        draw_seed = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
      }
      const NoiseInjection draw{noise.magnitude, draw_seed};
      const double ls = model.score(test, model.reconstruction_matrix(false), draw);
      const double rls = model.score(test, model.reconstruction_matrix(true, prior), draw);
      curve.points.push_back({p, ls, rls});
    } catch (const Error& e) {
      throw Error(e.code(), "at p = " + std::to_string(p) + ": " + e.detail());
    }
  }
  return curve;
}

}  // namespace sensorplace
