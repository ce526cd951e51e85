#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sensorplace/sensorplace.hpp"

namespace sensorplace::cli {

/// Invalid or inconsistent run configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OptimizerKind { Qr, Ccqr, Gqr, Tpgr };

struct ConstraintConfig {
  std::optional<ConstraintRegion> region;  // absent for distance / predetermined
  ConstraintMode mode = ConstraintMode::MaxN;
  Index s = 0;
  double d = 0.0;
  std::vector<Index> predetermined;
};

struct RmseCurveConfig {
  std::vector<Index> p_values;
  double measurement_noise = 0.0;
  std::uint64_t noise_seed = 0;
};

/// Everything a subcommand needs, validated and with paths resolved against
/// the config file's directory.
struct RunConfig {
  std::filesystem::path train_path;
  std::optional<std::filesystem::path> test_path;
  bool header = false;

  std::optional<ImageGrid> image;
  std::optional<std::filesystem::path> coordinates_path;
  std::string x_column = "x";
  std::string y_column = "y";
  std::optional<std::string> z_column;

  BasisConfig basis;
  std::optional<std::filesystem::path> custom_basis_path;

  OptimizerKind optimizer = OptimizerKind::Qr;
  std::optional<std::filesystem::path> costs_path;

  std::optional<PriorSpec> prior;
  Index n_sensors = 0;
  std::optional<ConstraintConfig> constraint;
  bool regularized = true;
  RmseCurveConfig rmse_curve;
  std::filesystem::path output_dir = ".";
};

/// Parses and validates a TOML run configuration. Unknown keys are errors.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir);

/// "5:40", "5:40:5" or "5,10,20".
std::vector<Index> parse_p_range(std::string_view text);

}  // namespace sensorplace::cli
