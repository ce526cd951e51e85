#include <iostream>

#include <CLI11.hpp>

#include "cli/commands.hpp"

namespace cli = sensorplace::cli;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse sensor placement: fit, reconstruct and quantify uncertainty"};
  app.require_subcommand(1);
  app.fallthrough();

  cli::GlobalOptions global;
  std::string config, output;
  std::uint64_t seed = 0;
  app.add_option("--config", config, "TOML run configuration");
  app.add_option("--output", output, "output directory (overrides the config)");
  app.add_option("--seed", seed, "seed for random bases, noise draws and synthetic data");
  app.add_flag("--quiet", global.quiet, "suppress notices and warnings");

  auto* fit = app.add_subcommand("fit", "select sensors; writes sensors.csv and pivots.csv");

  cli::ReconstructOptions rec;
  std::string rec_test, rec_meas, rec_method;
  auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct full states; writes reconstruction.csv [+ rmse.txt]");
  reconstruct->add_option("--test", rec_test, "test snapshot matrix (one snapshot per row)");
  reconstruct->add_option("--measurements", rec_meas, "sensor readings, one row per snapshot, columns in sensor rank order");
  reconstruct->add_option("--method", rec_method, "rls or unregularized")->check(CLI::IsMember({"rls", "unregularized"}));

  auto* heatmap = app.add_subcommand("heatmap", "per-location reconstruction std; writes sigma.csv [+ sigma.pgm]");

  cli::LandscapeOptions land;
  std::string land_ref;
  auto* landscape = app.add_subcommand("landscape", "energy landscape; writes landscape.csv [+ landscape.pgm]");
  landscape->add_option("--kind", land.kind, "one or two")->check(CLI::IsMember({"one", "two"}));
  landscape->add_option("--ref", land_ref, "reference sensors for kind=two, e.g. 3,17,40 (default: the fitted sensors)");

  cli::RmseCurveOptions curve;
  std::string p_range;
  auto* rmse = app.add_subcommand("rmse-curve", "test RMSE against sensor count; writes rmse_curve.csv");
  rmse->add_option("--p-range", p_range, "lo:hi, lo:hi:step or a comma list");

  cli::SyntheticOptions syn;
  auto* synthetic = app.add_subcommand("generate-synthetic", "seeded smooth random fields; writes train.csv and test.csv");
  synthetic->add_option("--height", syn.fields.height, "grid height")->capture_default_str();
  synthetic->add_option("--width", syn.fields.width, "grid width")->capture_default_str();
  synthetic->add_option("--snapshots", syn.fields.snapshots, "training snapshots")->capture_default_str();
  synthetic->add_option("--test-snapshots", syn.test_snapshots, "test snapshots")->capture_default_str();
  synthetic->add_option("--components", syn.fields.components, "number of plane-wave patterns")->capture_default_str();
  synthetic->add_option("--max-frequency", syn.fields.max_frequency, "largest wave number per axis")->capture_default_str();
  synthetic->add_option("--decay", syn.fields.decay, "pattern amplitude decay exponent")->capture_default_str();
  synthetic->add_option("--noise", syn.fields.noise, "additive per-pixel noise std")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  if (!config.empty()) global.config = config;
  if (!output.empty()) global.output = output;
  if (app.count("--seed") > 0) global.seed = seed;
  if (!rec_test.empty()) rec.test = rec_test;
  if (!rec_meas.empty()) rec.measurements = rec_meas;
  if (!rec_method.empty()) rec.method = rec_method;
  if (landscape->count("--ref") > 0) land.ref = land_ref;
  if (!p_range.empty()) curve.p_range = p_range;

  const cli::Reporter report(std::cout, std::cerr, global.quiet);
  try {
    if (fit->parsed()) cli::cmd_fit(global, report);
    else if (reconstruct->parsed()) cli::cmd_reconstruct(global, rec, report);
    else if (heatmap->parsed()) cli::cmd_heatmap(global, report);
    else if (landscape->parsed()) cli::cmd_landscape(global, land, report);
    else if (rmse->parsed()) cli::cmd_rmse_curve(global, curve, report);
    else if (synthetic->parsed()) cli::cmd_generate_synthetic(global, syn, report);
  } catch (const cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const sensorplace::io::FileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return 0;
}
