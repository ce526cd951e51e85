#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "cli/config.hpp"

namespace sensorplace::cli {

struct GlobalOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> output;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

struct ReconstructOptions {
  std::optional<std::filesystem::path> test;
  std::optional<std::filesystem::path> measurements;
  std::optional<std::string> method;  // rls | unregularized
};

struct LandscapeOptions {
  std::string kind = "one";
  std::optional<std::string> ref;  // comma-separated state indices
};

struct RmseCurveOptions {
  std::optional<std::string> p_range;
};

struct SyntheticOptions {
  SyntheticFieldOptions fields;
  Index test_snapshots = 200;
};

/// Diagnostics sink shared by the commands; notices are dropped when quiet.
class Reporter {
 public:
  Reporter(std::ostream& out, std::ostream& err, bool quiet) : out_(out), err_(err), quiet_(quiet) {}
  void info(std::string_view message) const;
  void warn(std::string_view message) const;

 private:
  std::ostream& out_;
  std::ostream& err_;
  bool quiet_;
};

void cmd_fit(const GlobalOptions& global, const Reporter& report);
void cmd_reconstruct(const GlobalOptions& global, const ReconstructOptions& opts, const Reporter& report);
void cmd_heatmap(const GlobalOptions& global, const Reporter& report);
void cmd_landscape(const GlobalOptions& global, const LandscapeOptions& opts, const Reporter& report);
void cmd_rmse_curve(const GlobalOptions& global, const RmseCurveOptions& opts, const Reporter& report);
void cmd_generate_synthetic(const GlobalOptions& global, const SyntheticOptions& opts, const Reporter& report);

/// Parses "3,5,7" into state indices.
std::vector<Index> parse_index_list(std::string_view text);

}  // namespace sensorplace::cli
