#pragma once

#include "run_config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace gsc::cli {

struct GlobalOptions {
  std::filesystem::path config;
  std::filesystem::path out = "out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool bootstrap_recv = false;
};

// Each command reads the config, writes into `out` only, and records what
// it wrote (with SHA-256 digests) under its own key in out/manifest.json.
// Errors surface as ValidationError (bad config or input, exit 2) or
// EstimationError / other exceptions (exit 1).

/// panel.csv and ground_truth.json from the `simulate` section.
void cmd_simulate(const RunConfig& cfg, const GlobalOptions& opts, std::ostream& log);

/// Fits the panel, then writes cv_report.json, model.json, predictions.csv,
/// the effect tables, fit_report.json/.csv and, with an era cut, era_a/,
/// era_b/ and era_comparison.json.
void cmd_fit(const RunConfig& cfg, const GlobalOptions& opts, std::ostream& log);

/// Recomputes the effect tables (and bootstrap) from a fitted run directory.
void cmd_effects(const RunConfig& cfg, const GlobalOptions& opts, std::ostream& log);

/// Pre-period scatter data and fit report from a fitted run directory, plus
/// the placebo-in-time table when diagnose.placebo_shift is set.
void cmd_diagnose(const RunConfig& cfg, const GlobalOptions& opts, std::ostream& log);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Parses arguments, dispatches, and maps failures to exit codes
/// (0 success, 1 estimation/runtime failure, 2 config/validation failure).
int run_cli(int argc, char** argv, std::ostream& log);

}  // namespace gsc::cli
