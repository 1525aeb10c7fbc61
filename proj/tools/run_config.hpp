#pragma once

#include "gsc/completion.hpp"
#include "gsc/panel.hpp"
#include "gsc/simgen.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gsc::cli {

struct DataSection {
  /// Panel CSV; relative paths resolve against the config file's folder.
  /// When absent, <out>/panel.csv (what `simulate` writes) is used.
  std::optional<std::filesystem::path> input;
  double cadence_days = 16.0;
  std::string outcome_column = "outcome";
  std::string condition_column = "condition_value";
  std::string baseline_column = "baseline";
  /// Covariates to keep (names without the cov_ prefix); all when absent.
  std::optional<std::vector<std::string>> covariates;
  bool use_covariates = true;
};

struct EstimateSection {
  std::optional<int> tau;          // periods
  std::optional<double> tau_years;  // converted with the cadence
  EventWindow window{10, 20};
  std::optional<double> lambda;     // fixed; cross-validated when absent
  int grid_points = 20;
  int folds = 5;
  CompletionOptions completion;
};

struct EffectsSection {
  int strata_groups = 4;
  int cumulative_from = 0;
  int bootstrap_replicates = 200;
  std::optional<std::int64_t> era_cut;
};

struct DiagnoseSection {
  std::optional<int> placebo_shift;
  std::optional<int> placebo_replicates;  // defaults to the bootstrap count
};

struct RunConfig {
  std::filesystem::path source;  // config file path
  std::optional<std::uint64_t> seed;
  std::optional<sim::SimConfig> simulate;
  std::optional<std::uint64_t> simulate_seed;  // overrides `seed` for simulate
  DataSection data;
  EstimateSection estimate;
  EffectsSection effects;
  DiagnoseSection diagnose;

  /// Minimum pre-periods; years become ceil(years * 365.25 / cadence).
  /// Default is 5 years.
  Index tau_periods() const;
  nlohmann::json to_json() const;
};

/// Parses a YAML run configuration. Unknown keys, wrong types and missing
/// required fields raise ValidationError naming the field path.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& yaml_text, const std::filesystem::path& source = {});

}  // namespace gsc::cli
