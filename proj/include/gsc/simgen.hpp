#pragma once

#include "gsc/panel.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gsc::sim {

// Synthetic panels from a known interactive fixed-effects model:
//
//   Y_it = intercept + alpha_i + lambda_i' f_t + x_it' beta + delta_it D_it + eps_it
//
// followed by MCAR deletion of outcome cells. Controls are "c0000", ...,
// treated units "t0000", ...; every unit draws from its own stream
// (control j: Domain::kSimControl, treated j: Domain::kSimTreated), and each
// random factor from Domain::kSimFactor, so resizing one group never changes
// the draws of another.

struct FactorKind {
  enum class Type { kSeasonal, kLinearTrend, kSmoothRandomWalk };
  Type type = Type::kSeasonal;
  double period = 23.0;  // seasonal only, in periods
  double phase = 0.0;    // seasonal only, in periods
};

struct EffectShape {
  enum class Type { kNone, kStep, kDecaying, kPermanentShift, kCycleDamping };
  Type type = Type::kNone;
  double level = 0.0;
  double half_life = 1.0;  // decaying
  double fraction = 0.0;   // cycle damping
};

enum class CovariateProcess { kIidNormal, kSeasonal };

struct SimConfig {
  int n_control = 40;
  int n_treated = 20;
  int n_periods = 120;
  std::vector<FactorKind> factors{FactorKind{}};
  double intercept = 0.5;
  double unit_effect_sd = 0.05;
  double loading_scale = 0.1;
  double loading_shift_treated = 0.0;  // added to every treated loading
  std::vector<double> beta_true;
  CovariateProcess covariate_process = CovariateProcess::kIidNormal;
  double noise_sd = 0.03;
  double missing_rate = 0.0;
  EffectShape effect;
  int treatment_earliest = 40;  // onsets drawn uniformly from [earliest, latest]
  int treatment_latest = 80;
  /// Correlation between the condition value and the unit effect multiplier.
  double condition_link = 0.0;
  /// Standard deviation of the per-unit effect multiplier around 1.
  double effect_heterogeneity = 0.0;
  /// Effect level per quantile group of the condition value (group 1 = lowest
  /// values). Overrides effect.level and the multiplier when non-empty.
  std::vector<double> group_levels;
  /// Units with onset >= era_cut have their effect scaled by era_multiplier.
  std::optional<std::int64_t> era_cut;
  double era_multiplier = 1.0;
  bool emit_baseline = true;
  std::uint64_t seed = 1;

  int rank() const { return static_cast<int>(factors.size()); }
};

struct GroundTruth {
  Grid low_rank;       // intercept + alpha_i + lambda_i' f_t
  Grid seasonal;       // seasonal-factor part of low_rank
  Grid effect;         // delta_it, zero for controls and pre-onset cells
  Grid covariate_fit;  // x_it' beta
  Eigen::VectorXd beta;
  Eigen::MatrixXd factors;   // n_periods x rank
  Eigen::MatrixXd loadings;  // n_units x rank
  Eigen::VectorXd unit_effects;
  std::vector<double> unit_level;  // realized effect level per unit (0 for controls)
  std::uint64_t seed = 0;
};

struct SimulatedPanel {
  PanelDataset panel;
  GroundTruth truth;
};

/// Throws ValidationError naming the offending field.
void validate(const SimConfig& config);

SimulatedPanel generate(const SimConfig& config);

/// Effect of a shape at an event time: delta = offset + (seasonal_scale - 1) * seasonal.
struct EffectAt {
  double offset = 0.0;
  double seasonal_scale = 1.0;
};

EffectAt effect_at(const EffectShape& shape, int event_time);
std::vector<EffectAt> effect_profile(const EffectShape& shape, std::span<const int> event_times);

/// True ATT per event time over the treated units observed in the grid.
std::vector<double> true_att(const SimulatedPanel& sim, EventWindow window);

nlohmann::json ground_truth_json(const SimConfig& config, const SimulatedPanel& sim);

std::string to_string(FactorKind::Type type);
std::string to_string(EffectShape::Type type);

}  // namespace gsc::sim
