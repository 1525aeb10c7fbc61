#pragma once

#include "gsc/estimator.hpp"
#include "gsc/panel.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gsc {

/// Treated-unit effects on the event-time axis. Per-unit grids are
/// n_treated x n_event_times with NaN where a cell is outside the calendar
/// range or unobserved.
struct EffectSeries {
  std::vector<int> event_times;
  std::vector<std::string> unit_ids;
  Grid observed;
  Grid counterfactual;
  Grid delta;
  std::vector<double> att;  // NaN where no unit contributes
  std::vector<int> n_units;
  /// 100 * att / mean counterfactual of the contributing units.
  std::vector<double> att_pct;
  /// 100 * att / mean pre-treatment observed level of the contributing units.
  std::vector<double> att_pct_pre;
  // Filled by attach_bootstrap; empty otherwise.
  std::vector<double> se;
  std::vector<double> ci_lo;
  std::vector<double> ci_hi;
};

/// Mean of each column over its non-missing entries, with counts.
std::pair<std::vector<double>, std::vector<int>> column_means(const Grid& values);

/// delta = observed - counterfactual over the event window, and the
/// event-time ATT averaged over the units observed at each event time.
/// Throws ValidationError when no treated unit reaches the end of the window.
EffectSeries estimate_effects(const PanelDataset& panel, const Grid& counterfactual, EventWindow window);

/// Treated units grouped by quantiles of a conditioning value. Group g
/// (1-based) holds values in (breakpoints[g-2], breakpoints[g-1]]; a value
/// equal to a breakpoint belongs to the lower group.
struct StrataSpec {
  int groups = 4;
  std::vector<std::string> unit_ids;
  std::vector<int> labels;
  std::vector<double> breakpoints;  // groups - 1 entries, non-decreasing

  int label_of(const std::string& unit_id) const;
};

StrataSpec stratify(std::span<const std::string> unit_ids, std::span<const double> values, int groups);
/// Uses each treated unit's condition_value.
StrataSpec stratify(const PanelDataset& panel, int groups);

struct GroupEffect {
  int label = 0;
  std::vector<double> att;  // NaN where the group has no unit at that event time
  std::vector<int> n_units;
};

std::vector<GroupEffect> catt(const EffectSeries& effects, const StrataSpec& strata);

struct CumulativeSeries {
  std::vector<int> event_times;
  std::vector<double> value;
  std::vector<bool> absent;  // att missing at this event time; contributed 0
};

CumulativeSeries cumulative(const EffectSeries& effects, int from_event);

/// Treated units with onset < cut go to the first panel, the rest to the
/// second; both keep every control and the full calendar span.
std::pair<PanelDataset, PanelDataset> split_eras(const PanelDataset& panel, std::int64_t cut);

struct BootstrapOptions {
  int replicates = 200;
  std::uint64_t seed = 0;
  /// Re-run cross-validation in every replicate instead of reusing lambda.
  bool reselect_lambda = false;
  int threads = 1;
};

struct BootstrapResult {
  std::vector<double> se;
  std::vector<double> ci_lo;  // 2.5 percentile
  std::vector<double> ci_hi;  // 97.5 percentile
  std::vector<int> n_replicates;
  Grid replicate_att;  // replicates x event times, NaN for dropped replicates
  int dropped = 0;
  std::vector<std::string> warnings;
};

/// Unit bootstrap: resample treated units with replacement, keep controls,
/// refit and recompute the ATT. `config.lambda` must be set unless
/// reselect_lambda is on. Replicate streams depend only on (seed, index).
BootstrapResult bootstrap_se(const PanelDataset& panel, const FitConfig& config, EventWindow window,
                             const BootstrapOptions& opts);

void attach_bootstrap(EffectSeries& effects, const BootstrapResult& boot);

/// Linear-interpolation (type 7) quantile of unsorted values.
double quantile(std::vector<double> values, double p);

}  // namespace gsc
