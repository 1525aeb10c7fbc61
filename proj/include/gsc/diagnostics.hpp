#pragma once

#include "gsc/effects.hpp"
#include "gsc/estimator.hpp"
#include "gsc/panel.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gsc {

struct UnitFit {
  std::string unit_id;
  int n_cells = 0;
  double mspe_cf = 0.0;
  double mspe_baseline = kMissing;
  double ratio = kMissing;  // mspe_baseline / mspe_cf
  double r2_cf = kMissing;
  double r2_baseline = kMissing;
};

/// Pre-treatment fit of the counterfactual, optionally against a comparator
/// series. R^2 values are squared Pearson correlations with the observed
/// outcome; pooled figures use every (unit, pre-period) pair.
struct FitReport {
  std::vector<UnitFit> units;
  int n_cells = 0;
  double mspe_cf = 0.0;
  double mspe_baseline = kMissing;
  double mspe_ratio = kMissing;
  double r2_cf = kMissing;
  double r2_baseline = kMissing;
  int worse_than_baseline = 0;
  std::vector<std::string> excluded;
  std::vector<std::string> warnings;
};

/// Scores every non-missing pre-onset cell of each treated unit. When a
/// baseline grid is given, only cells where it is also present count, and
/// the baseline statistics are filled in. Units without any usable cell are
/// excluded with a warning.
FitReport pre_fit_report(const PanelDataset& panel, const Grid& counterfactual,
                         const std::optional<Grid>& baseline);

/// Squared Pearson correlation; NaN when either side has zero variance.
double squared_correlation(const std::vector<double>& x, const std::vector<double>& y);

nlohmann::json to_json(const FitReport& report);
/// unit_id,mspe_cf,mspe_baseline,ratio,r2_cf_unit,r2_baseline_unit
void write_fit_csv(std::ostream& out, const FitReport& report);

struct PlaceboResult {
  PanelDataset panel;  // onsets moved earlier
  FitResult fit;
  EffectSeries effects;
};

/// Refits with every onset moved `fake_shift` periods earlier. Each treated
/// unit must keep at least `tau` non-missing pre-periods before its fake onset.
PlaceboResult placebo_in_time(const PanelDataset& panel, const FitConfig& config, int fake_shift,
                              EventWindow window, Index tau, int threads = 1);

}  // namespace gsc
