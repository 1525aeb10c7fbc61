#pragma once

#include "gsc/completion.hpp"
#include "gsc/panel.hpp"

#include <cstdint>
#include <optional>

namespace gsc {

/// How a panel is turned into a counterfactual grid.
struct FitConfig {
  std::optional<double> lambda;  // fixed lambda; cross-validated when unset
  int grid_points = 20;
  int folds = 5;
  std::uint64_t cv_seed = 0;
  CompletionOptions completion;
  bool use_covariates = true;  // residualize on the panel's covariates, if any
};

struct FitResult {
  ObservationMask mask;
  CompletionModel model;
  std::optional<CvReport> cv;
  Grid counterfactual;  // model.predict(), original scale, every cell
};

/// Mask, optional covariate residualization, lambda selection and
/// completion. Requires at least one treated unit. Under-identified rows or
/// columns are reported by unit id / calendar time.
FitResult fit_panel(const PanelDataset& panel, const FitConfig& config, int threads = 1);

}  // namespace gsc
