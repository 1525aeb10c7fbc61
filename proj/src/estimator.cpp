#include "gsc/estimator.hpp"

#include <sstream>

namespace gsc {

FitResult fit_panel(const PanelDataset& panel, const FitConfig& config, int threads) {
  if (panel.n_treated() < 1) throw EstimationError("fit: panel has no treated units");
  FitResult out{build_mask(panel), {}, std::nullopt, {}};

  try {
    Grid y = panel.outcome();
    std::optional<CovariateFit> cov;
    if (config.use_covariates && !panel.covariates().empty()) {
      cov = residualize_covariates(y, panel.imputed_covariates(), out.mask, config.completion.demean_two_way);
      y = cov->residual;
    }

    double lambda = 0.0;
    if (config.lambda) {
      lambda = *config.lambda;
    } else {
      const auto grid = lambda_grid(y, out.mask, config.grid_points, config.completion.demean_two_way);
      out.cv = cross_validate(y, out.mask, grid, config.folds, config.cv_seed, config.completion, threads);
      lambda = out.cv->chosen_lambda();
    }

    out.model = complete(y, out.mask, lambda, config.completion);
    if (cov) {
      out.model.beta = cov->beta;
      out.model.covariate_fit = cov->fit;
    }
  } catch (const UnderIdentifiedError& e) {
    std::ostringstream msg;
    if (e.axis() == UnderIdentifiedError::Axis::kRow) {
      msg << "unit '" << panel.unit_ids()[static_cast<std::size_t>(e.index())]
          << "' has no usable observation (control cells or pre-treatment cells)";
    } else {
      msg << "period " << panel.time_at(e.index()) << " has no usable observation in any unit";
    }
    throw EstimationError("under-identified panel: " + msg.str());
  }
  out.counterfactual = out.model.predict();
  return out;
}

}  // namespace gsc
