#pragma once

#include "gsc/errors.hpp"
#include "gsc/panel.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gsc {

// Nuclear-norm matrix completion by soft-impute.
//
// Objective, over the observation set Omega:
//
//   f(L) = 1 / (2 |Omega|) * sum_{(i,t) in Omega} (Y'_it - L_it)^2 + lambda * ||L||_*
//
// where Y' is the outcome after optional two-way fixed-effects removal.
// Multiplying f by |Omega| shows each soft-impute step
//
//   L <- svt(P_Omega(Y') + P_Omega^perp(L), lambda * |Omega|)
//
// is the exact proximal step, so the SVT threshold is lambda * |Omega| and
// lambda is comparable across masks of different sizes (CV folds, bootstrap
// replicates). The smallest lambda giving L = 0 is
// lambda_max = sigma_max(P_Omega(Y')) / |Omega|.

struct CompletionOptions {
  double tolerance = 1e-6;  // relative Frobenius change between iterates
  int max_iter = 500;
  bool demean_two_way = true;
};

struct CompletionModel {
  Grid low_rank;  // fitted L on the demeaned / residualized scale
  double lambda = 0.0;
  double grand_mean = 0.0;
  Eigen::VectorXd unit_effects;
  Eigen::VectorXd time_effects;
  Eigen::VectorXd beta;  // empty without covariates
  Grid covariate_fit;    // x'beta per cell; empty without covariates
  Index effective_rank = 0;
  int iterations = 0;
  bool converged = false;
  /// Stopped because a step would have raised the objective (rounding
  /// level); counts as converged. The rejected step is not counted.
  bool stalled = false;
  double final_delta = 0.0;
  /// Penalized objective; entry 0 is the starting point, then one per iteration.
  std::vector<double> objective;
  std::vector<std::string> warnings;

  /// Counterfactual on the original outcome scale.
  Grid predict() const;
};

/// Raised when a row or column of the grid has no cell in the mask.
class UnderIdentifiedError : public EstimationError {
 public:
  enum class Axis { kRow, kColumn };
  UnderIdentifiedError(Axis axis, Index index, const std::string& what)
      : EstimationError(what), axis_(axis), index_(index) {}
  Axis axis() const { return axis_; }
  Index index() const { return index_; }

 private:
  Axis axis_;
  Index index_;
};

struct SvtResult {
  Grid matrix;
  Eigen::VectorXd singular_values;  // before shrinkage, descending
  Eigen::VectorXd shrunk;
};

/// U * max(Sigma - threshold, 0) * V^T. Throws ValidationError on non-finite input.
Grid svt(const Grid& m, double threshold);
SvtResult svt_decomposed(const Grid& m, double threshold);

struct TwoWayEffects {
  double grand_mean = 0.0;
  Eigen::VectorXd unit;
  Eigen::VectorXd time;

  Grid fitted() const;
};

/// Least-squares unit and time effects on the masked cells (alternating
/// projections run to machine precision).
TwoWayEffects fit_two_way(const Grid& y, const Mask& mask);

/// Masked cells of Y minus fixed effects (when enabled); zeros elsewhere.
Grid working_matrix(const Grid& y, const Mask& mask, bool demean_two_way, TwoWayEffects* effects = nullptr);

/// Soft-impute fit of Y on the mask. `warm_start` seeds the low-rank iterate
/// (same scale as CompletionModel::low_rank); otherwise it starts at zero.
CompletionModel complete(const Grid& y, const ObservationMask& mask, double lambda,
                         const CompletionOptions& opts = {},
                         const std::optional<Grid>& warm_start = std::nullopt);

struct CovariateFit {
  Grid residual;  // Y - x'beta on every cell
  Grid fit;       // x'beta
  Eigen::VectorXd beta;
};

/// Least squares of Y on the covariates over the masked cells. With
/// demean_two_way, Y and every covariate are first purged of two-way fixed
/// effects on the mask (Frisch-Waugh-Lovell), matching the completion step.
/// Covariates identically zero on the mask get beta = 0; any other rank
/// deficiency throws ValidationError naming the collinear covariates.
CovariateFit residualize_covariates(const Grid& y, const std::vector<Grid>& covariates,
                                    const ObservationMask& mask, bool demean_two_way = true);

double lambda_max(const Grid& y, const ObservationMask& mask, bool demean_two_way = true);

/// Descending geometric grid from lambda_max to lambda_max * 1e-4.
std::vector<double> lambda_grid(const Grid& y, const ObservationMask& mask, int n_points,
                                bool demean_two_way = true);

struct FoldAssignment {
  std::vector<Index> cells;  // column-major linear indices, in shuffled order
  std::vector<int> fold;     // fold of cells[k]
  int reassigned = 0;        // cells moved so every training set covers all rows/columns
};

FoldAssignment assign_folds(const ObservationMask& mask, int folds, std::uint64_t seed);

struct CvReport {
  std::vector<double> grid;
  std::vector<double> mean_mse;
  std::vector<double> sd_mse;
  std::vector<std::vector<double>> fold_mse;  // [grid point][fold]
  std::size_t chosen = 0;
  int folds = 0;
  std::uint64_t seed = 0;
  int reassigned = 0;
  std::vector<std::string> warnings;

  double chosen_lambda() const { return grid[chosen]; }
};

/// K-fold cell-holdout cross-validation. Each fold is fitted along the grid
/// with warm starts; the chosen point minimizes mean held-out MSE, with
/// exact ties going to the larger lambda.
CvReport cross_validate(const Grid& y, const ObservationMask& mask, const std::vector<double>& grid,
                        int folds, std::uint64_t seed, const CompletionOptions& opts = {},
                        int threads = 1);

nlohmann::json to_json(const CvReport& report);

}  // namespace gsc
