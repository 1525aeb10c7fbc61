#include "gsc/completion.hpp"

#include "gsc/parallel.hpp"
#include "gsc/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gsc {

namespace {

void require_coverage(const Mask& mask) {
  for (Index i = 0; i < mask.rows(); ++i) {
    if (!mask.row(i).any()) {
      std::ostringstream msg;
      msg << "complete: row " << i << " has no observed cell (under-identified unit)";
      throw UnderIdentifiedError(UnderIdentifiedError::Axis::kRow, i, msg.str());
    }
  }
  for (Index c = 0; c < mask.cols(); ++c) {
    if (!mask.col(c).any()) {
      std::ostringstream msg;
      msg << "complete: column " << c << " has no observed cell (under-identified period)";
      throw UnderIdentifiedError(UnderIdentifiedError::Axis::kColumn, c, msg.str());
    }
  }
}

double masked_half_mse(const Grid& w, const Grid& l, const Mask& mask, double n_obs) {
  double ss = 0.0;
  for (Index c = 0; c < w.cols(); ++c) {
    for (Index i = 0; i < w.rows(); ++i) {
      if (mask(i, c)) {
        const double r = w(i, c) - l(i, c);
        ss += r * r;
      }
    }
  }
  return 0.5 * ss / n_obs;
}

// SVT through the eigen-decomposition of the smaller Gram matrix, about four
// times cheaper than a full SVD at panel sizes. With U the eigenvectors of
// Z Z^T, the result is U diag(1 - t / sigma)_+ U^T Z; projecting Z itself
// (rather than forming V = Z^T U / sigma) keeps tiny singular values harmless.
SvtResult svt_gram(const Grid& z, double threshold) {
  const bool wide = z.rows() <= z.cols();
  const Grid g = wide ? Grid(z * z.transpose()) : Grid(z.transpose() * z);
  Eigen::SelfAdjointEigenSolver<Grid> es(g);
  const Index k = g.rows();
  SvtResult out;
  out.singular_values.resize(k);
  out.shrunk.resize(k);
  // Eigenvalues come in ascending order.
  for (Index j = 0; j < k; ++j) {
    const double sigma = std::sqrt(std::max(es.eigenvalues()(k - 1 - j), 0.0));
    out.singular_values(j) = sigma;
    out.shrunk(j) = std::max(sigma - threshold, 0.0);
  }
  Index keep = 0;
  while (keep < k && out.shrunk(keep) > 0.0) ++keep;
  if (keep == 0) {
    out.matrix = Grid::Zero(z.rows(), z.cols());
    return out;
  }
  const Grid basis = es.eigenvectors().rightCols(keep).rowwise().reverse();
  Eigen::VectorXd factor(keep);
  for (Index j = 0; j < keep; ++j) factor(j) = out.shrunk(j) / out.singular_values(j);
  if (wide) {
    out.matrix = basis * factor.asDiagonal() * (basis.transpose() * z);
  } else {
    out.matrix = (z * basis) * factor.asDiagonal() * basis.transpose();
  }
  return out;
}

}  // namespace

Grid CompletionModel::predict() const {
  Grid out = low_rank;
  out.array() += grand_mean;
  out.colwise() += unit_effects;
  out.rowwise() += time_effects.transpose();
  if (covariate_fit.size() > 0) out += covariate_fit;
  return out;
}

SvtResult svt_decomposed(const Grid& m, double threshold) {
  if (!m.allFinite()) throw ValidationError("svt: matrix has non-finite entries");
  if (!(threshold >= 0.0)) throw ValidationError("svt: threshold must be nonnegative");
  SvtResult out;
  if (m.size() == 0) {
    out.matrix = m;
    return out;
  }
  Eigen::BDCSVD<Grid> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.singular_values = svd.singularValues();
  out.shrunk = (out.singular_values.array() - threshold).max(0.0).matrix();
  Index keep = 0;
  while (keep < out.shrunk.size() && out.shrunk(keep) > 0.0) ++keep;
  out.matrix = svd.matrixU().leftCols(keep) * out.shrunk.head(keep).asDiagonal() *
               svd.matrixV().leftCols(keep).transpose();
  return out;
}

Grid svt(const Grid& m, double threshold) { return svt_decomposed(m, threshold).matrix; }

Grid TwoWayEffects::fitted() const {
  Grid out = Grid::Constant(unit.size(), time.size(), grand_mean);
  out.colwise() += unit;
  out.rowwise() += time.transpose();
  return out;
}

TwoWayEffects fit_two_way(const Grid& y, const Mask& mask) {
  const Index n = y.rows(), t = y.cols();
  TwoWayEffects fe;
  fe.unit = Eigen::VectorXd::Zero(n);
  fe.time = Eigen::VectorXd::Zero(t);
  Eigen::VectorXd row_n = Eigen::VectorXd::Zero(n), col_n = Eigen::VectorXd::Zero(t);
  double sum = 0.0, scale = 1.0;
  for (Index c = 0; c < t; ++c) {
    for (Index i = 0; i < n; ++i) {
      if (!mask(i, c)) continue;
      sum += y(i, c);
      row_n(i) += 1.0;
      col_n(c) += 1.0;
      scale = std::max(scale, std::abs(y(i, c)));
    }
  }
  const double total = row_n.sum();
  if (total == 0.0) return fe;
  fe.grand_mean = sum / total;

  Eigen::VectorXd acc_n(n), acc_t(t);
  for (int sweep = 0; sweep < 100000; ++sweep) {
    acc_n.setZero();
    for (Index c = 0; c < t; ++c) {
      for (Index i = 0; i < n; ++i) {
        if (mask(i, c)) acc_n(i) += y(i, c) - fe.grand_mean - fe.time(c);
      }
    }
    double change = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double next = row_n(i) > 0.0 ? acc_n(i) / row_n(i) : 0.0;
      change = std::max(change, std::abs(next - fe.unit(i)));
      fe.unit(i) = next;
    }
    acc_t.setZero();
    for (Index c = 0; c < t; ++c) {
      for (Index i = 0; i < n; ++i) {
        if (mask(i, c)) acc_t(c) += y(i, c) - fe.grand_mean - fe.unit(i);
      }
    }
    for (Index c = 0; c < t; ++c) {
      const double next = col_n(c) > 0.0 ? acc_t(c) / col_n(c) : 0.0;
      change = std::max(change, std::abs(next - fe.time(c)));
      fe.time(c) = next;
    }
    if (change <= 1e-14 * scale) break;
  }
  const double unit_shift = fe.unit.mean();
  const double time_shift = fe.time.mean();
  fe.unit.array() -= unit_shift;
  fe.time.array() -= time_shift;
  fe.grand_mean += unit_shift + time_shift;
  return fe;
}

Grid working_matrix(const Grid& y, const Mask& mask, bool demean_two_way, TwoWayEffects* effects) {
  TwoWayEffects fe;
  if (demean_two_way) {
    fe = fit_two_way(y, mask);
  } else {
    fe.unit = Eigen::VectorXd::Zero(y.rows());
    fe.time = Eigen::VectorXd::Zero(y.cols());
  }
  Grid w = Grid::Zero(y.rows(), y.cols());
  for (Index c = 0; c < y.cols(); ++c) {
    for (Index i = 0; i < y.rows(); ++i) {
      if (mask(i, c)) w(i, c) = y(i, c) - fe.grand_mean - fe.unit(i) - fe.time(c);
    }
  }
  if (effects) *effects = std::move(fe);
  return w;
}

CompletionModel complete(const Grid& y, const ObservationMask& mask, double lambda, const CompletionOptions& opts,
                         const std::optional<Grid>& warm_start) {
  if (!(lambda >= 0.0)) throw ValidationError("complete: lambda must be nonnegative");
  if (mask.cells.rows() != y.rows() || mask.cells.cols() != y.cols()) {
    throw ValidationError("complete: mask shape does not match the outcome grid");
  }
  const Index n_obs = mask.count();
  if (n_obs < std::min(y.rows(), y.cols())) {
    throw EstimationError("complete: fewer observed cells than min(N, T)");
  }
  require_coverage(mask.cells);
  for (Index c = 0; c < y.cols(); ++c) {
    for (Index i = 0; i < y.rows(); ++i) {
      if (mask.cells(i, c) && !std::isfinite(y(i, c))) {
        throw ValidationError("complete: observed cell holds a non-finite value");
      }
    }
  }

  CompletionModel model;
  model.lambda = lambda;
  TwoWayEffects fe;
  const Grid w = working_matrix(y, mask.cells, opts.demean_two_way, &fe);
  model.grand_mean = fe.grand_mean;
  model.unit_effects = fe.unit;
  model.time_effects = fe.time;

  const double n = static_cast<double>(n_obs);
  const double threshold = lambda * n;
  Grid l = Grid::Zero(y.rows(), y.cols());
  double nuclear = 0.0;
  if (warm_start) {
    if (warm_start->rows() != y.rows() || warm_start->cols() != y.cols()) {
      throw ValidationError("complete: warm start has the wrong shape");
    }
    l = *warm_start;
    nuclear = Eigen::BDCSVD<Grid>(l).singularValues().sum();
  }
  model.objective.push_back(masked_half_mse(w, l, mask.cells, n) + lambda * nuclear);

  Grid z(y.rows(), y.cols());
  SvtResult step;
  Eigen::VectorXd shrunk;
  double top_sv = 0.0;
  while (model.iterations < opts.max_iter) {
    z = mask.cells.select(w, l);
    step = svt_gram(z, threshold);
    const double value = masked_half_mse(w, step.matrix, mask.cells, n) + lambda * step.shrunk.sum();
    if (value > model.objective.back()) {
      // The exact step cannot increase the objective, so rounding now
      // dominates the decrease; keep the last iterate.
      model.converged = true;
      model.stalled = true;
      break;
    }
    ++model.iterations;
    const double denom = std::max(l.norm(), step.matrix.norm());
    model.final_delta = denom == 0.0 ? 0.0 : (step.matrix - l).norm() / denom;
    l = std::move(step.matrix);
    shrunk = std::move(step.shrunk);
    top_sv = step.singular_values.size() > 0 ? step.singular_values(0) : 0.0;
    model.objective.push_back(value);
    if (model.final_delta <= opts.tolerance) {
      model.converged = true;
      break;
    }
  }
  if (top_sv > 0.0) model.effective_rank = (shrunk.array() > 1e-10 * top_sv).count();
  if (!model.converged) {
    std::ostringstream msg;
    msg << "complete: no convergence after " << model.iterations << " iterations (last relative change "
        << model.final_delta << ", lambda " << lambda << ")";
    model.warnings.push_back(msg.str());
  }
  model.low_rank = std::move(l);
  return model;
}

CovariateFit residualize_covariates(const Grid& y, const std::vector<Grid>& covariates, const ObservationMask& mask,
                                    bool demean_two_way) {
  const auto k = static_cast<Index>(covariates.size());
  if (k == 0) throw ValidationError("residualize_covariates: no covariates");
  const Index n_obs = mask.count();
  auto purge = [&](const Grid& g) {
    return demean_two_way ? working_matrix(g, mask.cells, true) : mask.cells.select(g, 0.0).eval();
  };

  Eigen::VectorXd target(n_obs);
  Eigen::MatrixXd design(n_obs, k);
  {
    const Grid yy = purge(y);
    Index r = 0;
    for (Index c = 0; c < y.cols(); ++c) {
      for (Index i = 0; i < y.rows(); ++i) {
        if (mask.cells(i, c)) target(r++) = yy(i, c);
      }
    }
  }
  for (Index j = 0; j < k; ++j) {
    const Grid xx = purge(covariates[static_cast<std::size_t>(j)]);
    Index r = 0;
    for (Index c = 0; c < y.cols(); ++c) {
      for (Index i = 0; i < y.rows(); ++i) {
        if (mask.cells(i, c)) design(r++, j) = xx(i, c);
      }
    }
  }

  // Columns that vanish on the mask carry no information and get beta = 0.
  std::vector<Index> active;
  for (Index j = 0; j < k; ++j) {
    const double raw_scale = mask.cells.select(covariates[static_cast<std::size_t>(j)].cwiseAbs(), 0.0).maxCoeff();
    if (raw_scale > 0.0 && design.col(j).norm() > 1e-12 * std::max(1.0, raw_scale) * std::sqrt(static_cast<double>(n_obs))) {
      active.push_back(j);
    } else if (raw_scale > 0.0) {
      std::ostringstream msg;
      msg << "residualize_covariates: covariate " << j
          << " is collinear with the unit/time fixed effects on the observed cells";
      throw ValidationError(msg.str());
    }
  }

  CovariateFit out;
  out.beta = Eigen::VectorXd::Zero(k);
  if (!active.empty()) {
    Eigen::MatrixXd a(n_obs, static_cast<Index>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j) a.col(static_cast<Index>(j)) = design.col(active[j]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < a.cols()) {
      // Name every covariate with weight in the null space of the scaled design.
      Eigen::MatrixXd scaled = a;
      for (Index j = 0; j < scaled.cols(); ++j) scaled.col(j) /= scaled.col(j).norm();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      std::vector<bool> involved(active.size(), false);
      for (Index p = 0; p < sv.size(); ++p) {
        if (sv(p) > 1e-8 * sv(0)) continue;
        for (Index j = 0; j < scaled.cols(); ++j) {
          if (std::abs(svd.matrixV()(j, p)) > 1e-6) involved[static_cast<std::size_t>(j)] = true;
        }
      }
      std::ostringstream msg;
      msg << "residualize_covariates: rank-deficient covariate design; collinear covariates:";
      for (std::size_t j = 0; j < active.size(); ++j) {
        if (involved[j]) msg << ' ' << active[j];
      }
      throw ValidationError(msg.str());
    }
    const Eigen::VectorXd coef = qr.solve(target);
    for (std::size_t j = 0; j < active.size(); ++j) out.beta(active[j]) = coef(static_cast<Index>(j));
  }
  out.fit = Grid::Zero(y.rows(), y.cols());
  for (Index j = 0; j < k; ++j) out.fit += out.beta(j) * covariates[static_cast<std::size_t>(j)];
  out.residual = y - out.fit;
  return out;
}

double lambda_max(const Grid& y, const ObservationMask& mask, bool demean_two_way) {
  const Grid w = working_matrix(y, mask.cells, demean_two_way);
  const Index n_obs = mask.count();
  if (n_obs == 0) throw EstimationError("lambda_max: empty observation set");
  return Eigen::BDCSVD<Grid>(w).singularValues()(0) / static_cast<double>(n_obs);
}

std::vector<double> lambda_grid(const Grid& y, const ObservationMask& mask, int n_points, bool demean_two_way) {
  if (n_points < 2) throw ValidationError("lambda_grid: need at least 2 points");
  const double top = lambda_max(y, mask, demean_two_way);
  std::vector<double> grid(static_cast<std::size_t>(n_points));
  for (int k = 0; k < n_points; ++k) {
    grid[static_cast<std::size_t>(k)] = top * std::pow(1e-4, static_cast<double>(k) / (n_points - 1));
  }
  return grid;
}

FoldAssignment assign_folds(const ObservationMask& mask, int folds, std::uint64_t seed) {
  if (folds < 2) throw ValidationError("cross_validate: need at least 2 folds");
  const Index n = mask.cells.rows(), t = mask.cells.cols();
  FoldAssignment fa;
  for (Index k = 0; k < mask.cells.size(); ++k) {
    if (mask.cells.data()[k]) fa.cells.push_back(k);
  }
  rng::Stream(seed, rng::Domain::kCvFolds, 0).shuffle(fa.cells);
  fa.fold.resize(fa.cells.size());
  for (std::size_t p = 0; p < fa.cells.size(); ++p) fa.fold[p] = static_cast<int>(p % static_cast<std::size_t>(folds));

  const Eigen::VectorXi row_count = mask.cells.cast<int>().rowwise().sum();
  const Eigen::RowVectorXi col_count = mask.cells.cast<int>().colwise().sum();
  if (row_count.minCoeff() < 2 || col_count.minCoeff() < 2) {
    throw EstimationError(
        "cross_validate: a unit or period has fewer than two observed cells, so some fold would leave it "
        "unobserved; use a fixed lambda or drop it");
  }

  // Move a cell out of fold f whenever fold f would hold out a whole row or column.
  std::vector<std::vector<std::size_t>> by_row(static_cast<std::size_t>(n)), by_col(static_cast<std::size_t>(t));
  for (std::size_t p = 0; p < fa.cells.size(); ++p) {
    by_row[static_cast<std::size_t>(fa.cells[p] % n)].push_back(p);
    by_col[static_cast<std::size_t>(fa.cells[p] / n)].push_back(p);
  }
  bool changed = true;
  for (int pass = 0; pass < 10 * folds && changed; ++pass) {
    changed = false;
    for (int f = 0; f < folds; ++f) {
      for (const auto* groups : {&by_row, &by_col}) {
        for (const auto& members : *groups) {
          const bool all_held = std::all_of(members.begin(), members.end(), [&](std::size_t p) { return fa.fold[p] == f; });
          if (all_held) {
            fa.fold[members.front()] = (f + 1) % folds;
            ++fa.reassigned;
            changed = true;
          }
        }
      }
    }
  }
  if (changed) throw EstimationError("cross_validate: could not balance folds; use fewer folds");
  return fa;
}

CvReport cross_validate(const Grid& y, const ObservationMask& mask, const std::vector<double>& grid, int folds,
                        std::uint64_t seed, const CompletionOptions& opts, int threads) {
  if (grid.empty()) throw ValidationError("cross_validate: empty lambda grid");
  const FoldAssignment fa = assign_folds(mask, folds, seed);
  const Index n = y.rows();

  CvReport report;
  report.grid = grid;
  report.folds = folds;
  report.seed = seed;
  report.reassigned = fa.reassigned;
  if (fa.reassigned > 0) {
    report.warnings.push_back("cross_validate: reassigned " + std::to_string(fa.reassigned) +
                              " held-out cells to keep every unit and period in each training set");
  }

  std::vector<std::vector<double>> per_fold(static_cast<std::size_t>(folds));
  std::vector<std::vector<std::string>> fold_warnings(static_cast<std::size_t>(folds));
  parallel_for(static_cast<std::size_t>(folds), threads, [&](std::size_t f) {
    ObservationMask train = mask;
    std::vector<Index> held;
    for (std::size_t p = 0; p < fa.cells.size(); ++p) {
      if (fa.fold[p] == static_cast<int>(f)) {
        train.cells(fa.cells[p] % n, fa.cells[p] / n) = false;
        held.push_back(fa.cells[p]);
      }
    }
    std::optional<Grid> warm;
    for (double lam : grid) {
      CompletionModel m = complete(y, train, lam, opts, warm);
      const Grid pred = m.predict();
      double ss = 0.0;
      for (Index cell : held) {
        const double r = y.data()[cell] - pred.data()[cell];
        ss += r * r;
      }
      per_fold[f].push_back(ss / static_cast<double>(held.size()));
      for (auto& w : m.warnings) fold_warnings[f].push_back("fold " + std::to_string(f) + ": " + w);
      warm = std::move(m.low_rank);
    }
  });
  for (auto& w : fold_warnings) report.warnings.insert(report.warnings.end(), w.begin(), w.end());

  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> row;
    double mean = 0.0;
    for (int f = 0; f < folds; ++f) {
      row.push_back(per_fold[static_cast<std::size_t>(f)][g]);
      mean += row.back();
    }
    mean /= folds;
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    report.mean_mse.push_back(mean);
    report.sd_mse.push_back(std::sqrt(var / (folds - 1)));
    report.fold_mse.push_back(std::move(row));
  }
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (report.mean_mse[g] < report.mean_mse[report.chosen]) report.chosen = g;
  }
  return report;
}

nlohmann::json to_json(const CvReport& report) {
  return {
      {"grid", report.grid},
      {"mean_mse", report.mean_mse},
      {"sd_mse", report.sd_mse},
      {"fold_mse", report.fold_mse},
      {"chosen_index", report.chosen},
      {"chosen_lambda", report.chosen_lambda()},
      {"folds", report.folds},
      {"seed", report.seed},
      {"reassigned_cells", report.reassigned},
  };
}

}  // namespace gsc
