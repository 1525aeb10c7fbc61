#include "gsc/diagnostics.hpp"

#include "gsc/errors.hpp"
#include "gsc/panel_io.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace gsc {

namespace {

double mean_squared_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double ss = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) ss += (a[k] - b[k]) * (a[k] - b[k]);
  return ss / static_cast<double>(a.size());
}

nlohmann::json num(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

}  // namespace

double squared_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) return kMissing;
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return kMissing;
  return (sxy * sxy) / (sxx * syy);
}

FitReport pre_fit_report(const PanelDataset& panel, const Grid& counterfactual, const std::optional<Grid>& baseline) {
  if (counterfactual.rows() != panel.n_units() || counterfactual.cols() != panel.n_periods()) {
    throw ValidationError("pre_fit_report: counterfactual grid does not match the panel");
  }
  if (baseline && (baseline->rows() != panel.n_units() || baseline->cols() != panel.n_periods())) {
    throw ValidationError("pre_fit_report: baseline grid does not match the panel");
  }
  FitReport report;
  std::vector<double> all_obs, all_cf, all_base;
  for (Index row : panel.treated_rows()) {
    UnitFit uf;
    uf.unit_id = panel.unit_ids()[static_cast<std::size_t>(row)];
    std::vector<double> obs, cf, base;
    for (Index c = 0; c < panel.onset_column(row); ++c) {
      const double y = panel.outcome()(row, c);
      const double p = counterfactual(row, c);
      if (is_missing(y) || is_missing(p)) continue;
      if (baseline && is_missing((*baseline)(row, c))) continue;
      obs.push_back(y);
      cf.push_back(p);
      if (baseline) base.push_back((*baseline)(row, c));
    }
    if (obs.empty()) {
      report.excluded.push_back(uf.unit_id);
      report.warnings.push_back("pre_fit_report: unit '" + uf.unit_id + "' has no comparable pre-period cell");
      continue;
    }
    uf.n_cells = static_cast<int>(obs.size());
    uf.mspe_cf = mean_squared_diff(obs, cf);
    uf.r2_cf = squared_correlation(obs, cf);
    if (baseline) {
      uf.mspe_baseline = mean_squared_diff(obs, base);
      uf.r2_baseline = squared_correlation(obs, base);
      if (uf.mspe_cf > 0.0) uf.ratio = uf.mspe_baseline / uf.mspe_cf;
      if (uf.mspe_cf > uf.mspe_baseline) ++report.worse_than_baseline;
    }
    all_obs.insert(all_obs.end(), obs.begin(), obs.end());
    all_cf.insert(all_cf.end(), cf.begin(), cf.end());
    all_base.insert(all_base.end(), base.begin(), base.end());
    report.units.push_back(std::move(uf));
  }
  report.n_cells = static_cast<int>(all_obs.size());
  if (all_obs.empty()) {
    report.mspe_cf = kMissing;
    return report;
  }
  report.mspe_cf = mean_squared_diff(all_obs, all_cf);
  report.r2_cf = squared_correlation(all_obs, all_cf);
  if (baseline) {
    report.mspe_baseline = mean_squared_diff(all_obs, all_base);
    report.r2_baseline = squared_correlation(all_obs, all_base);
    if (report.mspe_cf > 0.0) report.mspe_ratio = report.mspe_baseline / report.mspe_cf;
  }
  return report;
}

nlohmann::json to_json(const FitReport& report) {
  nlohmann::json units = nlohmann::json::array();
  for (const auto& u : report.units) {
    units.push_back({{"unit_id", u.unit_id},
                     {"n_cells", u.n_cells},
                     {"mspe_cf", num(u.mspe_cf)},
                     {"mspe_baseline", num(u.mspe_baseline)},
                     {"ratio", num(u.ratio)},
                     {"r2_cf_unit", num(u.r2_cf)},
                     {"r2_baseline_unit", num(u.r2_baseline)}});
  }
  return {{"n_cells", report.n_cells},
          {"mspe_cf", num(report.mspe_cf)},
          {"mspe_baseline", num(report.mspe_baseline)},
          {"mspe_ratio", num(report.mspe_ratio)},
          {"r2_cf", num(report.r2_cf)},
          {"r2_baseline", num(report.r2_baseline)},
          {"worse_than_baseline", report.worse_than_baseline},
          {"excluded", report.excluded},
          {"units", units}};
}

void write_fit_csv(std::ostream& out, const FitReport& report) {
  out << "unit_id,mspe_cf,mspe_baseline,ratio,r2_cf_unit,r2_baseline_unit\n";
  for (const auto& u : report.units) {
    out << u.unit_id << ',' << format_number(u.mspe_cf) << ',' << format_number(u.mspe_baseline) << ','
        << format_number(u.ratio) << ',' << format_number(u.r2_cf) << ',' << format_number(u.r2_baseline) << '\n';
  }
}

PlaceboResult placebo_in_time(const PanelDataset& panel, const FitConfig& config, int fake_shift, EventWindow window,
                              Index tau, int threads) {
  if (fake_shift < 0) throw ValidationError("placebo_in_time: fake_shift must be nonnegative");
  for (Index row : panel.treated_rows()) {
    const auto fake_onset = *panel.treatment_time(row) - fake_shift;
    Index pre = 0;
    for (Index c = 0; c < fake_onset - panel.first_time() && c < panel.n_periods(); ++c) {
      pre += is_missing(panel.outcome()(row, c)) ? 0 : 1;
    }
    if (fake_onset <= panel.first_time() || pre < tau) {
      std::ostringstream msg;
      msg << "placebo_in_time: shifting unit '" << panel.unit_ids()[static_cast<std::size_t>(row)] << "' by "
          << fake_shift << " leaves " << pre << " pre-periods (tau = " << tau << ")";
      throw ValidationError(msg.str());
    }
  }
  PanelDataset shifted = shift_onsets(panel, fake_shift);
  FitResult fit = fit_panel(shifted, config, threads);
  EffectSeries effects = estimate_effects(shifted, fit.counterfactual, window);
  return {std::move(shifted), std::move(fit), std::move(effects)};
}

}  // namespace gsc
