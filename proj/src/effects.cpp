#include "gsc/effects.hpp"

#include "gsc/errors.hpp"
#include "gsc/parallel.hpp"
#include "gsc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gsc {

std::pair<std::vector<double>, std::vector<int>> column_means(const Grid& values) {
  std::vector<double> mean(static_cast<std::size_t>(values.cols()), kMissing);
  std::vector<int> count(static_cast<std::size_t>(values.cols()), 0);
  for (Index e = 0; e < values.cols(); ++e) {
    double sum = 0.0;
    int n = 0;
    for (Index k = 0; k < values.rows(); ++k) {
      if (!is_missing(values(k, e))) {
        sum += values(k, e);
        ++n;
      }
    }
    count[static_cast<std::size_t>(e)] = n;
    if (n > 0) mean[static_cast<std::size_t>(e)] = sum / n;
  }
  return {std::move(mean), std::move(count)};
}

EffectSeries estimate_effects(const PanelDataset& panel, const Grid& counterfactual, EventWindow window) {
  if (window.pre < 1 || window.post < 1) throw ValidationError("estimate_effects: window lengths must be at least 1");
  if (counterfactual.rows() != panel.n_units() || counterfactual.cols() != panel.n_periods()) {
    throw ValidationError("estimate_effects: counterfactual grid does not match the panel");
  }
  const auto rows = panel.treated_rows();
  if (rows.empty()) throw ValidationError("estimate_effects: panel has no treated units");
  Index longest_post = 0;
  for (Index r : rows) longest_post = std::max(longest_post, panel.n_periods() - panel.onset_column(r));
  if (longest_post < window.post) {
    std::ostringstream msg;
    msg << "estimate_effects: post window of " << window.post << " periods exceeds the longest observed post-period ("
        << longest_post << ")";
    throw ValidationError(msg.str());
  }

  EffectSeries out;
  out.event_times = window.event_times();
  const auto n = static_cast<Index>(rows.size());
  const Index m = window.size();
  out.observed = Grid::Constant(n, m, kMissing);
  out.counterfactual = Grid::Constant(n, m, kMissing);
  out.delta = Grid::Constant(n, m, kMissing);
  std::vector<double> pre_level(rows.size(), kMissing);
  for (Index k = 0; k < n; ++k) {
    const Index row = rows[static_cast<std::size_t>(k)];
    out.unit_ids.push_back(panel.unit_ids()[static_cast<std::size_t>(row)]);
    for (Index e = 0; e < m; ++e) {
      const Index c = event_column(panel, row, window.first() + static_cast<int>(e));
      if (c < 0) continue;
      out.observed(k, e) = panel.outcome()(row, c);
      out.counterfactual(k, e) = counterfactual(row, c);
      out.delta(k, e) = out.observed(k, e) - out.counterfactual(k, e);
    }
    double sum = 0.0;
    int cnt = 0;
    for (Index c = 0; c < panel.onset_column(row); ++c) {
      if (!is_missing(panel.outcome()(row, c))) {
        sum += panel.outcome()(row, c);
        ++cnt;
      }
    }
    if (cnt > 0) pre_level[static_cast<std::size_t>(k)] = sum / cnt;
  }
  std::tie(out.att, out.n_units) = column_means(out.delta);

  out.att_pct.assign(static_cast<std::size_t>(m), kMissing);
  out.att_pct_pre.assign(static_cast<std::size_t>(m), kMissing);
  for (Index e = 0; e < m; ++e) {
    double cf = 0.0, pre = 0.0;
    int n_cf = 0, n_pre = 0;
    for (Index k = 0; k < n; ++k) {
      if (is_missing(out.delta(k, e))) continue;
      cf += out.counterfactual(k, e);
      ++n_cf;
      if (!is_missing(pre_level[static_cast<std::size_t>(k)])) {
        pre += pre_level[static_cast<std::size_t>(k)];
        ++n_pre;
      }
    }
    const double att = out.att[static_cast<std::size_t>(e)];
    if (n_cf > 0 && cf != 0.0) out.att_pct[static_cast<std::size_t>(e)] = 100.0 * att / (cf / n_cf);
    if (n_pre > 0 && pre != 0.0) out.att_pct_pre[static_cast<std::size_t>(e)] = 100.0 * att / (pre / n_pre);
  }
  return out;
}

int StrataSpec::label_of(const std::string& unit_id) const {
  const auto it = std::find(unit_ids.begin(), unit_ids.end(), unit_id);
  if (it == unit_ids.end()) return 0;
  return labels[static_cast<std::size_t>(it - unit_ids.begin())];
}

StrataSpec stratify(std::span<const std::string> unit_ids, std::span<const double> values, int groups) {
  if (groups < 1) throw ValidationError("stratify: groups must be at least 1");
  if (unit_ids.size() != values.size()) throw ValidationError("stratify: ids and values differ in length");
  if (values.empty()) throw ValidationError("stratify: no treated units");
  StrataSpec spec;
  spec.groups = groups;
  spec.unit_ids.assign(unit_ids.begin(), unit_ids.end());
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const auto g_count = static_cast<std::size_t>(groups);
  for (std::size_t g = 1; g < g_count; ++g) {
    const std::size_t upper = (g * n + g_count - 1) / g_count;  // ceil(g n / G)
    spec.breakpoints.push_back(sorted[std::max<std::size_t>(upper, 1) - 1]);
  }
  for (double v : values) {
    int label = 1;
    for (double b : spec.breakpoints) label += v > b ? 1 : 0;
    spec.labels.push_back(label);
  }
  return spec;
}

StrataSpec stratify(const PanelDataset& panel, int groups) {
  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<std::string> missing;
  for (Index row : panel.treated_rows()) {
    const auto& id = panel.unit_ids()[static_cast<std::size_t>(row)];
    const auto& cv = panel.condition_value(row);
    if (!cv) {
      missing.push_back(id);
      continue;
    }
    ids.push_back(id);
    values.push_back(*cv);
  }
  if (!missing.empty()) {
    std::string msg = "stratify: treated units without condition_value:";
    for (const auto& id : missing) msg += " " + id;
    throw ValidationError(msg);
  }
  return stratify(ids, values, groups);
}

std::vector<GroupEffect> catt(const EffectSeries& effects, const StrataSpec& strata) {
  std::vector<int> label(effects.unit_ids.size());
  for (std::size_t k = 0; k < effects.unit_ids.size(); ++k) {
    label[k] = strata.label_of(effects.unit_ids[k]);
    if (label[k] == 0) throw ValidationError("catt: unit '" + effects.unit_ids[k] + "' is not in the strata");
  }
  std::vector<GroupEffect> out;
  for (int g = 1; g <= strata.groups; ++g) {
    std::vector<Index> rows;
    for (std::size_t k = 0; k < label.size(); ++k) {
      if (label[k] == g) rows.push_back(static_cast<Index>(k));
    }
    Grid sub(static_cast<Index>(rows.size()), effects.delta.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Index>(r)) = effects.delta.row(rows[r]);
    GroupEffect ge;
    ge.label = g;
    std::tie(ge.att, ge.n_units) = column_means(sub);
    out.push_back(std::move(ge));
  }
  return out;
}

CumulativeSeries cumulative(const EffectSeries& effects, int from_event) {
  const auto start = std::find(effects.event_times.begin(), effects.event_times.end(), from_event);
  if (start == effects.event_times.end()) throw ValidationError("cumulative: from_event is outside the window");
  CumulativeSeries out;
  double running = 0.0;
  for (auto it = start; it != effects.event_times.end(); ++it) {
    const double a = effects.att[static_cast<std::size_t>(it - effects.event_times.begin())];
    const bool absent = is_missing(a);
    running += absent ? 0.0 : a;
    out.event_times.push_back(*it);
    out.value.push_back(running);
    out.absent.push_back(absent);
  }
  return out;
}

std::pair<PanelDataset, PanelDataset> split_eras(const PanelDataset& panel, std::int64_t cut) {
  if (cut <= panel.first_time() || cut > panel.last_time()) {
    throw ValidationError("split_eras: cut must lie strictly inside the calendar range");
  }
  std::vector<Index> early, late;
  for (Index i = 0; i < panel.n_controls(); ++i) {
    early.push_back(i);
    late.push_back(i);
  }
  const auto n_controls = early.size();
  for (Index row : panel.treated_rows()) (*panel.treatment_time(row) < cut ? early : late).push_back(row);
  if (early.size() == n_controls || late.size() == n_controls) {
    std::ostringstream msg;
    msg << "split_eras: cut " << cut << " leaves one era without treated units";
    throw ValidationError(msg.str());
  }
  return {select_rows(panel, early), select_rows(panel, late)};
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return kMissing;
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BootstrapResult bootstrap_se(const PanelDataset& panel, const FitConfig& config, EventWindow window,
                             const BootstrapOptions& opts) {
  if (opts.replicates < 2) throw ValidationError("bootstrap: need at least 2 replicates");
  if (panel.n_treated() < 2) throw ValidationError("bootstrap: need at least 2 treated units");
  if (!opts.reselect_lambda && !config.lambda) {
    throw ValidationError("bootstrap: a fixed lambda is required unless lambda re-selection is enabled");
  }
  FitConfig rep_config = config;
  if (opts.reselect_lambda) rep_config.lambda.reset();

  const auto b_count = static_cast<std::size_t>(opts.replicates);
  const auto treated = panel.treated_rows();
  BootstrapResult out;
  out.replicate_att = Grid::Constant(opts.replicates, window.size(), kMissing);
  std::vector<std::string> failure(b_count);

  parallel_for(b_count, opts.threads, [&](std::size_t b) {
    rng::Stream stream(opts.seed, rng::Domain::kBootstrap, b);
    std::vector<Index> rows;
    for (Index i = 0; i < panel.n_controls(); ++i) rows.push_back(i);
    for (std::size_t k = 0; k < treated.size(); ++k) rows.push_back(treated[stream.below(treated.size())]);
    try {
      const PanelDataset rep = select_rows(panel, rows);
      const FitResult fit = fit_panel(rep, rep_config, 1);
      const EffectSeries eff = estimate_effects(rep, fit.counterfactual, window);
      for (std::size_t e = 0; e < eff.att.size(); ++e) out.replicate_att(static_cast<Index>(b), static_cast<Index>(e)) = eff.att[e];
    } catch (const std::exception& ex) {
      failure[b] = ex.what();
    }
  });

  for (std::size_t b = 0; b < b_count; ++b) {
    if (failure[b].empty()) continue;
    ++out.dropped;
    out.warnings.push_back("bootstrap replicate " + std::to_string(b) + " dropped: " + failure[b]);
  }
  if (out.dropped * 5 > opts.replicates) {
    std::ostringstream msg;
    msg << "bootstrap: " << out.dropped << " of " << opts.replicates << " replicates failed (more than 20%)";
    throw EstimationError(msg.str());
  }

  for (Index e = 0; e < window.size(); ++e) {
    std::vector<double> vals;
    for (Index b = 0; b < opts.replicates; ++b) {
      if (!is_missing(out.replicate_att(b, e))) vals.push_back(out.replicate_att(b, e));
    }
    out.n_replicates.push_back(static_cast<int>(vals.size()));
    if (vals.size() < 2) {
      out.se.push_back(kMissing);
      out.ci_lo.push_back(kMissing);
      out.ci_hi.push_back(kMissing);
      continue;
    }
    // Shifted by the first value so identical replicates give exactly zero.
    const double shift = vals.front();
    double mean = 0.0;
    for (double v : vals) mean += v - shift;
    mean /= static_cast<double>(vals.size());
    double ss = 0.0;
    for (double v : vals) ss += (v - shift - mean) * (v - shift - mean);
    out.se.push_back(std::sqrt(ss / static_cast<double>(vals.size() - 1)));
    out.ci_lo.push_back(quantile(vals, 0.025));
    out.ci_hi.push_back(quantile(std::move(vals), 0.975));
  }
  return out;
}

void attach_bootstrap(EffectSeries& effects, const BootstrapResult& boot) {
  if (boot.se.size() != effects.event_times.size()) {
    throw ValidationError("attach_bootstrap: bootstrap window does not match the effect series");
  }
  effects.se = boot.se;
  effects.ci_lo = boot.ci_lo;
  effects.ci_hi = boot.ci_hi;
}

}  // namespace gsc
