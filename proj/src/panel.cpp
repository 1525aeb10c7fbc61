#include "gsc/panel.hpp"

#include "gsc/errors.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace gsc {

namespace {

template <typename T>
std::vector<T> permute(const std::vector<T>& v, const std::vector<std::size_t>& order) {
  std::vector<T> out;
  out.reserve(order.size());
  for (auto k : order) out.push_back(v[k]);
  return out;
}

Grid permute_rows(const Grid& g, const std::vector<std::size_t>& order) {
  Grid out(static_cast<Index>(order.size()), g.cols());
  for (std::size_t r = 0; r < order.size(); ++r) out.row(static_cast<Index>(r)) = g.row(static_cast<Index>(order[r]));
  return out;
}

void interpolate_row(Eigen::Ref<Eigen::RowVectorXd> row) {
  const Index t = row.size();
  Index prev = -1;
  for (Index c = 0; c < t; ++c) {
    if (is_missing(row(c))) continue;
    if (prev < 0) {
      for (Index k = 0; k < c; ++k) row(k) = row(c);
    } else if (c - prev > 1) {
      const double a = row(prev), b = row(c);
      for (Index k = prev + 1; k < c; ++k) {
        const double w = static_cast<double>(k - prev) / static_cast<double>(c - prev);
        row(k) = a + w * (b - a);
      }
    }
    prev = c;
  }
  if (prev >= 0) {
    for (Index k = prev + 1; k < t; ++k) row(k) = row(prev);
  }
}

}  // namespace

PanelDataset::PanelDataset(PanelParts parts) : parts_(std::move(parts)) {
  const auto n = static_cast<std::size_t>(parts_.outcome.rows());
  const Index t = parts_.outcome.cols();
  if (parts_.unit_ids.size() != n || parts_.treatment_time.size() != n ||
      parts_.condition_value.size() != n) {
    throw ValidationError("panel: per-unit vectors do not match the outcome grid");
  }
  if (n == 0 || t == 0) throw ValidationError("panel: empty outcome grid");
  if (parts_.covariates.size() != parts_.covariate_names.size()) {
    throw ValidationError("panel: covariate names do not match covariate grids");
  }
  for (const auto& g : parts_.covariates) {
    if (g.rows() != parts_.outcome.rows() || g.cols() != t) {
      throw ValidationError("panel: covariate grid has the wrong shape");
    }
  }
  if (parts_.baseline && (parts_.baseline->rows() != parts_.outcome.rows() || parts_.baseline->cols() != t)) {
    throw ValidationError("panel: baseline grid has the wrong shape");
  }

  std::set<std::string> seen;
  for (const auto& id : parts_.unit_ids) {
    if (!seen.insert(id).second) throw ValidationError("panel: duplicate unit id '" + id + "'");
  }
  const std::int64_t lo = parts_.first_time;
  const std::int64_t hi = parts_.first_time + t - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t0 = parts_.treatment_time[i];
    if (t0 && (*t0 <= lo || *t0 > hi)) {
      std::ostringstream msg;
      msg << "panel: unit '" << parts_.unit_ids[i] << "' has treatment time " << *t0
          << " outside (" << lo << ", " << hi << "]";
      throw ValidationError(msg.str());
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool ta = parts_.treatment_time[a].has_value();
    const bool tb = parts_.treatment_time[b].has_value();
    if (ta != tb) return !ta;
    return parts_.unit_ids[a] < parts_.unit_ids[b];
  });
  parts_.unit_ids = permute(parts_.unit_ids, order);
  parts_.treatment_time = permute(parts_.treatment_time, order);
  parts_.condition_value = permute(parts_.condition_value, order);
  parts_.outcome = permute_rows(parts_.outcome, order);
  for (auto& g : parts_.covariates) g = permute_rows(g, order);
  if (parts_.baseline) parts_.baseline = permute_rows(*parts_.baseline, order);

  n_controls_ = static_cast<Index>(std::count_if(parts_.treatment_time.begin(), parts_.treatment_time.end(),
                                                 [](const auto& v) { return !v.has_value(); }));
  if (n_controls_ == 0) throw ValidationError("panel: no control units");
}

std::vector<std::int64_t> PanelDataset::times() const {
  std::vector<std::int64_t> out(static_cast<std::size_t>(n_periods()));
  std::iota(out.begin(), out.end(), parts_.first_time);
  return out;
}

std::optional<Index> PanelDataset::column_of(std::int64_t time) const {
  if (time < first_time() || time > last_time()) return std::nullopt;
  return static_cast<Index>(time - first_time());
}

Index PanelDataset::onset_column(Index row) const {
  const auto& t0 = treatment_time(row);
  return t0 ? static_cast<Index>(*t0 - first_time()) : -1;
}

std::vector<Index> PanelDataset::treated_rows() const {
  std::vector<Index> rows;
  for (Index i = n_controls_; i < n_units(); ++i) rows.push_back(i);
  return rows;
}

std::optional<Index> PanelDataset::row_of(const std::string& unit_id) const {
  const auto it = std::find(parts_.unit_ids.begin(), parts_.unit_ids.end(), unit_id);
  if (it == parts_.unit_ids.end()) return std::nullopt;
  return static_cast<Index>(it - parts_.unit_ids.begin());
}

Index PanelDataset::pre_period_count(Index row) const {
  const Index end = is_treated(row) ? onset_column(row) : n_periods();
  Index count = 0;
  for (Index c = 0; c < end; ++c) count += is_missing(parts_.outcome(row, c)) ? 0 : 1;
  return count;
}

std::vector<Grid> PanelDataset::imputed_covariates() const {
  std::vector<Grid> out;
  out.reserve(parts_.covariates.size());
  for (const auto& raw : parts_.covariates) {
    Grid g = raw;
    double sum = 0.0;
    Index count = 0;
    for (Index k = 0; k < g.size(); ++k) {
      if (!is_missing(g.data()[k])) {
        sum += g.data()[k];
        ++count;
      }
    }
    const double fallback = count > 0 ? sum / static_cast<double>(count) : 0.0;
    for (Index i = 0; i < g.rows(); ++i) {
      Eigen::RowVectorXd row = g.row(i);
      interpolate_row(row);
      for (Index c = 0; c < row.size(); ++c) {
        if (is_missing(row(c))) row(c) = fallback;
      }
      g.row(i) = row;
    }
    out.push_back(std::move(g));
  }
  return out;
}

PanelDataset load_panel(std::span<const PanelRecord> records, std::vector<std::string> covariate_names) {
  if (records.empty()) throw ValidationError("load_panel: no records");
  const std::size_t k = covariate_names.size();

  struct UnitInfo {
    std::optional<std::int64_t> treatment_time;
    bool treatment_seen = false;
    std::optional<double> condition_value;
  };
  std::map<std::string, UnitInfo> units;
  std::int64_t lo = records.front().time, hi = records.front().time;
  for (const auto& r : records) {
    if (r.covariates.size() != k) {
      throw ValidationError("load_panel: record for '" + r.unit_id + "' has the wrong covariate count");
    }
    lo = std::min(lo, r.time);
    hi = std::max(hi, r.time);
    auto& u = units[r.unit_id];
    if (!u.treatment_seen) {
      u.treatment_time = r.treatment_time;
      u.treatment_seen = true;
    } else if (u.treatment_time != r.treatment_time) {
      throw ValidationError("load_panel: inconsistent treatment_time for unit '" + r.unit_id + "'");
    }
    if (r.condition_value) {
      if (u.condition_value && *u.condition_value != *r.condition_value) {
        throw ValidationError("load_panel: inconsistent condition_value for unit '" + r.unit_id + "'");
      }
      u.condition_value = r.condition_value;
    }
  }

  const auto n = static_cast<Index>(units.size());
  const Index t = static_cast<Index>(hi - lo + 1);
  std::unordered_map<std::string, Index> row_index;
  PanelParts parts;
  parts.first_time = lo;
  parts.covariate_names = std::move(covariate_names);
  parts.outcome = Grid::Constant(n, t, kMissing);
  parts.covariates.assign(k, Grid::Constant(n, t, kMissing));
  bool any_baseline = false;
  for (const auto& r : records) any_baseline = any_baseline || r.baseline.has_value();
  if (any_baseline) parts.baseline = Grid::Constant(n, t, kMissing);
  for (const auto& [id, info] : units) {
    row_index.emplace(id, static_cast<Index>(parts.unit_ids.size()));
    parts.unit_ids.push_back(id);
    parts.treatment_time.push_back(info.treatment_time);
    parts.condition_value.push_back(info.condition_value);
  }

  Mask filled = Mask::Constant(n, t, false);
  for (const auto& r : records) {
    const Index i = row_index.at(r.unit_id);
    const Index c = static_cast<Index>(r.time - lo);
    if (filled(i, c)) {
      std::ostringstream msg;
      msg << "load_panel: duplicate record for (unit '" << r.unit_id << "', time " << r.time << ")";
      throw ValidationError(msg.str());
    }
    filled(i, c) = true;
    if (r.outcome) parts.outcome(i, c) = *r.outcome;
    for (std::size_t j = 0; j < k; ++j) {
      if (r.covariates[j]) parts.covariates[j](i, c) = *r.covariates[j];
    }
    if (r.baseline) (*parts.baseline)(i, c) = *r.baseline;
  }
  return PanelDataset(std::move(parts));
}

ObservationMask build_mask(const PanelDataset& panel) {
  const Index n = panel.n_units(), t = panel.n_periods();
  ObservationMask mask{Mask::Constant(n, t, false)};
  for (Index i = 0; i < n; ++i) {
    const Index end = panel.is_treated(i) ? panel.onset_column(i) : t;
    for (Index c = 0; c < end; ++c) mask.cells(i, c) = !is_missing(panel.outcome()(i, c));
  }
  if (mask.count() == 0) throw EstimationError("build_mask: no observed cells to fit");
  return mask;
}

FilterResult filter_min_pre_periods(const PanelDataset& panel, Index tau) {
  if (tau < 1) throw ValidationError("filter_min_pre_periods: tau must be at least 1");
  std::vector<Index> keep;
  std::vector<std::string> dropped;
  for (Index i = 0; i < panel.n_units(); ++i) {
    if (!panel.is_treated(i) || panel.pre_period_count(i) >= tau) {
      keep.push_back(i);
    } else {
      dropped.push_back(panel.unit_ids()[static_cast<std::size_t>(i)]);
    }
  }
  if (static_cast<Index>(keep.size()) == panel.n_controls()) {
    std::ostringstream msg;
    msg << "filter_min_pre_periods: every treated unit has fewer than " << tau
        << " pre-treatment observations; use a smaller tau";
    throw EstimationError(msg.str());
  }
  if (dropped.empty()) return {panel, {}};
  return {select_rows(panel, keep), std::move(dropped)};
}

std::vector<int> EventWindow::event_times() const {
  std::vector<int> out(static_cast<std::size_t>(size()));
  std::iota(out.begin(), out.end(), first());
  return out;
}

Index event_column(const PanelDataset& panel, Index row, int event_time) {
  const Index c = panel.onset_column(row) + event_time;
  return (c >= 0 && c < panel.n_periods()) ? c : -1;
}

EventView to_event_time(const PanelDataset& panel, EventWindow window) {
  if (window.pre < 1 || window.post < 1) throw ValidationError("to_event_time: window lengths must be at least 1");
  EventView view;
  view.event_times = window.event_times();
  view.rows = panel.treated_rows();
  view.values = Grid::Constant(static_cast<Index>(view.rows.size()), window.size(), kMissing);
  for (std::size_t k = 0; k < view.rows.size(); ++k) {
    const Index row = view.rows[k];
    view.unit_ids.push_back(panel.unit_ids()[static_cast<std::size_t>(row)]);
    for (int e = 0; e < window.size(); ++e) {
      const Index c = event_column(panel, row, window.first() + e);
      if (c >= 0) view.values(static_cast<Index>(k), e) = panel.outcome()(row, c);
    }
  }
  return view;
}

PanelDataset select_rows(const PanelDataset& panel, std::span<const Index> rows) {
  const auto& src = panel.parts();
  PanelParts parts;
  parts.first_time = src.first_time;
  parts.covariate_names = src.covariate_names;
  const auto n = static_cast<Index>(rows.size());
  parts.outcome.resize(n, panel.n_periods());
  parts.covariates.assign(src.covariates.size(), Grid(n, panel.n_periods()));
  if (src.baseline) parts.baseline = Grid(n, panel.n_periods());
  std::map<std::string, int> uses;
  for (Index r = 0; r < n; ++r) {
    const Index i = rows[static_cast<std::size_t>(r)];
    const auto& id = src.unit_ids[static_cast<std::size_t>(i)];
    const int k = uses[id]++;
    parts.unit_ids.push_back(k == 0 ? id : id + "#" + std::to_string(k));
    parts.treatment_time.push_back(src.treatment_time[static_cast<std::size_t>(i)]);
    parts.condition_value.push_back(src.condition_value[static_cast<std::size_t>(i)]);
    parts.outcome.row(r) = src.outcome.row(i);
    for (std::size_t j = 0; j < src.covariates.size(); ++j) parts.covariates[j].row(r) = src.covariates[j].row(i);
    if (src.baseline) parts.baseline->row(r) = src.baseline->row(i);
  }
  return PanelDataset(std::move(parts));
}

PanelDataset shift_onsets(const PanelDataset& panel, std::int64_t shift) {
  if (shift == 0) return panel;
  PanelParts parts = panel.parts();
  for (auto& t0 : parts.treatment_time) {
    if (t0) *t0 -= shift;
  }
  return PanelDataset(std::move(parts));
}

}  // namespace gsc
