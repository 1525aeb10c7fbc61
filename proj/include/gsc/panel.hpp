#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gsc {

/// Units x periods grid of reals. NaN is the missing marker.
using Grid = Eigen::MatrixXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

/// Raw pieces of a panel. Calendar time is an integer period index and the
/// grid columns cover first_time, first_time + 1, ... without gaps.
struct PanelParts {
  std::vector<std::string> unit_ids;
  std::int64_t first_time = 1;
  Grid outcome;
  std::vector<std::string> covariate_names;
  std::vector<Grid> covariates;
  std::vector<std::optional<std::int64_t>> treatment_time;
  std::vector<std::optional<double>> condition_value;
  /// Comparator series (e.g. a control-ring mean), used only by diagnostics.
  std::optional<Grid> baseline;
};

/// Validated, immutable panel. Rows are stored controls first, then treated,
/// each block ordered by unit id; the constructor reorders its input.
class PanelDataset {
 public:
  explicit PanelDataset(PanelParts parts);

  const PanelParts& parts() const { return parts_; }
  const std::vector<std::string>& unit_ids() const { return parts_.unit_ids; }
  const Grid& outcome() const { return parts_.outcome; }
  const std::vector<Grid>& covariates() const { return parts_.covariates; }
  const std::vector<std::string>& covariate_names() const { return parts_.covariate_names; }
  const std::optional<Grid>& baseline() const { return parts_.baseline; }
  const std::optional<double>& condition_value(Index row) const {
    return parts_.condition_value[static_cast<std::size_t>(row)];
  }
  const std::optional<std::int64_t>& treatment_time(Index row) const {
    return parts_.treatment_time[static_cast<std::size_t>(row)];
  }

  Index n_units() const { return parts_.outcome.rows(); }
  Index n_periods() const { return parts_.outcome.cols(); }
  Index n_controls() const { return n_controls_; }
  Index n_treated() const { return n_units() - n_controls_; }
  bool is_treated(Index row) const { return row >= n_controls_; }

  std::int64_t first_time() const { return parts_.first_time; }
  std::int64_t last_time() const { return parts_.first_time + n_periods() - 1; }
  std::vector<std::int64_t> times() const;
  std::int64_t time_at(Index col) const { return parts_.first_time + col; }
  std::optional<Index> column_of(std::int64_t time) const;

  /// Grid column of the first treated period; -1 for controls.
  Index onset_column(Index row) const;
  std::vector<Index> treated_rows() const;
  std::optional<Index> row_of(const std::string& unit_id) const;

  /// Non-missing outcome cells before onset.
  Index pre_period_count(Index row) const;

  /// Covariates with gaps filled by per-unit linear interpolation, flat
  /// beyond the first/last observed value. A unit with no observed value
  /// for a covariate takes that covariate's overall mean.
  std::vector<Grid> imputed_covariates() const;

 private:
  PanelParts parts_;
  Index n_controls_ = 0;
};

/// One row of long-format input.
struct PanelRecord {
  std::string unit_id;
  std::int64_t time = 0;
  std::optional<double> outcome;
  std::vector<std::optional<double>> covariates;
  std::optional<std::int64_t> treatment_time;
  std::optional<double> condition_value;
  std::optional<double> baseline;
};

/// Builds dense grids from long records; absent (unit, time) pairs become
/// missing cells. Throws ValidationError on duplicate pairs, inconsistent
/// per-unit treatment times or condition values, and zero control units.
PanelDataset load_panel(std::span<const PanelRecord> records,
                        std::vector<std::string> covariate_names = {});

/// The set of cells the completion is fitted on.
struct ObservationMask {
  Mask cells;
  Index count() const { return cells.count(); }
};

/// Non-missing control cells plus non-missing treated cells before onset.
ObservationMask build_mask(const PanelDataset& panel);

struct FilterResult {
  PanelDataset panel;
  std::vector<std::string> dropped;
};

/// Drops treated units with fewer than `tau` non-missing pre-onset outcomes.
FilterResult filter_min_pre_periods(const PanelDataset& panel, Index tau);

/// Event-time window: event times -pre .. post-1, onset at 0.
struct EventWindow {
  int pre = 1;
  int post = 1;

  int size() const { return pre + post; }
  int first() const { return -pre; }
  std::vector<int> event_times() const;
};

/// Treated-unit outcomes re-indexed so each unit's onset sits at event time 0.
struct EventView {
  std::vector<int> event_times;
  std::vector<Index> rows;           // panel rows of the treated units
  std::vector<std::string> unit_ids;
  Grid values;                       // rows.size() x event_times.size()
};

EventView to_event_time(const PanelDataset& panel, EventWindow window);

/// Calendar column for (row, event time), or -1 outside the grid.
Index event_column(const PanelDataset& panel, Index row, int event_time);

/// New panel made of the given rows (duplicates allowed). Repeated ids get a
/// "#k" suffix so the result still has unique ids.
PanelDataset select_rows(const PanelDataset& panel, std::span<const Index> rows);

/// Same panel with every treated onset moved `shift` periods earlier.
PanelDataset shift_onsets(const PanelDataset& panel, std::int64_t shift);

}  // namespace gsc
