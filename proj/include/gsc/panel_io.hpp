#pragma once

#include "gsc/panel.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace gsc {

// Long-format panel CSV:
//
//   unit_id,time,outcome,treatment_time,condition_value[,baseline][,cov_*...]
//
// Columns are located by header name; unit_id, time and outcome are
// required. Empty outcome / condition_value / baseline fields are missing,
// an empty treatment_time marks a control unit, and every `cov_`-prefixed
// column becomes a covariate (in header order, prefix stripped). Times and
// treatment times are integer period indices or ISO dates (YYYY-MM-DD);
// dates map to periods as floor(days since the earliest date / cadence) + 1.

struct CsvOptions {
  double cadence_days = 16.0;
  std::string outcome_column = "outcome";
  /// A non-default name must exist in the header.
  std::string condition_column = "condition_value";
  std::string baseline_column = "baseline";
};

PanelDataset read_panel_csv(std::istream& in, const CsvOptions& opts = {});
PanelDataset read_panel_csv(const std::filesystem::path& path, const CsvOptions& opts = {});

/// Writes every cell of the grid (missing values as empty fields).
void write_panel_csv(std::ostream& out, const PanelDataset& panel);

/// Shortest round-trip decimal form; NaN becomes the empty string.
std::string format_number(double v);

/// Days since 1970-01-01 for an ISO date; throws ValidationError if malformed.
std::int64_t parse_iso_date(std::string_view text);

}  // namespace gsc
