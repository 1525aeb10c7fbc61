#pragma once

#include "gsc/panel.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

namespace gsc::testing {

inline nlohmann::json load_fixture(const std::string& name) {
  std::ifstream in(std::filesystem::path(GSC_FIXTURE_DIR) / name);
  if (!in) throw std::runtime_error("missing fixture " + name);
  return nlohmann::json::parse(in);
}

inline Grid to_grid(const nlohmann::json& rows) {
  const auto n = static_cast<Index>(rows.size());
  const auto m = n > 0 ? static_cast<Index>(rows[0].size()) : 0;
  Grid g(n, m);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) g(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
  }
  return g;
}

inline Mask to_mask(const nlohmann::json& rows) { return to_grid(rows).array() != 0.0; }

/// Small panel builder: outcome rows, onsets (0 = control), first time 1.
inline PanelDataset make_panel(const Grid& outcome, const std::vector<std::int64_t>& onsets,
                               std::vector<std::string> ids = {}) {
  PanelParts parts;
  parts.outcome = outcome;
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    parts.unit_ids.push_back(ids.empty() ? (onsets[i] ? "t" : "c") + std::to_string(i) : ids[i]);
    parts.treatment_time.push_back(onsets[i] ? std::optional<std::int64_t>(onsets[i]) : std::nullopt);
    parts.condition_value.push_back(std::nullopt);
  }
  return PanelDataset(std::move(parts));
}

}  // namespace gsc::testing
