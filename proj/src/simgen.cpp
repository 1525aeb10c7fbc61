#include "gsc/simgen.hpp"

#include "gsc/effects.hpp"
#include "gsc/errors.hpp"
#include "gsc/rng.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace gsc::sim {

namespace {

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw ValidationError("sim config field '" + field + "': " + why);
}

Eigen::VectorXd make_factor(const FactorKind& kind, int n_periods, std::uint64_t seed, std::size_t k) {
  Eigen::VectorXd f(n_periods);
  switch (kind.type) {
    case FactorKind::Type::kSeasonal:
      for (int t = 0; t < n_periods; ++t) {
        f(t) = std::sin(2.0 * std::numbers::pi * (t + 1 + kind.phase) / kind.period);
      }
      break;
    case FactorKind::Type::kLinearTrend:
      for (int t = 0; t < n_periods; ++t) f(t) = n_periods > 1 ? 2.0 * t / (n_periods - 1) - 1.0 : 0.0;
      break;
    case FactorKind::Type::kSmoothRandomWalk: {
      rng::Stream stream(seed, rng::Domain::kSimFactor, k);
      Eigen::VectorXd walk(n_periods);
      double level = 0.0;
      for (int t = 0; t < n_periods; ++t) {
        level += stream.normal();
        walk(t) = level;
      }
      // Centered 5-point moving average, then standardized.
      for (int t = 0; t < n_periods; ++t) {
        const int lo = std::max(0, t - 2), hi = std::min(n_periods - 1, t + 2);
        f(t) = walk.segment(lo, hi - lo + 1).mean();
      }
      f.array() -= f.mean();
      const double sd = std::sqrt(f.squaredNorm() / n_periods);
      if (sd > 0.0) f /= sd;
      break;
    }
  }
  return f;
}

}  // namespace

std::string to_string(FactorKind::Type type) {
  switch (type) {
    case FactorKind::Type::kSeasonal: return "seasonal";
    case FactorKind::Type::kLinearTrend: return "linear_trend";
    case FactorKind::Type::kSmoothRandomWalk: return "smooth_random_walk";
  }
  return "unknown";
}

std::string to_string(EffectShape::Type type) {
  switch (type) {
    case EffectShape::Type::kNone: return "none";
    case EffectShape::Type::kStep: return "step";
    case EffectShape::Type::kDecaying: return "decaying";
    case EffectShape::Type::kPermanentShift: return "permanent_shift";
    case EffectShape::Type::kCycleDamping: return "cycle_damping";
  }
  return "unknown";
}

void validate(const SimConfig& c) {
  require(c.n_control >= 1, "n_control", "must be at least 1");
  require(c.n_treated >= 1, "n_treated", "must be at least 1");
  require(c.n_periods >= 2, "n_periods", "must be at least 2");
  require(c.rank() >= 1, "factors", "need at least one latent factor (rank >= 1)");
  for (const auto& f : c.factors) {
    require(f.type != FactorKind::Type::kSeasonal || f.period > 0.0, "factors.period", "must be positive");
  }
  require(c.noise_sd >= 0.0, "noise_sd", "must be nonnegative");
  require(c.loading_scale >= 0.0, "loading_scale", "must be nonnegative");
  require(c.unit_effect_sd >= 0.0, "unit_effect_sd", "must be nonnegative");
  require(c.missing_rate >= 0.0 && c.missing_rate < 1.0, "missing_rate", "must be in [0, 1)");
  require(c.treatment_earliest > 1, "treatment_window", "earliest onset must be after the first period");
  require(c.treatment_latest <= c.n_periods, "treatment_window", "latest onset must be within n_periods");
  require(c.treatment_earliest <= c.treatment_latest, "treatment_window", "earliest must not exceed latest");
  require(c.condition_link >= -1.0 && c.condition_link <= 1.0, "condition_link", "must be in [-1, 1]");
  require(c.effect_heterogeneity >= 0.0, "effect_heterogeneity", "must be nonnegative");
  require(c.effect.type != EffectShape::Type::kDecaying || c.effect.half_life > 0.0, "effect.half_life",
          "must be positive");
  require(c.effect.type != EffectShape::Type::kCycleDamping || (c.effect.fraction >= 0.0 && c.effect.fraction <= 1.0),
          "effect.fraction", "must be in [0, 1]");
}

EffectAt effect_at(const EffectShape& shape, int e) {
  EffectAt out;
  if (e < 0) return out;
  switch (shape.type) {
    case EffectShape::Type::kNone: break;
    case EffectShape::Type::kStep:
    case EffectShape::Type::kPermanentShift: out.offset = shape.level; break;
    case EffectShape::Type::kDecaying: out.offset = shape.level * std::exp2(-static_cast<double>(e) / shape.half_life); break;
    case EffectShape::Type::kCycleDamping: out.seasonal_scale = 1.0 - shape.fraction; break;
  }
  return out;
}

std::vector<EffectAt> effect_profile(const EffectShape& shape, std::span<const int> event_times) {
  std::vector<EffectAt> out;
  out.reserve(event_times.size());
  for (int e : event_times) out.push_back(effect_at(shape, e));
  return out;
}

SimulatedPanel generate(const SimConfig& c) {
  validate(c);
  const int n = c.n_control + c.n_treated;
  const int t_len = c.n_periods;
  const int r = c.rank();
  const auto k_cov = static_cast<Index>(c.beta_true.size());

  GroundTruth truth;
  truth.seed = c.seed;
  truth.beta = Eigen::Map<const Eigen::VectorXd>(c.beta_true.data(), k_cov);
  truth.factors.resize(t_len, r);
  for (int k = 0; k < r; ++k) truth.factors.col(k) = make_factor(c.factors[static_cast<std::size_t>(k)], t_len, c.seed, static_cast<std::size_t>(k));
  truth.loadings.resize(n, r);
  truth.unit_effects.resize(n);
  truth.unit_level.assign(static_cast<std::size_t>(n), 0.0);

  PanelParts parts;
  parts.first_time = 1;
  parts.outcome.resize(n, t_len);
  parts.covariates.assign(static_cast<std::size_t>(k_cov), Grid(n, t_len));
  for (Index j = 0; j < k_cov; ++j) parts.covariate_names.push_back("x" + std::to_string(j + 1));

  Grid noise(n, t_len);
  Mask missing(n, t_len);
  std::vector<double> z(static_cast<std::size_t>(n), 0.0), eta(static_cast<std::size_t>(n), 0.0);

  // Per-unit draws, in this order: unit effect, loadings, [onset, condition,
  // multiplier noise], covariates, noise, missingness.
  for (int i = 0; i < n; ++i) {
    const bool treated = i >= c.n_control;
    const int j = treated ? i - c.n_control : i;
    rng::Stream s(c.seed, treated ? rng::Domain::kSimTreated : rng::Domain::kSimControl, static_cast<std::uint64_t>(j));
    char id[16];
    std::snprintf(id, sizeof(id), "%c%04d", treated ? 't' : 'c', j);
    parts.unit_ids.emplace_back(id);

    truth.unit_effects(i) = c.unit_effect_sd * s.normal();
    for (int k = 0; k < r; ++k) {
      truth.loadings(i, k) = c.loading_scale * s.normal() + (treated ? c.loading_shift_treated : 0.0);
    }
    if (treated) {
      const auto span = static_cast<std::uint64_t>(c.treatment_latest - c.treatment_earliest + 1);
      parts.treatment_time.emplace_back(c.treatment_earliest + static_cast<std::int64_t>(s.below(span)));
      z[static_cast<std::size_t>(i)] = s.normal();
      eta[static_cast<std::size_t>(i)] = s.normal();
      parts.condition_value.emplace_back(50.0 + 10.0 * z[static_cast<std::size_t>(i)]);
    } else {
      parts.treatment_time.emplace_back(std::nullopt);
      parts.condition_value.emplace_back(std::nullopt);
    }
    for (Index kc = 0; kc < k_cov; ++kc) {
      const double phase = c.covariate_process == CovariateProcess::kSeasonal ? 2.0 * std::numbers::pi * s.uniform() : 0.0;
      for (int t = 0; t < t_len; ++t) {
        double x = s.normal();
        if (c.covariate_process == CovariateProcess::kSeasonal) {
          x = std::cos(2.0 * std::numbers::pi * (t + 1) / 23.0 + phase) + 0.3 * x;
        }
        parts.covariates[static_cast<std::size_t>(kc)](i, t) = x;
      }
    }
    for (int t = 0; t < t_len; ++t) noise(i, t) = c.noise_sd * s.normal();
    for (int t = 0; t < t_len; ++t) missing(i, t) = c.missing_rate > 0.0 && s.uniform() < c.missing_rate;
  }

  truth.low_rank = Grid::Constant(n, t_len, c.intercept);
  truth.low_rank.colwise() += truth.unit_effects;
  truth.low_rank += truth.loadings * truth.factors.transpose();
  truth.seasonal = Grid::Zero(n, t_len);
  for (int k = 0; k < r; ++k) {
    if (c.factors[static_cast<std::size_t>(k)].type == FactorKind::Type::kSeasonal) {
      truth.seasonal += truth.loadings.col(k) * truth.factors.col(k).transpose();
    }
  }
  truth.covariate_fit = Grid::Zero(n, t_len);
  for (Index kc = 0; kc < k_cov; ++kc) truth.covariate_fit += truth.beta(kc) * parts.covariates[static_cast<std::size_t>(kc)];

  // Realized per-unit effect levels.
  std::vector<std::string> treated_ids;
  std::vector<double> treated_cond;
  for (int i = c.n_control; i < n; ++i) {
    treated_ids.push_back(parts.unit_ids[static_cast<std::size_t>(i)]);
    treated_cond.push_back(*parts.condition_value[static_cast<std::size_t>(i)]);
  }
  std::optional<StrataSpec> groups;
  if (!c.group_levels.empty()) groups = stratify(treated_ids, treated_cond, static_cast<int>(c.group_levels.size()));
  const double rho = c.condition_link;
  truth.effect = Grid::Zero(n, t_len);
  for (int i = c.n_control; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    double level = c.effect.level;
    if (groups) {
      level = c.group_levels[static_cast<std::size_t>(groups->labels[ui - static_cast<std::size_t>(c.n_control)] - 1)];
    } else {
      level *= 1.0 + c.effect_heterogeneity * (rho * z[ui] + std::sqrt(1.0 - rho * rho) * eta[ui]);
    }
    const std::int64_t onset = *parts.treatment_time[ui];
    if (c.era_cut && onset >= *c.era_cut) level *= c.era_multiplier;
    truth.unit_level[ui] = level;
    EffectShape shape = c.effect;
    shape.level = level;
    const int onset_col = static_cast<int>(onset - parts.first_time);
    for (int t = onset_col; t < t_len; ++t) {
      const EffectAt at = effect_at(shape, t - onset_col);
      truth.effect(i, t) = at.offset + (at.seasonal_scale - 1.0) * truth.seasonal(i, t);
    }
  }

  parts.outcome = truth.low_rank + truth.covariate_fit + truth.effect + noise;
  for (Index k = 0; k < parts.outcome.size(); ++k) {
    if (missing.data()[k]) parts.outcome.data()[k] = kMissing;
  }

  if (c.emit_baseline) {
    // Naive comparator: mean of the observed control outcomes in each period.
    Grid base = Grid::Constant(n, t_len, kMissing);
    for (int t = 0; t < t_len; ++t) {
      double sum = 0.0;
      int cnt = 0;
      for (int i = 0; i < c.n_control; ++i) {
        if (!is_missing(parts.outcome(i, t))) {
          sum += parts.outcome(i, t);
          ++cnt;
        }
      }
      if (cnt == 0) continue;
      for (int i = c.n_control; i < n; ++i) base(i, t) = sum / cnt;
    }
    parts.baseline = std::move(base);
  }

  return {PanelDataset(std::move(parts)), std::move(truth)};
}

std::vector<double> true_att(const SimulatedPanel& sim, EventWindow window) {
  const auto& panel = sim.panel;
  std::vector<double> out;
  for (int e : window.event_times()) {
    double sum = 0.0;
    int cnt = 0;
    for (Index row : panel.treated_rows()) {
      const Index c = event_column(panel, row, e);
      if (c < 0 || is_missing(panel.outcome()(row, c))) continue;
      sum += sim.truth.effect(row, c);
      ++cnt;
    }
    out.push_back(cnt > 0 ? sum / cnt : kMissing);
  }
  return out;
}

nlohmann::json ground_truth_json(const SimConfig& c, const SimulatedPanel& sim) {
  const auto& panel = sim.panel;
  const auto& truth = sim.truth;
  nlohmann::json factors = nlohmann::json::array();
  for (int k = 0; k < c.rank(); ++k) {
    const auto& f = c.factors[static_cast<std::size_t>(k)];
    nlohmann::json entry{{"kind", to_string(f.type)}};
    if (f.type == FactorKind::Type::kSeasonal) {
      entry["period"] = f.period;
      entry["phase"] = f.phase;
    }
    entry["values"] = std::vector<double>(truth.factors.col(k).data(), truth.factors.col(k).data() + truth.factors.rows());
    factors.push_back(std::move(entry));
  }
  nlohmann::json units = nlohmann::json::array();
  for (Index i = 0; i < panel.n_units(); ++i) {
    nlohmann::json u{{"unit_id", panel.unit_ids()[static_cast<std::size_t>(i)]},
                     {"unit_effect", truth.unit_effects(i)},
                     {"loadings", std::vector<double>(truth.loadings.cols())}};
    for (Index k = 0; k < truth.loadings.cols(); ++k) u["loadings"][static_cast<std::size_t>(k)] = truth.loadings(i, k);
    if (panel.is_treated(i)) {
      u["treatment_time"] = *panel.treatment_time(i);
      u["effect_level"] = truth.unit_level[static_cast<std::size_t>(i)];
      std::vector<double> delta(static_cast<std::size_t>(panel.n_periods()));
      for (Index t = 0; t < panel.n_periods(); ++t) delta[static_cast<std::size_t>(t)] = truth.effect(i, t);
      u["delta"] = std::move(delta);
    }
    units.push_back(std::move(u));
  }
  return {{"seed", c.seed},
          {"first_time", panel.first_time()},
          {"n_periods", panel.n_periods()},
          {"intercept", c.intercept},
          {"beta", std::vector<double>(c.beta_true)},
          {"effect", {{"shape", to_string(c.effect.type)},
                      {"level", c.effect.level},
                      {"half_life", c.effect.half_life},
                      {"fraction", c.effect.fraction}}},
          {"noise_sd", c.noise_sd},
          {"missing_rate", c.missing_rate},
          {"factors", factors},
          {"units", units}};
}

}  // namespace gsc::sim
