#include "run_config.hpp"

#include "gsc/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace gsc::cli {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ValidationError("config field '" + field + "': " + why);
}

void allow_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> keys) {
  if (!node.IsMap()) fail(where.empty() ? "<root>" : where, "expected a mapping");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(where.empty() ? key : where + "." + key, "unknown key");
  }
}

template <typename T>
T as(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(field, "has the wrong type");
  }
}

template <typename T>
void read(const YAML::Node& parent, const char* key, const std::string& where, T& target) {
  if (const auto node = parent[key]) target = as<T>(node, where + "." + key);
}

template <typename T>
void read(const YAML::Node& parent, const char* key, const std::string& where, std::optional<T>& target) {
  if (const auto node = parent[key]) target = as<T>(node, where + "." + key);
}

sim::FactorKind parse_factor(const YAML::Node& node, const std::string& where) {
  allow_keys(node, where, {"kind", "period", "phase"});
  sim::FactorKind f;
  if (!node["kind"]) fail(where + ".kind", "required");
  const auto kind = as<std::string>(node["kind"], where + ".kind");
  if (kind == "seasonal") {
    f.type = sim::FactorKind::Type::kSeasonal;
  } else if (kind == "linear_trend") {
    f.type = sim::FactorKind::Type::kLinearTrend;
  } else if (kind == "smooth_random_walk") {
    f.type = sim::FactorKind::Type::kSmoothRandomWalk;
  } else {
    fail(where + ".kind", "expected seasonal, linear_trend or smooth_random_walk");
  }
  read(node, "period", where, f.period);
  read(node, "phase", where, f.phase);
  return f;
}

sim::EffectShape parse_effect(const YAML::Node& node, const std::string& where) {
  allow_keys(node, where, {"shape", "level", "half_life", "fraction"});
  sim::EffectShape e;
  if (node["shape"]) {
    const auto shape = as<std::string>(node["shape"], where + ".shape");
    if (shape == "none") {
      e.type = sim::EffectShape::Type::kNone;
    } else if (shape == "step") {
      e.type = sim::EffectShape::Type::kStep;
    } else if (shape == "decaying") {
      e.type = sim::EffectShape::Type::kDecaying;
    } else if (shape == "permanent_shift") {
      e.type = sim::EffectShape::Type::kPermanentShift;
    } else if (shape == "cycle_damping") {
      e.type = sim::EffectShape::Type::kCycleDamping;
    } else {
      fail(where + ".shape", "expected none, step, decaying, permanent_shift or cycle_damping");
    }
  }
  read(node, "level", where, e.level);
  read(node, "half_life", where, e.half_life);
  read(node, "fraction", where, e.fraction);
  return e;
}

sim::SimConfig parse_simulate(const YAML::Node& node) {
  const std::string w = "simulate";
  allow_keys(node, w,
             {"n_control", "n_treated", "n_periods", "factors", "intercept", "unit_effect_sd", "loading_scale",
              "loading_shift_treated", "beta", "covariate_process", "noise_sd", "missing_rate", "effect",
              "treatment_window", "condition_link", "effect_heterogeneity", "group_levels", "era_cut",
              "era_multiplier", "emit_baseline", "seed"});
  sim::SimConfig c;
  if (!node["n_periods"]) fail(w + ".n_periods", "required");
  read(node, "n_periods", w, c.n_periods);
  read(node, "n_control", w, c.n_control);
  read(node, "n_treated", w, c.n_treated);
  if (const auto f = node["factors"]) {
    if (!f.IsSequence()) fail(w + ".factors", "expected a list");
    c.factors.clear();
    for (std::size_t k = 0; k < f.size(); ++k) c.factors.push_back(parse_factor(f[k], w + ".factors[" + std::to_string(k) + "]"));
  }
  read(node, "intercept", w, c.intercept);
  read(node, "unit_effect_sd", w, c.unit_effect_sd);
  read(node, "loading_scale", w, c.loading_scale);
  read(node, "loading_shift_treated", w, c.loading_shift_treated);
  read(node, "beta", w, c.beta_true);
  if (const auto p = node["covariate_process"]) {
    const auto s = as<std::string>(p, w + ".covariate_process");
    if (s == "iid_normal") {
      c.covariate_process = sim::CovariateProcess::kIidNormal;
    } else if (s == "seasonal") {
      c.covariate_process = sim::CovariateProcess::kSeasonal;
    } else {
      fail(w + ".covariate_process", "expected iid_normal or seasonal");
    }
  }
  read(node, "noise_sd", w, c.noise_sd);
  read(node, "missing_rate", w, c.missing_rate);
  if (const auto e = node["effect"]) c.effect = parse_effect(e, w + ".effect");
  // Default onset window: the middle third of the calendar.
  c.treatment_earliest = std::max(2, (c.n_periods + 2) / 3);
  c.treatment_latest = std::max(c.treatment_earliest, (2 * c.n_periods + 2) / 3);
  if (const auto tw = node["treatment_window"]) {
    const auto v = as<std::vector<int>>(tw, w + ".treatment_window");
    if (v.size() != 2) fail(w + ".treatment_window", "expected [earliest, latest]");
    c.treatment_earliest = v[0];
    c.treatment_latest = v[1];
  }
  read(node, "condition_link", w, c.condition_link);
  read(node, "effect_heterogeneity", w, c.effect_heterogeneity);
  read(node, "group_levels", w, c.group_levels);
  read(node, "era_cut", w, c.era_cut);
  read(node, "era_multiplier", w, c.era_multiplier);
  read(node, "emit_baseline", w, c.emit_baseline);
  return c;
}

nlohmann::json sim_json(const sim::SimConfig& c) {
  nlohmann::json factors = nlohmann::json::array();
  for (const auto& f : c.factors) {
    factors.push_back({{"kind", sim::to_string(f.type)}, {"period", f.period}, {"phase", f.phase}});
  }
  nlohmann::json j{{"n_control", c.n_control},
                   {"n_treated", c.n_treated},
                   {"n_periods", c.n_periods},
                   {"factors", factors},
                   {"intercept", c.intercept},
                   {"unit_effect_sd", c.unit_effect_sd},
                   {"loading_scale", c.loading_scale},
                   {"loading_shift_treated", c.loading_shift_treated},
                   {"beta", c.beta_true},
                   {"covariate_process", c.covariate_process == sim::CovariateProcess::kSeasonal ? "seasonal" : "iid_normal"},
                   {"noise_sd", c.noise_sd},
                   {"missing_rate", c.missing_rate},
                   {"effect", {{"shape", sim::to_string(c.effect.type)},
                               {"level", c.effect.level},
                               {"half_life", c.effect.half_life},
                               {"fraction", c.effect.fraction}}},
                   {"treatment_window", {c.treatment_earliest, c.treatment_latest}},
                   {"condition_link", c.condition_link},
                   {"effect_heterogeneity", c.effect_heterogeneity},
                   {"group_levels", c.group_levels},
                   {"era_multiplier", c.era_multiplier},
                   {"emit_baseline", c.emit_baseline},
                   {"seed", c.seed}};
  j["era_cut"] = c.era_cut ? nlohmann::json(*c.era_cut) : nlohmann::json(nullptr);
  return j;
}

template <typename T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

Index RunConfig::tau_periods() const {
  if (estimate.tau) return *estimate.tau;
  const double years = estimate.tau_years.value_or(5.0);
  return static_cast<Index>(std::ceil(years * 365.25 / data.cadence_days - 1e-9));
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = opt(seed);
  j["simulate_seed"] = opt(simulate_seed);
  j["simulate"] = simulate ? sim_json(*simulate) : nlohmann::json(nullptr);
  j["data"] = {{"input", data.input ? nlohmann::json(data.input->generic_string()) : nlohmann::json(nullptr)},
               {"cadence_days", data.cadence_days},
               {"outcome_column", data.outcome_column},
               {"condition_column", data.condition_column},
               {"baseline_column", data.baseline_column},
               {"covariates", opt(data.covariates)},
               {"use_covariates", data.use_covariates}};
  j["estimate"] = {{"tau_periods", tau_periods()},
                   {"window", {{"pre", estimate.window.pre}, {"post", estimate.window.post}}},
                   {"lambda", estimate.lambda ? nlohmann::json(*estimate.lambda) : nlohmann::json("cv")},
                   {"grid_points", estimate.grid_points},
                   {"folds", estimate.folds},
                   {"demean", estimate.completion.demean_two_way},
                   {"tolerance", estimate.completion.tolerance},
                   {"max_iter", estimate.completion.max_iter}};
  j["effects"] = {{"strata_groups", effects.strata_groups},
                  {"cumulative_from", effects.cumulative_from},
                  {"bootstrap_replicates", effects.bootstrap_replicates},
                  {"era_cut", opt(effects.era_cut)}};
  j["diagnose"] = {{"placebo_shift", opt(diagnose.placebo_shift)},
                   {"placebo_replicates", opt(diagnose.placebo_replicates)}};
  return j;
}

RunConfig parse_run_config(const std::string& yaml_text, const std::filesystem::path& source) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ValidationError("config: YAML syntax error: " + std::string(e.what()));
  }
  RunConfig cfg;
  cfg.source = source;
  if (root.IsNull()) return cfg;
  allow_keys(root, "", {"seed", "simulate", "data", "estimate", "effects", "diagnose"});
  read(root, "seed", "", cfg.seed);
  if (const auto s = root["simulate"]) {
    cfg.simulate = parse_simulate(s);
    read(s, "seed", "simulate", cfg.simulate_seed);
  }

  if (const auto d = root["data"]) {
    const std::string w = "data";
    allow_keys(d, w, {"input", "cadence_days", "outcome_column", "condition_column", "baseline_column", "covariates",
                      "use_covariates"});
    if (d["input"]) cfg.data.input = as<std::string>(d["input"], w + ".input");
    read(d, "cadence_days", w, cfg.data.cadence_days);
    read(d, "outcome_column", w, cfg.data.outcome_column);
    read(d, "condition_column", w, cfg.data.condition_column);
    read(d, "baseline_column", w, cfg.data.baseline_column);
    read(d, "covariates", w, cfg.data.covariates);
    read(d, "use_covariates", w, cfg.data.use_covariates);
    if (!(cfg.data.cadence_days > 0.0)) fail(w + ".cadence_days", "must be positive");
  }

  if (const auto e = root["estimate"]) {
    const std::string w = "estimate";
    allow_keys(e, w, {"tau", "tau_years", "window", "lambda", "grid_points", "folds", "demean", "tolerance", "max_iter"});
    read(e, "tau", w, cfg.estimate.tau);
    read(e, "tau_years", w, cfg.estimate.tau_years);
    if (cfg.estimate.tau && cfg.estimate.tau_years) fail(w + ".tau", "give either tau or tau_years, not both");
    if (cfg.estimate.tau && *cfg.estimate.tau < 1) fail(w + ".tau", "must be at least 1");
    if (cfg.estimate.tau_years && !(*cfg.estimate.tau_years > 0.0)) fail(w + ".tau_years", "must be positive");
    if (const auto win = e["window"]) {
      allow_keys(win, w + ".window", {"pre", "post"});
      read(win, "pre", w + ".window", cfg.estimate.window.pre);
      read(win, "post", w + ".window", cfg.estimate.window.post);
      if (cfg.estimate.window.pre < 1) fail(w + ".window.pre", "must be at least 1");
      if (cfg.estimate.window.post < 1) fail(w + ".window.post", "must be at least 1");
    }
    if (const auto l = e["lambda"]) {
      if (l.IsScalar() && l.Scalar() == "cv") {
        cfg.estimate.lambda.reset();
      } else {
        cfg.estimate.lambda = as<double>(l, w + ".lambda");
        if (!(*cfg.estimate.lambda >= 0.0)) fail(w + ".lambda", "must be nonnegative or \"cv\"");
      }
    }
    read(e, "grid_points", w, cfg.estimate.grid_points);
    read(e, "folds", w, cfg.estimate.folds);
    read(e, "demean", w, cfg.estimate.completion.demean_two_way);
    read(e, "tolerance", w, cfg.estimate.completion.tolerance);
    read(e, "max_iter", w, cfg.estimate.completion.max_iter);
    if (cfg.estimate.grid_points < 2) fail(w + ".grid_points", "must be at least 2");
    if (cfg.estimate.folds < 2) fail(w + ".folds", "must be at least 2");
    if (cfg.estimate.completion.max_iter < 1) fail(w + ".max_iter", "must be at least 1");
  }

  if (const auto e = root["effects"]) {
    const std::string w = "effects";
    allow_keys(e, w, {"strata_groups", "cumulative_from", "bootstrap_replicates", "era_cut"});
    read(e, "strata_groups", w, cfg.effects.strata_groups);
    read(e, "cumulative_from", w, cfg.effects.cumulative_from);
    read(e, "bootstrap_replicates", w, cfg.effects.bootstrap_replicates);
    read(e, "era_cut", w, cfg.effects.era_cut);
    if (cfg.effects.strata_groups < 1) fail(w + ".strata_groups", "must be at least 1");
    if (cfg.effects.bootstrap_replicates != 0 && cfg.effects.bootstrap_replicates < 2) {
      fail(w + ".bootstrap_replicates", "must be 0 (off) or at least 2");
    }
  }

  if (const auto d = root["diagnose"]) {
    const std::string w = "diagnose";
    allow_keys(d, w, {"placebo_shift", "placebo_replicates"});
    read(d, "placebo_shift", w, cfg.diagnose.placebo_shift);
    read(d, "placebo_replicates", w, cfg.diagnose.placebo_replicates);
    if (cfg.diagnose.placebo_shift && *cfg.diagnose.placebo_shift < 1) fail(w + ".placebo_shift", "must be at least 1");
    if (cfg.diagnose.placebo_replicates && *cfg.diagnose.placebo_replicates < 2) {
      fail(w + ".placebo_replicates", "must be at least 2");
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path);
}

}  // namespace gsc::cli
