#include "commands.hpp"

#include "gsc/diagnostics.hpp"
#include "gsc/effects.hpp"
#include "gsc/errors.hpp"
#include "gsc/estimator.hpp"
#include "gsc/panel_io.hpp"
#include "gsc/simgen.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>

namespace gsc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Files written by one command, relative to the output directory.
class OutputSet {
 public:
  explicit OutputSet(fs::path root) : root_(std::move(root)) {}

  std::ofstream open(const std::string& rel) {
    const fs::path full = root_ / rel;
    fs::create_directories(full.parent_path());
    std::ofstream out(full, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + full.string());
    files_.push_back(rel);
    return out;
  }

  void write_json(const std::string& rel, const json& j) { open(rel) << j.dump(2) << '\n'; }

  json digests() const {
    json d = json::object();
    for (const auto& rel : files_) d[rel] = sha256_file(root_ / rel);
    return d;
  }

  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::vector<std::string> files_;
};

std::uint64_t resolved_seed(const RunConfig& cfg, const GlobalOptions& opts) {
  if (opts.seed) return *opts.seed;
  return cfg.seed.value_or(1);
}

void record_manifest(const OutputSet& outputs, const std::string& command, const RunConfig& cfg,
                     const GlobalOptions& opts, json inputs, json extra = json::object()) {
  const fs::path path = outputs.root() / "manifest.json";
  json manifest = json::object();
  if (fs::exists(path)) {
    std::ifstream in(path);
    try {
      manifest = json::parse(in);
    } catch (const json::exception&) {
      manifest = json::object();
    }
  }
  manifest["tool"] = "gsc";
  json entry{{"config", cfg.to_json()},
             {"config_sha256", cfg.source.empty() ? json(nullptr) : json(sha256_file(cfg.source))},
             {"seed", resolved_seed(cfg, opts)},
             {"bootstrap_recv", opts.bootstrap_recv},
             {"inputs", std::move(inputs)},
             {"outputs", outputs.digests()}};
  for (auto& [k, v] : extra.items()) entry[k] = v;
  manifest["commands"][command] = std::move(entry);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << manifest.dump(2) << '\n';
}

std::string num(double v) { return format_number(v); }

fs::path input_path(const RunConfig& cfg, const GlobalOptions& opts) {
  if (!cfg.data.input) return opts.out / "panel.csv";
  if (cfg.data.input->is_absolute() || cfg.source.empty()) return *cfg.data.input;
  return cfg.source.parent_path() / *cfg.data.input;
}

struct LoadedData {
  PanelDataset panel;
  std::vector<std::string> dropped;
  fs::path path;
};

LoadedData load_data(const RunConfig& cfg, const GlobalOptions& opts) {
  const fs::path path = input_path(cfg, opts);
  if (!fs::exists(path)) throw ValidationError("data.input: file not found: " + path.string());
  CsvOptions csv;
  csv.cadence_days = cfg.data.cadence_days;
  csv.outcome_column = cfg.data.outcome_column;
  csv.condition_column = cfg.data.condition_column;
  csv.baseline_column = cfg.data.baseline_column;
  PanelDataset panel = read_panel_csv(path, csv);

  if (cfg.data.covariates) {
    PanelParts parts = panel.parts();
    PanelParts kept = parts;
    kept.covariate_names.clear();
    kept.covariates.clear();
    for (const auto& name : *cfg.data.covariates) {
      const auto it = std::find(parts.covariate_names.begin(), parts.covariate_names.end(), name);
      if (it == parts.covariate_names.end()) {
        throw ValidationError("config field 'data.covariates': input has no column cov_" + name);
      }
      kept.covariate_names.push_back(name);
      kept.covariates.push_back(parts.covariates[static_cast<std::size_t>(it - parts.covariate_names.begin())]);
    }
    panel = PanelDataset(std::move(kept));
  }

  const Index tau = cfg.tau_periods();
  if (tau >= panel.n_periods()) {
    std::ostringstream msg;
    msg << "config field 'estimate.tau': " << tau << " pre-periods requested but the panel spans only "
        << panel.n_periods() << " periods";
    throw ValidationError(msg.str());
  }
  const auto& win = cfg.estimate.window;
  if (win.pre >= panel.n_periods() || win.post > panel.n_periods()) {
    std::ostringstream msg;
    msg << "config field 'estimate.window': " << win.pre << " pre / " << win.post
        << " post periods do not fit a panel of " << panel.n_periods() << " periods";
    throw ValidationError(msg.str());
  }
  FilterResult filtered = filter_min_pre_periods(panel, tau);
  return {std::move(filtered.panel), std::move(filtered.dropped), path};
}

FitConfig make_fit_config(const RunConfig& cfg, const GlobalOptions& opts) {
  FitConfig f;
  f.lambda = cfg.estimate.lambda;
  f.grid_points = cfg.estimate.grid_points;
  f.folds = cfg.estimate.folds;
  f.cv_seed = resolved_seed(cfg, opts);
  f.completion = cfg.estimate.completion;
  f.use_covariates = cfg.data.use_covariates;
  return f;
}

void write_predictions(std::ostream& out, const PanelDataset& panel, const FitResult& fit) {
  out << "unit_id,time,observed,counterfactual,fitted\n";
  for (Index i = 0; i < panel.n_units(); ++i) {
    for (Index c = 0; c < panel.n_periods(); ++c) {
      out << panel.unit_ids()[static_cast<std::size_t>(i)] << ',' << panel.time_at(c) << ','
          << num(panel.outcome()(i, c)) << ',' << num(fit.counterfactual(i, c)) << ','
          << (fit.mask.cells(i, c) ? 1 : 0) << '\n';
    }
  }
}

json model_json(const PanelDataset& panel, const FitResult& fit, const std::vector<std::string>& dropped, Index tau) {
  const auto& m = fit.model;
  json beta = json::object();
  for (Index k = 0; k < m.beta.size(); ++k) beta[panel.covariate_names()[static_cast<std::size_t>(k)]] = m.beta(k);
  std::vector<std::string> warnings = m.warnings;
  if (fit.cv) warnings.insert(warnings.end(), fit.cv->warnings.begin(), fit.cv->warnings.end());
  return {{"lambda", m.lambda},
          {"lambda_source", fit.cv ? "cv" : "fixed"},
          {"effective_rank", m.effective_rank},
          {"iterations", m.iterations},
          {"converged", m.converged},
          {"stalled", m.stalled},
          {"final_delta", m.final_delta},
          {"grand_mean", m.grand_mean},
          {"beta", beta},
          {"n_units", panel.n_units()},
          {"n_controls", panel.n_controls()},
          {"n_treated", panel.n_treated()},
          {"n_periods", panel.n_periods()},
          {"first_time", panel.first_time()},
          {"observed_cells", fit.mask.count()},
          {"tau_periods", tau},
          {"dropped_units", dropped},
          {"warnings", warnings}};
}

/// Effect tables for one panel under `dir` (relative to the output root).
json write_effect_tables(OutputSet& outputs, const std::string& dir, const PanelDataset& panel,
                         const Grid& counterfactual, double lambda, const RunConfig& cfg, const GlobalOptions& opts,
                         std::ostream& log) {
  const EventWindow window = cfg.estimate.window;
  EffectSeries eff = estimate_effects(panel, counterfactual, window);
  json summary{{"n_treated", panel.n_treated()}, {"lambda", lambda}};

  if (cfg.effects.bootstrap_replicates > 0) {
    FitConfig fc = make_fit_config(cfg, opts);
    fc.lambda = lambda;
    BootstrapOptions bo;
    bo.replicates = cfg.effects.bootstrap_replicates;
    bo.seed = resolved_seed(cfg, opts);
    bo.reselect_lambda = opts.bootstrap_recv;
    bo.threads = opts.threads;
    const BootstrapResult boot = bootstrap_se(panel, fc, window, bo);
    attach_bootstrap(eff, boot);
    summary["bootstrap"] = {{"replicates", bo.replicates}, {"dropped", boot.dropped}, {"warnings", boot.warnings}};
    for (const auto& w : boot.warnings) log << "warning: " << w << '\n';
  }

  const auto at = [](const std::vector<double>& v, std::size_t k) { return v.empty() ? kMissing : v[k]; };
  {
    auto out = outputs.open(dir + "effects.csv");
    out << "event_time,att,se,ci_lo,ci_hi,n_units,att_pct,att_pct_pre\n";
    for (std::size_t k = 0; k < eff.event_times.size(); ++k) {
      out << eff.event_times[k] << ',' << num(eff.att[k]) << ',' << num(at(eff.se, k)) << ',' << num(at(eff.ci_lo, k))
          << ',' << num(at(eff.ci_hi, k)) << ',' << eff.n_units[k] << ',' << num(eff.att_pct[k]) << ','
          << num(eff.att_pct_pre[k]) << '\n';
    }
  }
  {
    auto out = outputs.open(dir + "unit_effects.csv");
    out << "unit_id,event_time,observed,counterfactual,delta\n";
    for (std::size_t u = 0; u < eff.unit_ids.size(); ++u) {
      const auto r = static_cast<Index>(u);
      for (std::size_t k = 0; k < eff.event_times.size(); ++k) {
        const auto e = static_cast<Index>(k);
        if (is_missing(eff.counterfactual(r, e))) continue;  // outside the calendar
        out << eff.unit_ids[u] << ',' << eff.event_times[k] << ',' << num(eff.observed(r, e)) << ','
            << num(eff.counterfactual(r, e)) << ',' << num(eff.delta(r, e)) << '\n';
      }
    }
  }
  const int from = std::clamp(cfg.effects.cumulative_from, -window.pre, window.post - 1);
  const CumulativeSeries cum = cumulative(eff, from);
  {
    auto out = outputs.open(dir + "cumulative.csv");
    out << "event_time,cumulative_att,absent\n";
    for (std::size_t k = 0; k < cum.event_times.size(); ++k) {
      out << cum.event_times[k] << ',' << num(cum.value[k]) << ',' << (cum.absent[k] ? 1 : 0) << '\n';
    }
  }
  summary["cumulative_from"] = from;
  summary["cumulative_total"] = cum.value.empty() ? json(nullptr) : json(cum.value.back());

  double post_sum = 0.0;
  int post_n = 0;
  for (std::size_t k = 0; k < eff.event_times.size(); ++k) {
    if (eff.event_times[k] >= 0 && !is_missing(eff.att[k])) {
      post_sum += eff.att[k];
      ++post_n;
    }
  }
  summary["mean_post_att"] = post_n > 0 ? json(post_sum / post_n) : json(nullptr);

  bool have_conditions = true;
  for (Index row : panel.treated_rows()) have_conditions = have_conditions && panel.condition_value(row).has_value();
  if (have_conditions) {
    const StrataSpec strata = stratify(panel, cfg.effects.strata_groups);
    const auto groups = catt(eff, strata);
    auto out = outputs.open(dir + "catt.csv");
    out << "group,event_time,att,n_units\n";
    for (const auto& g : groups) {
      for (std::size_t k = 0; k < eff.event_times.size(); ++k) {
        out << g.label << ',' << eff.event_times[k] << ',' << num(g.att[k]) << ',' << g.n_units[k] << '\n';
      }
    }
    json units = json::array();
    for (std::size_t u = 0; u < strata.unit_ids.size(); ++u) {
      const auto row = *panel.row_of(strata.unit_ids[u]);
      units.push_back({{"unit_id", strata.unit_ids[u]},
                       {"condition_value", *panel.condition_value(row)},
                       {"group", strata.labels[u]}});
    }
    outputs.write_json(dir + "strata.json",
                       {{"groups", strata.groups}, {"breakpoints", strata.breakpoints}, {"units", units}});
  } else {
    log << "note: " << dir << "catt.csv skipped (some treated units lack a condition value)\n";
  }
  return summary;
}

json write_fit_report(OutputSet& outputs, const PanelDataset& panel, const Grid& counterfactual, std::ostream& log) {
  const FitReport report = pre_fit_report(panel, counterfactual, panel.baseline());
  for (const auto& w : report.warnings) log << "warning: " << w << '\n';
  const json j = to_json(report);
  outputs.write_json("fit_report.json", j);
  auto out = outputs.open("fit_report.csv");
  write_fit_csv(out, report);
  return j;
}

/// Counterfactual grid and lambda from a fitted run directory.
struct FittedRun {
  Grid counterfactual;
  double lambda = 0.0;
};

FittedRun load_fitted_run(const PanelDataset& panel, const fs::path& out) {
  const fs::path pred = out / "predictions.csv", model = out / "model.json";
  if (!fs::exists(pred) || !fs::exists(model)) {
    throw EstimationError("missing fit artifacts in " + out.string() + " (run `gsc fit` first)");
  }
  FittedRun run;
  std::ifstream min(model);
  run.lambda = json::parse(min).at("lambda").get<double>();

  run.counterfactual = Grid::Constant(panel.n_units(), panel.n_periods(), kMissing);
  std::ifstream in(pred);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string id, time, observed, cf;
    std::getline(ss, id, ',');
    std::getline(ss, time, ',');
    std::getline(ss, observed, ',');
    std::getline(ss, cf, ',');
    const auto row = panel.row_of(id);
    const auto col = panel.column_of(std::stoll(time));
    if (!row || !col) continue;  // unit dropped since the fit
    run.counterfactual(*row, *col) = cf.empty() ? kMissing : std::stod(cf);
  }
  for (Index row : panel.treated_rows()) {
    if (run.counterfactual.row(row).array().isNaN().all()) {
      throw EstimationError("predictions.csv has no rows for unit '" + panel.unit_ids()[static_cast<std::size_t>(row)] +
                            "'; refit with the current data section");
    }
  }
  return run;
}

json file_input(const fs::path& p) { return {{"file", p.filename().string()}, {"sha256", sha256_file(p)}}; }

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (in.read(buf.data(), buf.size()) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[k]);
  return hex.str();
}

void cmd_simulate(const RunConfig& cfg, const GlobalOptions& opts, std::ostream& log) {
  if (!cfg.simulate) throw ValidationError("config field 'simulate': required for the simulate command");
  sim::SimConfig sc = *cfg.simulate;
  sc.seed = opts.seed ? *opts.seed : cfg.simulate_seed ? *cfg.simulate_seed : cfg.seed.value_or(1);
  const auto sim = sim::generate(sc);

  OutputSet outputs(opts.out);
  {
    auto out = outputs.open("panel.csv");
    write_panel_csv(out, sim.panel);
  }
  // No manifest here: the panel's digest is recorded by the commands that read it.
  outputs.write_json("ground_truth.json", sim::ground_truth_json(sc, sim));
  log << "simulate: " << sim.panel.n_controls() << " controls, " << sim.panel.n_treated() << " treated, "
      << sim.panel.n_periods() << " periods -> " << opts.out.string() << '\n';
}

void cmd_fit(const RunConfig& cfg, const GlobalOptions& opts, std::ostream& log) {
  const LoadedData data = load_data(cfg, opts);
  const PanelDataset& panel = data.panel;
  if (!data.dropped.empty()) log << "fit: dropped " << data.dropped.size() << " treated units with too few pre-periods\n";
  const FitConfig fc = make_fit_config(cfg, opts);
  const FitResult fit = fit_panel(panel, fc, opts.threads);
  for (const auto& w : fit.model.warnings) log << "warning: " << w << '\n';

  OutputSet outputs(opts.out);
  if (fit.cv) {
    json cv = to_json(*fit.cv);
    cv["warnings"] = fit.cv->warnings;
    outputs.write_json("cv_report.json", cv);
  }
  outputs.write_json("model.json", model_json(panel, fit, data.dropped, cfg.tau_periods()));
  {
    auto out = outputs.open("predictions.csv");
    write_predictions(out, panel, fit);
  }
  json summary{{"effects", write_effect_tables(outputs, "", panel, fit.counterfactual, fit.model.lambda, cfg, opts, log)}};
  write_fit_report(outputs, panel, fit.counterfactual, log);

  if (cfg.effects.era_cut) {
    const auto [early, late] = split_eras(panel, *cfg.effects.era_cut);
    json eras = json::object();
    const std::pair<const char*, const PanelDataset*> parts[] = {{"era_a", &early}, {"era_b", &late}};
    for (const auto& [name, sub] : parts) {
      const FitResult f = fit_panel(*sub, fc, opts.threads);
      const std::string dir = std::string(name) + "/";
      outputs.write_json(dir + "model.json", model_json(*sub, f, {}, cfg.tau_periods()));
      eras[name] = write_effect_tables(outputs, dir, *sub, f.counterfactual, f.model.lambda, cfg, opts, log);
    }
    json cmp{{"era_cut", *cfg.effects.era_cut}, {"era_a", eras["era_a"]}, {"era_b", eras["era_b"]}};
    const json& a = eras["era_a"]["cumulative_total"];
    const json& b = eras["era_b"]["cumulative_total"];
    cmp["cumulative_ratio_b_over_a"] =
        (a.is_number() && b.is_number() && a.get<double>() != 0.0) ? json(b.get<double>() / a.get<double>()) : json(nullptr);
    outputs.write_json("era_comparison.json", cmp);
  }

  record_manifest(outputs, "fit", cfg, opts, {{"panel", file_input(data.path)}}, summary);
  log << "fit: lambda " << fit.model.lambda << ", rank " << fit.model.effective_rank << ", "
      << (fit.model.converged ? "converged" : "not converged") << " -> " << opts.out.string() << '\n';
}

void cmd_effects(const RunConfig& cfg, const GlobalOptions& opts, std::ostream& log) {
  const LoadedData data = load_data(cfg, opts);
  const FittedRun run = load_fitted_run(data.panel, opts.out);
  OutputSet outputs(opts.out);
  json summary{{"effects", write_effect_tables(outputs, "", data.panel, run.counterfactual, run.lambda, cfg, opts, log)}};
  record_manifest(outputs, "effects", cfg, opts,
                  {{"panel", file_input(data.path)}, {"predictions", file_input(opts.out / "predictions.csv")}}, summary);
  log << "effects: written to " << opts.out.string() << '\n';
}

void cmd_diagnose(const RunConfig& cfg, const GlobalOptions& opts, std::ostream& log) {
  const LoadedData data = load_data(cfg, opts);
  const PanelDataset& panel = data.panel;
  const FittedRun run = load_fitted_run(panel, opts.out);
  OutputSet outputs(opts.out);

  // Scatter rows: every non-missing pre-onset cell of a treated unit.
  {
    auto out = outputs.open("scatter.csv");
    out << "unit_id,time,observed,counterfactual,baseline\n";
    for (Index row : panel.treated_rows()) {
      for (Index c = 0; c < panel.onset_column(row); ++c) {
        const double y = panel.outcome()(row, c);
        if (is_missing(y)) continue;
        const double base = panel.baseline() ? (*panel.baseline())(row, c) : kMissing;
        out << panel.unit_ids()[static_cast<std::size_t>(row)] << ',' << panel.time_at(c) << ',' << num(y) << ','
            << num(run.counterfactual(row, c)) << ',' << num(base) << '\n';
      }
    }
  }
  json summary{{"fit_report", write_fit_report(outputs, panel, run.counterfactual, log)}};

  if (cfg.diagnose.placebo_shift) {
    const int shift = *cfg.diagnose.placebo_shift;
    FitConfig fc = make_fit_config(cfg, opts);
    fc.lambda = run.lambda;
    PlaceboResult placebo = placebo_in_time(panel, fc, shift, cfg.estimate.window, cfg.tau_periods(), opts.threads);
    BootstrapOptions bo;
    bo.replicates = cfg.diagnose.placebo_replicates.value_or(cfg.effects.bootstrap_replicates);
    if (bo.replicates < 2) {
      throw ValidationError("config field 'diagnose.placebo_replicates': the placebo check needs at least 2 replicates");
    }
    bo.seed = resolved_seed(cfg, opts);
    bo.reselect_lambda = opts.bootstrap_recv;
    bo.threads = opts.threads;
    const BootstrapResult boot = bootstrap_se(placebo.panel, fc, cfg.estimate.window, bo);
    attach_bootstrap(placebo.effects, boot);
    const auto& eff = placebo.effects;
    int rows = 0, within = 0;
    auto out = outputs.open("placebo_effects.csv");
    out << "event_time,att,se,ci_lo,ci_hi,n_units,within_2se\n";
    for (std::size_t k = 0; k < eff.event_times.size(); ++k) {
      const bool defined = !is_missing(eff.att[k]) && !is_missing(eff.se[k]);
      const bool ok = defined && std::abs(eff.att[k]) < 2.0 * eff.se[k];
      rows += defined ? 1 : 0;
      within += ok ? 1 : 0;
      out << eff.event_times[k] << ',' << num(eff.att[k]) << ',' << num(eff.se[k]) << ',' << num(eff.ci_lo[k]) << ','
          << num(eff.ci_hi[k]) << ',' << eff.n_units[k] << ',' << (ok ? "true" : "false") << '\n';
    }
    summary["placebo"] = {{"shift", shift},
                          {"rows", rows},
                          {"within_2se", within},
                          {"share_within_2se", rows > 0 ? json(static_cast<double>(within) / rows) : json(nullptr)}};
    log << "diagnose: placebo shift " << shift << ", " << within << "/" << rows << " event times within 2 se\n";
  }
  record_manifest(outputs, "diagnose", cfg, opts,
                  {{"panel", file_input(data.path)}, {"predictions", file_input(opts.out / "predictions.csv")}}, summary);
  log << "diagnose: written to " << opts.out.string() << '\n';
}

int run_cli(int argc, char** argv, std::ostream& log) {
  CLI::App app{"Generalized synthetic control: panel matrix completion for treatment effects"};
  app.require_subcommand(1);
  GlobalOptions opts;
  std::uint64_t seed = 0;
  app.add_option("--config", opts.config, "YAML run configuration")->required();
  app.add_option("--out", opts.out, "Output directory (default: out)");
  auto* seed_opt = app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--threads", opts.threads, "Worker threads for CV and bootstrap")->check(CLI::PositiveNumber);
  app.add_flag("--bootstrap-recv", opts.bootstrap_recv, "Re-select lambda by CV inside every bootstrap replicate");
  app.fallthrough();

  using Command = void (*)(const RunConfig&, const GlobalOptions&, std::ostream&);
  const std::pair<const char*, Command> commands[] = {
      {"simulate", cmd_simulate}, {"fit", cmd_fit}, {"effects", cmd_effects}, {"diagnose", cmd_diagnose}};
  const std::map<std::string, const char*> help{
      {"simulate", "Generate a synthetic panel and its ground truth"},
      {"fit", "Fit the completion model and write effects and fit diagnostics"},
      {"effects", "Recompute effect tables from a fitted run directory"},
      {"diagnose", "Pre-period scatter data, fit report and placebo-in-time check"}};
  std::optional<std::int64_t> era_cut;
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name, help.at(name));
    if (std::string(name) == "fit") sub->add_option("--era-cut", era_cut, "Split treated units by onset period (overrides effects.era_cut)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*seed_opt) opts.seed = seed;

  try {
    RunConfig cfg = load_run_config(opts.config);
    if (era_cut) cfg.effects.era_cut = era_cut;
    for (const auto& [name, fn] : commands) {
      if (app.got_subcommand(name)) fn(cfg, opts, log);
    }
    return 0;
  } catch (const ValidationError& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace gsc::cli
