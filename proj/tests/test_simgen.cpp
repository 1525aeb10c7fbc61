#include "doctest.h"

#include "gsc/errors.hpp"
#include "gsc/panel_io.hpp"
#include "gsc/simgen.hpp"

#include <cmath>
#include <sstream>

using namespace gsc;
using namespace gsc::sim;

namespace {

std::string to_csv(const PanelDataset& p) {
  std::ostringstream out;
  write_panel_csv(out, p);
  return out.str();
}

double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k] / n;
    my += y[k] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("noiseless null panel equals the structural part") {
  SimConfig c;
  c.noise_sd = 0.0;
  c.beta_true = {0.4, -0.2};
  const auto sim = generate(c);
  const Grid expect = sim.truth.low_rank + sim.truth.covariate_fit;
  CHECK((sim.panel.outcome() - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sim.truth.effect.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sim.panel.n_controls() == 40);
  CHECK(sim.panel.n_treated() == 20);
  CHECK(sim.panel.covariate_names() == std::vector<std::string>{"x1", "x2"});
}

TEST_CASE("step effect is exact after onset and zero elsewhere") {
  SimConfig c;
  c.effect = {EffectShape::Type::kStep, -0.2};
  c.missing_rate = 0.1;
  const auto sim = generate(c);
  const auto& p = sim.panel;
  for (Index i = 0; i < p.n_units(); ++i) {
    for (Index t = 0; t < p.n_periods(); ++t) {
      const double d = sim.truth.effect(i, t);
      if (p.is_treated(i) && t >= p.onset_column(i)) {
        REQUIRE(d == -0.2);
      } else {
        REQUIRE(d == 0.0);
      }
    }
  }
  for (Index i : p.treated_rows()) {
    CHECK(*p.treatment_time(i) >= c.treatment_earliest);
    CHECK(*p.treatment_time(i) <= c.treatment_latest);
  }
}

TEST_CASE("period-23 seasonality shows in the control mean autocorrelation") {
  SimConfig c;
  c.n_control = 60;
  c.factors = {FactorKind{FactorKind::Type::kSeasonal, 23.0, 0.0}};
  c.seed = 20261014;
  const auto sim = generate(c);
  const auto& y = sim.panel.outcome();
  Eigen::VectorXd m = y.topRows(sim.panel.n_controls()).colwise().mean().transpose();
  m.array() -= m.mean();
  int best = 0;
  double best_acf = -2.0;
  // Skip short lags, where a smooth series is trivially autocorrelated.
  for (int lag = 12; lag <= 40; ++lag) {
    const double acf = m.head(c.n_periods - lag).dot(m.tail(c.n_periods - lag)) / m.squaredNorm();
    if (acf > best_acf) {
      best_acf = acf;
      best = lag;
    }
  }
  CHECK(std::abs(best - 23) <= 1);
}

TEST_CASE("effect profiles") {
  CHECK(effect_at({EffectShape::Type::kDecaying, -0.2, 10.0}, 10).offset == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(effect_at({EffectShape::Type::kDecaying, -0.2, 10.0}, 0).offset == -0.2);
  for (int e : {0, 1, 7, 100}) CHECK(effect_at({EffectShape::Type::kPermanentShift, -0.3}, e).offset == -0.3);
  CHECK(effect_at({EffectShape::Type::kStep, -0.3}, -1).offset == 0.0);
  const std::vector<int> times{-2, -1, 0, 5};
  const auto prof = effect_profile({EffectShape::Type::kCycleDamping, 0.0, 1.0, 0.5}, times);
  CHECK(prof[1].seasonal_scale == 1.0);
  CHECK(prof[2].seasonal_scale == 0.5);
  CHECK(prof[3].offset == 0.0);
}

TEST_CASE("cycle damping halves the seasonal amplitude after onset") {
  SimConfig c;
  c.factors = {FactorKind{FactorKind::Type::kSeasonal, 23.0, 0.0}};
  c.effect = {EffectShape::Type::kCycleDamping, 0.0, 1.0, 0.5};
  const auto sim = generate(c);
  const auto& p = sim.panel;
  for (Index i : p.treated_rows()) {
    const Index on = p.onset_column(i);
    // True seasonal component of the treated series = seasonal + effect.
    const Eigen::RowVectorXd season = sim.truth.seasonal.row(i) + sim.truth.effect.row(i);
    const double pre_amp = season.head(on).cwiseAbs().maxCoeff();
    const double post_amp = season.tail(p.n_periods() - on).cwiseAbs().maxCoeff();
    const double full_amp = sim.truth.seasonal.row(i).tail(p.n_periods() - on).cwiseAbs().maxCoeff();
    CHECK(post_amp == doctest::Approx(0.5 * full_amp).epsilon(1e-12));
    CHECK(pre_amp == doctest::Approx(full_amp).epsilon(0.02));
  }
}

TEST_CASE("generation is deterministic and unit streams are independent") {
  SimConfig c;
  c.missing_rate = 0.1;
  c.beta_true = {0.3};
  c.factors = {FactorKind{}, FactorKind{FactorKind::Type::kSmoothRandomWalk}};
  c.effect = {EffectShape::Type::kStep, -0.2};
  const auto a = generate(c), b = generate(c);
  CHECK(to_csv(a.panel) == to_csv(b.panel));
  CHECK(ground_truth_json(c, a).dump() == ground_truth_json(c, b).dump());

  SimConfig more = c;
  more.n_control += 5;
  const auto m = generate(more);
  for (Index j = 0; j < c.n_treated; ++j) {
    const Index ra = c.n_control + j, rm = more.n_control + j;
    CHECK(a.panel.treatment_time(ra) == m.panel.treatment_time(rm));
    CHECK((a.truth.loadings.row(ra).array() == m.truth.loadings.row(rm).array()).all());
  }
  SimConfig other = c;
  other.seed = 2;
  CHECK(to_csv(generate(other).panel) != to_csv(a.panel));
}

TEST_CASE("noise and missingness marginals") {
  SimConfig c;
  c.noise_sd = 0.05;
  c.missing_rate = 0.2;
  c.n_periods = 120;
  const auto sim = generate(c);
  const auto& y = sim.panel.outcome();
  const Grid resid = y - sim.truth.low_rank - sim.truth.covariate_fit - sim.truth.effect;
  double ss = 0;
  Index n = 0;
  for (Index k = 0; k < y.size(); ++k) {
    if (is_missing(y.data()[k])) continue;
    ss += resid.data()[k] * resid.data()[k];
    ++n;
  }
  CHECK(std::abs(std::sqrt(ss / n) / c.noise_sd - 1.0) < 0.1);
  const double miss = static_cast<double>(y.array().isNaN().count()) / static_cast<double>(y.size());
  CHECK(std::abs(miss - c.missing_rate) < 0.02);
}

TEST_CASE("condition link") {
  SimConfig c;
  c.n_treated = 80;
  c.effect = {EffectShape::Type::kStep, -0.2};
  c.effect_heterogeneity = 0.5;
  std::vector<double> cond, mag;
  const auto collect = [&](const SimulatedPanel& sim) {
    cond.clear();
    mag.clear();
    for (Index i : sim.panel.treated_rows()) {
      cond.push_back(*sim.panel.condition_value(i));
      mag.push_back(std::abs(sim.truth.unit_level[static_cast<std::size_t>(i)]));
    }
  };
  collect(generate(c));
  CHECK(std::abs(correlation(cond, mag)) <= 0.15);
  c.condition_link = 0.9;
  collect(generate(c));
  CHECK(correlation(cond, mag) > 0.6);
}

TEST_CASE("group levels follow condition quartiles") {
  SimConfig c;
  c.n_treated = 40;
  c.group_levels = {-0.3, -0.1};
  c.effect = {EffectShape::Type::kStep, 0.0};
  const auto sim = generate(c);
  std::vector<double> low, high;
  for (Index i : sim.panel.treated_rows()) {
    const double lvl = sim.truth.unit_level[static_cast<std::size_t>(i)];
    CHECK((lvl == -0.3 || lvl == -0.1));
    (lvl == -0.3 ? low : high).push_back(*sim.panel.condition_value(i));
  }
  CHECK(low.size() == 20);
  CHECK(*std::max_element(low.begin(), low.end()) <= *std::min_element(high.begin(), high.end()));
}

TEST_CASE("era multiplier scales later onsets") {
  SimConfig c;
  c.effect = {EffectShape::Type::kStep, -0.1};
  c.era_cut = 60;
  c.era_multiplier = 2.0;
  const auto sim = generate(c);
  for (Index i : sim.panel.treated_rows()) {
    const double want = *sim.panel.treatment_time(i) >= 60 ? -0.2 : -0.1;
    CHECK(sim.truth.unit_level[static_cast<std::size_t>(i)] == doctest::Approx(want));
  }
}

TEST_CASE("baseline is the observed control mean") {
  SimConfig c;
  c.missing_rate = 0.1;
  const auto sim = generate(c);
  const auto& p = sim.panel;
  REQUIRE(p.baseline().has_value());
  for (Index t = 0; t < p.n_periods(); t += 7) {
    double s = 0;
    int n = 0;
    for (Index i = 0; i < p.n_controls(); ++i) {
      if (!is_missing(p.outcome()(i, t))) {
        s += p.outcome()(i, t);
        ++n;
      }
    }
    CHECK((*p.baseline())(p.n_controls(), t) == doctest::Approx(s / n).epsilon(1e-14));
    CHECK(is_missing((*p.baseline())(0, t)));
  }
}

TEST_CASE("csv round trip of a generated panel") {
  SimConfig c;
  c.missing_rate = 0.15;
  c.beta_true = {0.2};
  const auto sim = generate(c);
  std::stringstream buf;
  write_panel_csv(buf, sim.panel);
  const auto back = read_panel_csv(buf);
  CHECK(to_csv(back) == to_csv(sim.panel));
  const auto gt = ground_truth_json(c, sim);
  CHECK(gt["units"].size() == 60);
  CHECK(gt["units"][45]["delta"].size() == 120);
}

TEST_CASE("invalid configs name the field") {
  const auto field_of = [](SimConfig c) -> std::string {
    try {
      validate(c);
    } catch (const ValidationError& e) {
      return e.what();
    }
    return "";
  };
  SimConfig c;
  c.factors.clear();
  CHECK(field_of(c).find("'factors'") != std::string::npos);
  c = SimConfig{};
  c.noise_sd = -1;
  CHECK(field_of(c).find("'noise_sd'") != std::string::npos);
  c = SimConfig{};
  c.missing_rate = 1.0;
  CHECK(field_of(c).find("'missing_rate'") != std::string::npos);
  c = SimConfig{};
  c.treatment_latest = 500;
  CHECK(field_of(c).find("'treatment_window'") != std::string::npos);
  CHECK(field_of(SimConfig{}).empty());
}
