#include "doctest.h"

#include "gsc/errors.hpp"
#include "gsc/panel.hpp"
#include "gsc/panel_io.hpp"
#include "gsc/rng.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <sstream>

using namespace gsc;
using gsc::testing::make_panel;

namespace {

PanelRecord rec(std::string id, std::int64_t t, std::optional<double> y, std::optional<std::int64_t> t0 = std::nullopt) {
  PanelRecord r;
  r.unit_id = std::move(id);
  r.time = t;
  r.outcome = y;
  r.treatment_time = t0;
  return r;
}

}  // namespace

TEST_CASE("load_panel builds dense grids") {
  SUBCASE("dense input") {
    std::vector<PanelRecord> recs{rec("a", 1, 1.0), rec("a", 2, 2.0), rec("a", 3, 3.0),
                                  rec("b", 1, 4.0, 2), rec("b", 2, 5.0, 2), rec("b", 3, 6.0, 2)};
    const auto p = load_panel(recs);
    CHECK(p.n_units() == 2);
    CHECK(p.n_periods() == 3);
    CHECK(p.outcome().array().isNaN().count() == 0);
    CHECK(p.n_controls() == 1);
    CHECK(p.outcome()(1, 2) == 6.0);
  }
  SUBCASE("gap becomes missing") {
    std::vector<PanelRecord> recs{rec("a", 1, 1.0), rec("a", 3, 3.0), rec("b", 1, 4.0, 2), rec("b", 2, 5.0, 2),
                                  rec("b", 3, 6.0, 2)};
    const auto p = load_panel(recs);
    CHECK(is_missing(p.outcome()(*p.row_of("a"), *p.column_of(2))));
    CHECK_FALSE(is_missing(p.outcome()(*p.row_of("a"), *p.column_of(3))));
  }
  SUBCASE("inconsistent treatment time") {
    std::vector<PanelRecord> recs{rec("c", 1, 1.0), rec("a", 1, 1.0, 5), rec("a", 2, 1.0, 6)};
    CHECK_THROWS_AS(load_panel(recs), ValidationError);
  }
  SUBCASE("duplicate pair names the pair") {
    std::vector<PanelRecord> recs{rec("c", 1, 1.0), rec("c", 1, 2.0), rec("t", 1, 1.0, 1)};
    try {
      load_panel(recs);
      FAIL("expected rejection");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("(unit 'c', time 1)") != std::string::npos);
    }
  }
  SUBCASE("zero controls") {
    std::vector<PanelRecord> recs{rec("a", 1, 1.0, 2), rec("a", 2, 1.0, 2)};
    CHECK_THROWS_AS(load_panel(recs), ValidationError);
  }
  SUBCASE("onset must be strictly after the first period") {
    std::vector<PanelRecord> recs{rec("c", 1, 1.0), rec("c", 2, 1.0), rec("a", 1, 1.0, 1), rec("a", 2, 1.0, 1)};
    CHECK_THROWS_AS(load_panel(recs), ValidationError);
  }
}

TEST_CASE("units are stored controls first, then by id") {
  std::vector<PanelRecord> recs{rec("z", 1, 1.0, 2), rec("z", 2, 1.0, 2), rec("m", 1, 1.0), rec("m", 2, 1.0),
                                rec("b", 1, 1.0, 2), rec("b", 2, 1.0, 2), rec("y", 1, 1.0), rec("y", 2, 1.0)};
  const auto p = load_panel(recs);
  CHECK(p.unit_ids() == std::vector<std::string>{"m", "y", "b", "z"});
}

TEST_CASE("build_mask") {
  const double nan = kMissing;
  Grid y(3, 5);
  y << 1, 1, 1, 1, 1,
       1, 1, 1, 1, 1,
       1, nan, 1, 1, 1;
  const auto p = make_panel(y, {0, 3, 3});
  const auto m = build_mask(p);
  CHECK(m.cells.row(0).all());
  CHECK((m.cells.row(1).cast<int>() == Eigen::Array<int, 1, 5>(1, 1, 0, 0, 0)).all());
  CHECK((m.cells.row(2).cast<int>() == Eigen::Array<int, 1, 5>(1, 0, 0, 0, 0)).all());

  Grid empty = Grid::Constant(2, 3, nan);
  CHECK_THROWS_AS(build_mask(make_panel(empty, {0, 2})), EstimationError);
}

TEST_CASE("mask is independent of record order") {
  std::vector<PanelRecord> recs;
  rng::Stream s(5, rng::Domain::kSimControl, 0);
  for (int u = 0; u < 6; ++u) {
    const auto onset = u >= 3 ? std::optional<std::int64_t>(4 + u) : std::nullopt;
    for (int t = 1; t <= 12; ++t) {
      if (s.uniform() < 0.2) continue;
      recs.push_back(rec("u" + std::to_string(u), t, s.normal(), onset));
    }
  }
  const auto first = build_mask(load_panel(recs)).cells;
  for (int trial = 0; trial < 5; ++trial) {
    rng::Stream(9, rng::Domain::kCvFolds, static_cast<std::uint64_t>(trial)).shuffle(recs);
    const auto p = load_panel(recs);
    CHECK((build_mask(p).cells == first).all());
    for (Index i : p.treated_rows()) {
      CHECK_FALSE(build_mask(p).cells.row(i).tail(p.n_periods() - p.onset_column(i)).any());
    }
  }
}

TEST_CASE("filter_min_pre_periods") {
  const double nan = kMissing;
  Grid y(3, 10);
  y.setOnes();
  y(2, 0) = nan;
  y(2, 1) = nan;
  // Unit 2 is treated at time 6 with only 3 observed pre-periods.
  const auto p = make_panel(y, {0, 8, 6});
  SUBCASE("short unit dropped") {
    const auto r = filter_min_pre_periods(p, 5);
    CHECK(r.dropped == std::vector<std::string>{"t2"});
    CHECK(r.panel.n_treated() == 1);
    CHECK(r.panel.n_controls() == 1);
    const auto again = filter_min_pre_periods(r.panel, 5);
    CHECK(again.dropped.empty());
    CHECK(again.panel.unit_ids() == r.panel.unit_ids());
  }
  SUBCASE("vacuous filter") {
    const auto r = filter_min_pre_periods(p, 1);
    CHECK(r.dropped.empty());
    CHECK(r.panel.n_units() == 3);
  }
  SUBCASE("controls untouched even with a huge tau") {
    CHECK_THROWS_AS(filter_min_pre_periods(p, 50), EstimationError);
    const auto r = filter_min_pre_periods(p, 7);
    CHECK(r.panel.n_controls() == 1);
    CHECK(r.panel.outcome().row(0) == p.outcome().row(0));
  }
  CHECK_THROWS_AS(filter_min_pre_periods(p, 0), ValidationError);
}

TEST_CASE("to_event_time") {
  Grid y(4, 12);
  for (Index i = 0; i < 4; ++i)
    for (Index c = 0; c < 12; ++c) y(i, c) = 100.0 * i + c + 1;  // value = calendar time + 100 i
  const auto p = make_panel(y, {0, 10, 5, 12});
  const auto v = to_event_time(p, {3, 2});
  CHECK(v.event_times == std::vector<int>{-3, -2, -1, 0, 1});
  const Index unit10 = 0;  // t1: onset 10
  for (int e = 0; e < 5; ++e) CHECK(v.values(unit10, e) == doctest::Approx(100.0 + 7 + e));
  CHECK(v.values(1, 3) == doctest::Approx(200.0 + 5));  // onset 5 aligned at event 0

  const auto w = to_event_time(p, {2, 4});
  const Index last = 2;  // t3: treated in the final period
  CHECK_FALSE(is_missing(w.values(last, 2)));
  for (int e = 3; e < 6; ++e) CHECK(is_missing(w.values(last, e)));

  // Value preservation for every defined cell.
  const auto big = to_event_time(p, {12, 12});
  for (std::size_t k = 0; k < big.rows.size(); ++k) {
    for (std::size_t e = 0; e < big.event_times.size(); ++e) {
      const Index c = event_column(p, big.rows[k], big.event_times[e]);
      if (c >= 0) CHECK(big.values(static_cast<Index>(k), static_cast<Index>(e)) == p.outcome()(big.rows[k], c));
    }
  }
}

TEST_CASE("covariate interpolation is linear inside and flat outside") {
  const double nan = kMissing;
  PanelParts parts;
  parts.outcome = Grid::Ones(2, 6);
  parts.unit_ids = {"c", "t"};
  parts.treatment_time = {std::nullopt, 3};
  parts.condition_value = {std::nullopt, std::nullopt};
  parts.covariate_names = {"tmax"};
  Grid x(2, 6);
  x << nan, 2.0, nan, nan, 8.0, nan,
       nan, nan, nan, nan, nan, nan;
  parts.covariates = {x};
  const PanelDataset p(std::move(parts));
  const auto g = p.imputed_covariates()[0];
  Eigen::RowVectorXd want(6);
  want << 2, 2, 4, 6, 8, 8;
  CHECK((g.row(0) - want).norm() < 1e-12);
  CHECK((g.row(1).array() == 5.0).all());  // no data: overall mean
}

TEST_CASE("panel csv") {
  SUBCASE("write then read reproduces the panel") {
    const double nan = kMissing;
    PanelParts parts;
    parts.first_time = 3;
    parts.outcome.resize(3, 4);
    parts.outcome << 0.1, nan, 0.3, 0.123456789012345678,
                     -0.5, 0.25, 1e-300, 0.7,
                     0.9, 0.8, 0.7, 0.6;
    parts.unit_ids = {"ctl", "fire_a", "fire_b"};
    parts.treatment_time = {std::nullopt, 5, 6};
    parts.condition_value = {std::nullopt, 41.5, 63.25};
    parts.covariate_names = {"tmax", "pr"};
    parts.covariates = {Grid::Constant(3, 4, 30.5), Grid::Constant(3, 4, 0.1)};
    parts.baseline = Grid::Constant(3, 4, 0.4);
    const PanelDataset p(std::move(parts));
    std::stringstream buf;
    write_panel_csv(buf, p);
    const auto q = read_panel_csv(buf);
    CHECK(q.unit_ids() == p.unit_ids());
    CHECK(q.first_time() == 3);
    CHECK(q.covariate_names() == p.covariate_names());
    CHECK((q.outcome().array().isNaN() == p.outcome().array().isNaN()).all());
    CHECK((q.outcome().array().isNaN().select(0.0, q.outcome().array() - p.outcome().array()) == 0.0).all());
    CHECK(*q.condition_value(2) == 63.25);
    CHECK(*q.treatment_time(1) == 5);
    CHECK(q.baseline().has_value());
  }
  SUBCASE("ISO dates map to periods by cadence") {
    std::stringstream in;
    in << "unit_id,time,outcome,treatment_time,condition_value\n"
       << "c,2001-01-01,0.5,,\n"
       << "c,2001-01-17,0.6,,\n"
       << "c,2001-02-02,0.7,,\n"
       << "f,2001-01-01,0.5,2001-01-20,44\n"
       << "f,2001-01-17,0.6,2001-01-20,44\n"
       << "f,2001-02-02,0.2,2001-01-20,44\n";
    const auto p = read_panel_csv(in, {16.0});
    CHECK(p.n_periods() == 3);
    CHECK(p.first_time() == 1);
    CHECK(*p.treatment_time(1) == 2);  // day 19 -> floor(19 / 16) + 1
  }
  SUBCASE("bad numbers and missing columns are rejected") {
    std::stringstream a("unit_id,time\nc,1\n");
    CHECK_THROWS_AS(read_panel_csv(a), ValidationError);
    std::stringstream b("unit_id,time,outcome\nc,1,abc\n");
    CHECK_THROWS_AS(read_panel_csv(b), ValidationError);
  }
}

TEST_CASE("select_rows suffixes repeated ids") {
  const auto p = make_panel(Grid::Ones(3, 4), {0, 2, 3});
  const std::vector<Index> rows{0, 1, 1, 2};
  const auto q = select_rows(p, rows);
  CHECK(q.n_units() == 4);
  CHECK(q.row_of("t1#1").has_value());
}
