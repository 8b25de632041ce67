#include "doctest.h"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "csdac/harness.hpp"
#include "gen.hpp"

using namespace csdac;

namespace {

std::string records_csv(const SweepResult& r) {
  std::ostringstream os;
  write_records_csv(os, r.records);
  write_aggregates_csv(os, r.aggregates);
  return os.str();
}

RunRecord synthetic(std::size_t run, double sdr) {
  RunRecord r;
  r.run = run;
  r.seed = run;
  r.sdr_db = sdr;
  r.error_power = 1.0;
  return r;
}

}  // namespace

TEST_CASE("run sequence layout") {
  const DacConfig cfg = DacConfig::fully_segmented(4, 16);
  const ToneSpec tone{0.04, 500};
  const auto rs = build_run_sequence(cfg, tone);
  const std::size_t period = tone.code_period();
  CHECK(period == 25);
  CHECK(rs.window.first == period);
  CHECK(rs.window.count == 500);
  CHECK(rs.extended.size() == period + 500 + 1);
  CHECK(rs.record.size() == 500);
  for (std::size_t n = 0; n < 500; ++n)
    CHECK(rs.record.code(n) == rs.extended.code(period + n));
  CHECK(rs.record.initial_code() == rs.extended.code(period - 1));
  CHECK(rs.record.initial_code() == rs.record.code(499));
}

TEST_CASE("single runs") {
  const DacConfig cfg = DacConfig::fully_segmented(3, 256);
  const ToneSpec tone{0.01, 1000};

  SUBCASE("deterministic") {
    for (Model m : {Model::equivalent, Model::percell})
      for (Band b : {Band::wideband, Band::nyquist}) {
        const auto a = run_point(cfg, tone, 3e-3, 99, m, b);
        const auto c = run_point(cfg, tone, 3e-3, 99, m, b);
        CHECK(a.sdr_db == c.sdr_db);
        CHECK(a.error_power == c.error_power);
        CHECK(a.signal_power == c.signal_power);
      }
  }
  SUBCASE("zero sigma is unbounded") {
    const auto r = run_point(cfg, tone, 0.0, 1, Model::percell, Band::nyquist);
    CHECK(r.unbounded());
    CHECK(std::isinf(r.sdr_db));
  }
  SUBCASE("nyquist error never exceeds wideband error") {
    for (std::uint64_t seed = 1; seed < 6; ++seed) {
      const std::vector<Band> both{Band::wideband, Band::nyquist};
      SimOptions sampled;
      sampled.wideband_route = WidebandRoute::sampled;
      const auto recs = simulate(cfg, tone, 3e-3, seed, Model::percell, both, sampled);
      CHECK(recs[1].error_power <= recs[0].error_power);
    }
  }
  SUBCASE("exact and sampled wideband routes agree at large sigma") {
    SimOptions sampled;
    sampled.wideband_route = WidebandRoute::sampled;
    const DacConfig fine = DacConfig::fully_segmented(3, 1024);
    const auto e = run_point(fine, tone, 2e-2, 3, Model::equivalent, Band::wideband);
    const auto s = run_point(fine, tone, 2e-2, 3, Model::equivalent,
                             Band::wideband, sampled);
    CHECK(std::abs(e.sdr_db - s.sdr_db) < 0.1);
  }
  SUBCASE("unsupported combination") {
    const DacConfig part(6, 3, 64);
    CHECK_THROWS_AS(run_point(part, tone, 1e-3, 1, Model::equivalent, Band::wideband),
                    UnsupportedRegime);
    CHECK_NOTHROW(run_point(part, tone, 1e-3, 1, Model::percell, Band::wideband));
  }
}

TEST_CASE("unit-step records: both models give the same SDR") {
  // A slow three-bit tone only ever steps by one code.
  const DacConfig cfg = DacConfig::fully_segmented(3, 1024);
  const ToneSpec tone{0.01, 1000};
  for (std::size_t r = 0; r < 5; ++r) {
    const auto seed = derive_seed(5, 0, r);
    const auto eq = run_point(cfg, tone, 3e-3, seed, Model::equivalent, Band::wideband);
    const auto pc = run_point(cfg, tone, 3e-3, seed, Model::percell, Band::wideband);
    CHECK(std::abs(eq.sdr_db - pc.sdr_db) < 1e-9);
  }
}

TEST_CASE("seeds") {
  std::set<std::uint64_t> seen;
  for (std::size_t g = 0; g < 50; ++g)
    for (std::size_t r = 0; r < 200; ++r) seen.insert(derive_seed(1, g, r));
  CHECK(seen.size() == 50 * 200);
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));

  SweepPlan small;
  small.grid = {1e-3, 3e-3};
  small.runs = 3;
  small.tone = ToneSpec{0.02, 200};
  small.osr = 64;
  SweepPlan big = small;
  big.grid = {1e-3, 3e-3, 1e-2};
  const auto a = run_sweep(small);
  const auto b = run_sweep(big);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].seed == b.records[i].seed);
    CHECK(a.records[i].sdr_db == b.records[i].sdr_db);
  }
}

TEST_CASE("worker count does not change the output") {
  SweepPlan plan;
  plan.variable = SweepVariable::frequency_ratio;
  plan.grid = {0.01, 0.1, 0.3};
  plan.runs = 4;
  plan.osr = 64;
  plan.models = {Model::equivalent, Model::percell};
  plan.bands = {Band::wideband, Band::nyquist};
  const auto one = records_csv(run_sweep(plan, 1));
  CHECK(one == records_csv(run_sweep(plan, 3)));
  CHECK(one == records_csv(run_sweep(plan, 16)));
}

TEST_CASE("sweep variables and validation") {
  SweepPlan plan;
  plan.variable = SweepVariable::thermometer_bits;
  plan.m_bits = 6;
  plan.grid = {1, 3, 6};
  plan.runs = 2;
  plan.osr = 64;
  plan.models = {Model::percell};
  CHECK(plan.config_at(1).thermometer_bits() == 3);
  CHECK(plan.config_at(2).is_fully_segmented());
  const auto res = run_sweep(plan);
  CHECK(res.records.size() == 6);
  CHECK(res.aggregates.size() == 3);
  CHECK(res.records[2].t_bits == 3);

  plan.models = {Model::equivalent};
  CHECK_THROWS_AS(plan.validate(), ConfigError);

  SweepPlan bad;
  bad.grid = {};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.grid = {1e-3, 1e-3};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.grid = {1e-3};
  bad.runs = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.runs = 2;
  bad.variable = SweepVariable::frequency_ratio;
  bad.grid = {0.0105};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("zero-sigma sweep flags unbounded records") {
  SweepPlan plan;
  plan.grid = {0.0, 1e-3};
  plan.runs = 2;
  plan.osr = 64;
  const auto res = run_sweep(plan);
  CHECK(res.aggregates[0].runs == 0);
  CHECK(res.aggregates[0].unbounded == 2);
  CHECK(res.aggregates[1].runs == 2);
  REQUIRE(res.diagnostics.size() == 1);
  CHECK(res.diagnostics[0].find("unbounded") != std::string::npos);
}

TEST_CASE("aggregation") {
  SUBCASE("identical records give zero width") {
    const std::vector<RunRecord> recs{synthetic(0, 40.0), synthetic(1, 40.0)};
    const auto rows = aggregate(recs);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].sdr_db_mean == 40.0);
    CHECK(rows[0].sdr_db_ci95 == 0.0);
  }
  SUBCASE("order independent") {
    gen::Source g(43);
    std::vector<RunRecord> recs;
    for (std::size_t r = 0; r < 30; ++r) recs.push_back(synthetic(r, g.real(30, 50)));
    const auto a = aggregate(recs);
    std::reverse(recs.begin(), recs.end());
    const auto b = aggregate(recs);
    CHECK(a[0].sdr_db_mean == b[0].sdr_db_mean);
    CHECK(a[0].sdr_db_ci95 == b[0].sdr_db_ci95);
  }
  SUBCASE("width shrinks as one over root runs") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd(45.0, 2.0);
    const auto width = [&](std::size_t runs) {
      std::vector<RunRecord> recs;
      for (std::size_t r = 0; r < runs; ++r) recs.push_back(synthetic(r, nd(rng)));
      return aggregate(recs)[0].sdr_db_ci95;
    };
    const double w100 = width(100);
    const double w10000 = width(10000);
    CHECK(w100 == doctest::Approx(1.96 * 2.0 / 10.0).epsilon(0.2));
    CHECK(w10000 / w100 == doctest::Approx(0.1).epsilon(0.2));
  }
  SUBCASE("unbounded records excluded") {
    auto inf = synthetic(2, 0.0);
    inf.error_power = 0.0;
    const std::vector<RunRecord> recs{synthetic(0, 40.0), synthetic(1, 42.0), inf};
    const auto rows = aggregate(recs);
    CHECK(rows[0].runs == 2);
    CHECK(rows[0].unbounded == 1);
    CHECK(rows[0].sdr_db_mean == 41.0);
  }
}

TEST_CASE("trace capture") {
  const DacConfig cfg = DacConfig::fully_segmented(3, 256);
  const ToneSpec tone{0.11, 100};

  SUBCASE("zero sigma") {
    const auto b = capture_traces(cfg, tone, 0.0, 1, Model::percell, 16, std::nullopt);
    CHECK_FALSE(b.traces.empty());
    for (const auto& t : b.traces)
      for (double v : t.squared_error) CHECK(v == 0.0);
  }
  SUBCASE("default selection takes distinct steps") {
    const auto b = capture_traces(cfg, tone, 1e-2, 1, Model::percell, 16, std::nullopt);
    std::set<Code> steps;
    for (const auto& t : b.traces) steps.insert(t.delta_x);
    CHECK(steps.size() == b.traces.size());
    CHECK(b.traces.size() <= 8);
  }
  SUBCASE("trace area is the transition charge") {
    const double sigma = 2e-2;
    const std::uint64_t seed = 12;
    const auto rs = build_run_sequence(cfg, tone);
    const auto trans = equivalent_timing_errors(
        rs.extended, draw_timing_errors(cfg, sigma, seed));
    std::vector<std::size_t> pick;
    for (std::size_t n = 0; n < rs.record.size() && pick.size() < 5; ++n)
      if (rs.record.delta(n) != 0) pick.push_back(n);
    const auto b = capture_traces(cfg, tone, sigma, seed, Model::equivalent,
                                  64, pick);
    REQUIRE(b.traces.size() == pick.size());
    for (const auto& t : b.traces) {
      double area = 0.0;
      for (double v : t.squared_error) area += std::sqrt(v) * cfg.tick();
      const double te = trans.equivalent_errors[rs.window.first + t.period];
      CHECK(area == doctest::Approx(std::abs(static_cast<double>(t.delta_x) * te))
                        .epsilon(1e-9));
    }
  }
  SUBCASE("bad selection") {
    CHECK_THROWS_AS(capture_traces(cfg, tone, 1e-3, 1, Model::percell, 16,
                                   std::vector<std::size_t>{100}),
                    DomainError);
  }
}

TEST_CASE("presets") {
  CHECK(desk_preset().osr == 1024);
  CHECK(desk_preset().options.edge_mode == EdgeMode::fractional_edge);
  CHECK(fine_preset().osr == 4096);
  CHECK(fine_preset().options.edge_mode == EdgeMode::grid_round);
}
