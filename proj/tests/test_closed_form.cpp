#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "csdac/closed_form.hpp"
#include "gen.hpp"

using namespace csdac;

namespace {

DeltaStats steady_stats(int m, double f0) {
  const DacConfig cfg = DacConfig::fully_segmented(m, 16);
  return delta_stats(
      with_periodic_start(cfg, generate_tone_codes(cfg, ToneSpec{f0, 1000})));
}

}  // namespace

TEST_CASE("delta stats") {
  const DacConfig cfg = DacConfig::fully_segmented(4, 16);
  SUBCASE("constant") {
    const auto s = delta_stats(DigitalSequence(cfg, {6, 6, 6}, 6));
    CHECK(s.mean_abs_delta == 0.0);
    CHECK(s.mean_abs_delta_32 == 0.0);
  }
  SUBCASE("unit steps") {
    const auto s = delta_stats(DigitalSequence(cfg, {3, 4, 3, 2, 3}, 2));
    CHECK(s.mean_abs_delta == 1.0);
    CHECK(s.mean_abs_delta_32 == 1.0);
  }
  SUBCASE("mixed steps") {
    const auto s = delta_stats(DigitalSequence(cfg, {4, 0, 0, 9}, 0));
    CHECK(s.mean_abs_delta == doctest::Approx(17.0 / 4));
    CHECK(s.mean_abs_delta_32 == doctest::Approx((8.0 + 8.0 + 0 + 27.0) / 4));
  }
  CHECK_THROWS_AS(delta_stats(DigitalSequence(cfg, {})), DomainError);
}

TEST_CASE("delta stat fixtures from a direct summation pass") {
  const auto m3 = steady_stats(3, 0.01);
  CHECK(m3.mean_abs_delta == doctest::Approx(0.14).epsilon(1e-12));
  CHECK(m3.mean_abs_delta_32 == doctest::Approx(0.14).epsilon(1e-12));
  const auto m5 = steady_stats(5, 0.01);
  CHECK(m5.mean_abs_delta == doctest::Approx(0.62).epsilon(1e-12));
  CHECK(m5.mean_abs_delta_32 == doctest::Approx(0.62).epsilon(1e-12));
  const auto m8 = steady_stats(8, 0.01);
  CHECK(m8.mean_abs_delta == doctest::Approx(5.1).epsilon(1e-12));
  CHECK(m8.mean_abs_delta_32 ==
        doctest::Approx(12.657013064724964).epsilon(1e-12));
}

TEST_CASE("folded normal mean") {
  CHECK(folded_normal_mean(0.0) == 0.0);
  CHECK(folded_normal_mean(1.0) == doctest::Approx(0.7978845608028654).epsilon(1e-14));
  CHECK_THROWS_AS(folded_normal_mean(-1.0), DomainError);

  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd(0.0, 2.5);
  double sum = 0.0;
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) sum += std::abs(nd(rng));
  CHECK(std::abs(sum / draws / folded_normal_mean(2.5) - 1.0) < 0.005);
}

TEST_CASE("error power formulas") {
  const DeltaStats unit{1.0, 1.0};
  CHECK(error_power_previous(0.0, 1.0, unit, 1.0) == 0.0);
  CHECK(error_power_previous(1e-3, 1.0, unit, 1.0) == doctest::Approx(1e-6));
  CHECK(error_power_previous(2e-9, 1e-6, unit, 3.0) ==
        doctest::Approx(9.0 * 4e-6));
  CHECK(error_power_improved(0.0, 1.0, unit, 1.0) == 0.0);
  CHECK(error_power_improved(3e-3, 1.0, unit, 1.0) ==
        doctest::Approx(2.3937e-3).epsilon(1e-4));
}

TEST_CASE("pinned SDR predictions") {
  const DacConfig m3 = DacConfig::fully_segmented(3, 16);
  const DacConfig m8 = DacConfig::fully_segmented(8, 16);
  const auto s3 = steady_stats(3, 0.01);
  const auto s8 = steady_stats(8, 0.01);

  CHECK(sdr_wideband_improved(m3, s3, 3e-3).sdr_db ==
        doctest::Approx(42.61916741153746).epsilon(1e-12));
  CHECK(sdr_wideband_improved(m3, s3, 1e-3).sdr_db ==
        doctest::Approx(47.39037995873409).epsilon(1e-12));
  CHECK(sdr_wideband_improved(m3, s3, 1e-2).sdr_db ==
        doctest::Approx(37.39037995873409).epsilon(1e-12));
  CHECK(sdr_wideband_improved(m8, s8, 1e-3).sdr_db ==
        doctest::Approx(59.05719084005149).epsilon(1e-12));
  CHECK(sdr_wideband_previous(m3, s3, 3e-3).sdr_db ==
        doctest::Approx(66.86735547919007).epsilon(1e-12));

  const auto nyq = sdr_nyquist_previous(m8, ToneSpec{0.01, 1000}, 1e-3);
  CHECK(nyq.sdr_db == doctest::Approx(92.02420197778031).epsilon(1e-12));
  CHECK_FALSE(nyq.advisory);
  CHECK(sdr_nyquist_previous(DacConfig::fully_segmented(5, 16),
                             ToneSpec{0.01, 1000}, 1e-3)
            .sdr_db == doctest::Approx(82.87241711178348).epsilon(1e-12));
  CHECK(sdr_nyquist_previous(m8, ToneSpec{0.3, 1000}, 1e-3).advisory);
}

TEST_CASE("unbounded predictions") {
  const DacConfig cfg = DacConfig::fully_segmented(3, 16);
  const auto s = steady_stats(3, 0.01);
  CHECK(sdr_wideband_improved(cfg, s, 0.0).unbounded);
  CHECK(sdr_wideband_previous(cfg, s, 0.0).unbounded);
  CHECK(sdr_wideband_improved(cfg, DeltaStats{}, 1e-3).unbounded);
  CHECK(sdr_nyquist_previous(cfg, ToneSpec{0.01, 1000}, 0.0).unbounded);
}

TEST_CASE("closed-form properties over random inputs") {
  gen::Source g(41);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = g.integer(1, 16);
    const double fs = std::pow(10.0, g.real(0, 10));
    const double iu = std::pow(10.0, g.real(-6, 1));
    const DacConfig cfg = DacConfig::fully_segmented(m, 16, iu, fs);
    const DacConfig unit = DacConfig::fully_segmented(m, 16, 1.0, fs);
    const double d1 = g.real(0.01, 20.0);
    const DeltaStats st{d1, d1 * g.real(1.0, std::sqrt(20.0))};
    const double sigma = std::pow(10.0, g.real(-6, -1)) / fs;

    const auto imp = sdr_wideband_improved(cfg, st, sigma);
    const auto folded = sdr_wideband_improved_folded(cfg, st, sigma);
    CHECK(std::abs(imp.sdr_db - folded.sdr_db) < 1e-12 * std::max(1.0, std::abs(imp.sdr_db)));

    const double direct = 10 * std::log10(
        full_scale_signal_power(cfg) /
        error_power_improved(sigma, cfg.sample_period(), st, iu));
    CHECK(imp.sdr_db == doctest::Approx(direct).epsilon(1e-12));

    CHECK(imp.sdr_db - sdr_wideband_improved(cfg, st, 2 * sigma).sdr_db ==
          doctest::Approx(10 * std::log10(2.0)).epsilon(1e-9));
    const auto prev = sdr_wideband_previous(cfg, st, sigma);
    CHECK(prev.sdr_db - sdr_wideband_previous(cfg, st, 2 * sigma).sdr_db ==
          doctest::Approx(20 * std::log10(2.0)).epsilon(1e-9));
    const ToneSpec tone{0.01, 1000};
    CHECK(sdr_nyquist_previous(cfg, tone, sigma).sdr_db -
              sdr_nyquist_previous(cfg, tone, 10 * sigma).sdr_db ==
          doctest::Approx(20.0).epsilon(1e-9));

    CHECK(imp.sdr_db == doctest::Approx(sdr_wideband_improved(unit, st, sigma).sdr_db).epsilon(1e-12));
    CHECK(prev.sdr_db == doctest::Approx(sdr_wideband_previous(unit, st, sigma).sdr_db).epsilon(1e-12));
    CHECK(sdr_nyquist_previous(cfg, tone, sigma).sdr_db ==
          doctest::Approx(sdr_nyquist_previous(unit, tone, sigma).sdr_db).epsilon(1e-12));

    // Below the crossover the duty-factor correction raises the error power.
    const double ratio = sigma / cfg.sample_period();
    const double crossover = std::sqrt(std::numbers::pi / 2) * st.mean_abs_delta /
                             st.mean_abs_delta_32;
    if (ratio < crossover) {
      CHECK(error_power_improved(sigma, cfg.sample_period(), st, iu) >
            error_power_previous(sigma, cfg.sample_period(), st, iu));
      CHECK(imp.sdr_db <= prev.sdr_db);
    }
  }
}

TEST_CASE("previous minus improved gap widens as sigma shrinks") {
  const DacConfig cfg = DacConfig::fully_segmented(3, 16);
  const auto s = steady_stats(3, 0.01);
  double last = -1e9;
  for (double sigma : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double gap = sdr_wideband_previous(cfg, s, sigma).sdr_db -
                       sdr_wideband_improved(cfg, s, sigma).sdr_db;
    CHECK(gap > last);
    last = gap;
  }
}
