#include "csdac/closed_form.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace csdac {

namespace {

const double kSqrtTwoOverPi = std::sqrt(2.0 / std::numbers::pi);

void check_sigma(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw DomainError("sigma must be non-negative and finite");
}

Prediction ratio_db(double signal, double error) {
  if (!(error > 0.0))
    return {std::numeric_limits<double>::infinity(), true, false};
  return {10.0 * std::log10(signal / error), false, false};
}

}  // namespace

DeltaStats delta_stats(const DigitalSequence& seq) {
  if (seq.size() == 0) throw DomainError("delta statistics of an empty record");
  double s1 = 0.0;
  double s32 = 0.0;
  for (Code d : seq.deltas()) {
    const double a = std::abs(static_cast<double>(d));
    s1 += a;
    s32 += a * std::sqrt(a);
  }
  const auto n = static_cast<double>(seq.size());
  return {s1 / n, s32 / n};
}

double folded_normal_mean(double sigma_eff) {
  if (!(sigma_eff >= 0.0))
    throw DomainError("folded normal scale must be non-negative");
  return sigma_eff * kSqrtTwoOverPi;
}

double full_scale_signal_power(const DacConfig& cfg) {
  const double amp =
      cfg.unit_current() / 2.0 * static_cast<double>(cfg.max_code());
  return amp * amp / 2.0;
}

double error_power_previous(double sigma, double sample_period,
                            const DeltaStats& stats, double unit_current) {
  check_sigma(sigma);
  if (!(sample_period > 0.0)) throw DomainError("sample period must be positive");
  const double r = sigma / sample_period;
  return unit_current * unit_current * r * r * stats.mean_abs_delta;
}

double error_power_improved(double sigma, double sample_period,
                            const DeltaStats& stats, double unit_current) {
  check_sigma(sigma);
  if (!(sample_period > 0.0)) throw DomainError("sample period must be positive");
  return folded_normal_mean(sigma) / sample_period * unit_current *
         unit_current * stats.mean_abs_delta_32;
}

Prediction sdr_wideband_improved(const DacConfig& cfg, const DeltaStats& stats,
                                 double sigma) {
  return ratio_db(full_scale_signal_power(cfg),
                  error_power_improved(sigma, cfg.sample_period(), stats,
                                       cfg.unit_current()));
}

Prediction sdr_wideband_improved_folded(const DacConfig& cfg,
                                        const DeltaStats& stats, double sigma) {
  check_sigma(sigma);
  if (!(sigma > 0.0) || !(stats.mean_abs_delta_32 > 0.0))
    return {std::numeric_limits<double>::infinity(), true, false};
  const double c = static_cast<double>(cfg.max_code());
  const double k = c * c / (8.0 * cfg.sample_rate() * kSqrtTwoOverPi *
                            stats.mean_abs_delta_32);
  return {10.0 * std::log10(k) - 10.0 * std::log10(sigma), false, false};
}

Prediction sdr_wideband_previous(const DacConfig& cfg, const DeltaStats& stats,
                                 double sigma) {
  return ratio_db(full_scale_signal_power(cfg),
                  error_power_previous(sigma, cfg.sample_period(), stats,
                                       cfg.unit_current()));
}

Prediction sdr_nyquist_previous(const DacConfig& cfg, const ToneSpec& tone,
                                double sigma) {
  check_sigma(sigma);
  Prediction p;
  p.advisory = tone.frequency_ratio > 0.1;
  if (!(sigma > 0.0)) {
    p.sdr_db = std::numeric_limits<double>::infinity();
    p.unbounded = true;
    return p;
  }
  const double fs = cfg.sample_rate();
  const double f1 = tone.frequency_ratio * fs;
  const double a1 = tone.amplitude_for(cfg);
  p.sdr_db = 10.0 * std::log10(a1 / (8.0 * f1 * fs * sigma * sigma));
  return p;
}

}  // namespace csdac
