#pragma once

#include "csdac/dac_core.hpp"

namespace csdac {

/// Time averages of the code-step magnitudes of a record.
struct DeltaStats {
  double mean_abs_delta = 0.0;     // <|dx_n|>
  double mean_abs_delta_32 = 0.0;  // <|dx_n|^{3/2}>
};

/// A predicted SDR. `unbounded` is set when the predicted error power is
/// zero; `advisory` marks results outside the formula's derivation regime.
struct Prediction {
  double sdr_db = 0.0;
  bool unbounded = false;
  bool advisory = false;
};

DeltaStats delta_stats(const DigitalSequence& seq);

/// Mean of |X| for X ~ N(0, sigma_eff^2).
double folded_normal_mean(double sigma_eff);

/// Full-scale sine power (I_u (2^M - 1) / 2)^2 / 2.
double full_scale_signal_power(const DacConfig& cfg);

/// Error power when each transition's charge is spread over a whole code
/// period: I_u^2 sigma^2 / T_s^2 <|dx|>.
double error_power_previous(double sigma, double sample_period,
                            const DeltaStats& stats, double unit_current);

/// Error power of rectangular error pulses of width |T_eps|:
/// sqrt(2/pi) sigma I_u^2 <|dx|^{3/2}> / T_s.
double error_power_improved(double sigma, double sample_period,
                            const DeltaStats& stats, double unit_current);

Prediction sdr_wideband_improved(const DacConfig& cfg, const DeltaStats& stats,
                                 double sigma);

/// The same prediction written as
/// 10 log10((2^M-1)^2 / (8 f_s sqrt(2/pi) <|dx|^{3/2}>)) - 10 log10(sigma).
Prediction sdr_wideband_improved_folded(const DacConfig& cfg,
                                        const DeltaStats& stats, double sigma);

Prediction sdr_wideband_previous(const DacConfig& cfg, const DeltaStats& stats,
                                 double sigma);

/// Nyquist-band SDR for a low-frequency tone, A_1 / (8 f_1 f_s sigma^2) with
/// A_1 in LSB units. Marked advisory above f_1/f_s = 0.1.
Prediction sdr_nyquist_previous(const DacConfig& cfg, const ToneSpec& tone,
                                double sigma);

}  // namespace csdac
