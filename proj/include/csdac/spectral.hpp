#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csdac/dac_core.hpp"
#include "csdac/waveform.hpp"

namespace csdac {

/// One-sided rectangular-window periodogram. bin_power[k] is the power of
/// the components at k * bin_width; the bins sum to the mean power.
struct Spectrum {
  std::vector<double> bin_power;  // A^2 per bin
  double bin_width = 0.0;         // Hz
  double rate = 0.0;              // Hz

  double total_power() const;
  /// Power of every bin at or below `cutoff_hz`.
  double band_power(double cutoff_hz) const;
};

enum class Band { wideband, nyquist };

struct SdrReport {
  double signal_power = 0.0;
  double error_power = 0.0;
  double sdr_db = 0.0;
  Band band = Band::wideband;

  /// Zero error power: the ratio has no finite value.
  bool unbounded() const { return !(error_power > 0.0); }
};

SdrReport make_sdr_report(double signal_power, double error_power, Band band);

double mean_power(std::span<const double> samples);
double mean_power(const OversampledWaveform& w);

Spectrum periodogram(std::span<const double> samples, double rate);
Spectrum periodogram(const OversampledWaveform& w);

/// Power of the largest non-DC component of the ideal output, measured on
/// the code-rate sequence (one sample per held period). This is the tone
/// power the DAC reproduces, free of the hold droop of the oversampled
/// staircase.
double fundamental_power(const OversampledWaveform& ideal);

SdrReport wideband_sdr(const OversampledWaveform& ideal,
                       const OversampledWaveform& error);
SdrReport nyquist_sdr(const OversampledWaveform& ideal,
                      const OversampledWaveform& error);

struct TransitionTrace {
  std::size_t period = 0;
  Code delta_x = 0;
  std::vector<double> t_offset;  // seconds, 0 at n * T_s
  std::vector<double> squared_error;
};

/// Squared error around each selected code transition. Period n of `error`
/// must correspond to code n of `seq`. With no selection every transition
/// with a nonzero code step is traced. With `periodic` set the record is
/// treated as one period of a steady-state signal and the window wraps
/// around its ends; otherwise samples outside the record are left out.
std::vector<TransitionTrace> transition_traces(
    const OversampledWaveform& error, const DigitalSequence& seq,
    std::size_t window_ticks,
    std::optional<std::vector<std::size_t>> selection = std::nullopt,
    bool periodic = false);

void write_spectrum_csv(const Spectrum& s, const std::string& path);

std::string to_string(Band b);

}  // namespace csdac
