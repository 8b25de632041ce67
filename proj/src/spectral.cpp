#include "csdac/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>

namespace csdac {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// Code-rate sequence of a held ideal waveform.
std::vector<double> code_rate_samples(const OversampledWaveform& ideal) {
  const auto osr = static_cast<std::size_t>(ideal.config.oversampling_ratio());
  std::vector<double> out(ideal.samples.size() / osr);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = ideal.samples[n * osr];
  return out;
}

std::size_t fundamental_bin(const Spectrum& s) {
  if (s.bin_power.size() < 2)
    throw DomainError("record too short to hold a tone");
  const auto it = std::max_element(s.bin_power.begin() + 1, s.bin_power.end());
  return static_cast<std::size_t>(it - s.bin_power.begin());
}

void check_pair(const OversampledWaveform& ideal,
                const OversampledWaveform& error) {
  if (ideal.samples.size() != error.samples.size())
    throw DomainError("ideal and error waveforms differ in length");
  if (!(ideal.config == error.config))
    throw DomainError("ideal and error waveforms differ in configuration");
}

}  // namespace

double Spectrum::total_power() const {
  return std::accumulate(bin_power.begin(), bin_power.end(), 0.0);
}

double Spectrum::band_power(double cutoff_hz) const {
  const double last = std::floor(cutoff_hz / bin_width * (1.0 + 1e-12));
  const auto count = std::min(bin_power.size(),
                              static_cast<std::size_t>(std::max(0.0, last)) + 1);
  return std::accumulate(bin_power.begin(),
                         bin_power.begin() + static_cast<std::ptrdiff_t>(count),
                         0.0);
}

SdrReport make_sdr_report(double signal_power, double error_power, Band band) {
  SdrReport r{signal_power, error_power, 0.0, band};
  r.sdr_db = r.unbounded() ? std::numeric_limits<double>::infinity()
                           : 10.0 * std::log10(signal_power / error_power);
  return r;
}

double mean_power(std::span<const double> samples) {
  if (samples.empty()) throw DomainError("mean power of an empty waveform");
  double acc = 0.0;
  for (double v : samples) acc += v * v;
  return acc / static_cast<double>(samples.size());
}

double mean_power(const OversampledWaveform& w) { return mean_power(w.samples); }

Spectrum periodogram(std::span<const double> samples, double rate) {
  const std::size_t len = samples.size();
  if (len == 0 || len % 2 != 0)
    throw DomainError("periodogram needs a nonempty even-length record");
  const std::size_t bins = len / 2 + 1;

  std::unique_ptr<double, FftwFree> in(
      static_cast<double*>(fftw_malloc(sizeof(double) * len)));
  std::unique_ptr<fftw_complex, FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
  if (!in || !out) throw std::bad_alloc();

  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), in.get(), out.get(),
                                FFTW_ESTIMATE);
  }
  std::copy(samples.begin(), samples.end(), in.get());
  fftw_execute(plan);

  Spectrum s;
  s.rate = rate;
  s.bin_width = rate / static_cast<double>(len);
  s.bin_power.resize(bins);
  const double norm = 1.0 / (static_cast<double>(len) * static_cast<double>(len));
  for (std::size_t k = 0; k < bins; ++k) {
    const double re = out.get()[k][0];
    const double im = out.get()[k][1];
    const double p = (re * re + im * im) * norm;
    s.bin_power[k] = (k == 0 || k == bins - 1) ? p : 2.0 * p;
  }
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return s;
}

Spectrum periodogram(const OversampledWaveform& w) {
  return periodogram(w.samples, 1.0 / w.sample_period);
}

double fundamental_power(const OversampledWaveform& ideal) {
  const auto codes = code_rate_samples(ideal);
  const auto s = periodogram(codes, ideal.config.sample_rate());
  return s.bin_power[fundamental_bin(s)];
}

SdrReport wideband_sdr(const OversampledWaveform& ideal,
                       const OversampledWaveform& error) {
  check_pair(ideal, error);
  return make_sdr_report(fundamental_power(ideal), mean_power(error),
                         Band::wideband);
}

SdrReport nyquist_sdr(const OversampledWaveform& ideal,
                      const OversampledWaveform& error) {
  check_pair(ideal, error);
  const auto spec = periodogram(error);
  const double in_band = spec.band_power(ideal.config.sample_rate() / 2.0);
  return make_sdr_report(fundamental_power(ideal), in_band, Band::nyquist);
}

std::vector<TransitionTrace> transition_traces(
    const OversampledWaveform& error, const DigitalSequence& seq,
    std::size_t window_ticks, std::optional<std::vector<std::size_t>> selection,
    bool periodic) {
  const auto osr = static_cast<std::size_t>(error.config.oversampling_ratio());
  if (window_ticks >= osr)
    throw DomainError("trace window must be shorter than one code period");
  if (seq.size() != error.periods())
    throw DomainError("sequence and error waveform cover different periods");

  std::vector<std::size_t> picks;
  if (selection) {
    picks = *selection;
  } else {
    for (std::size_t n = 0; n < seq.size(); ++n)
      if (seq.delta(n) != 0) picks.push_back(n);
  }

  std::vector<TransitionTrace> out;
  out.reserve(picks.size());
  const auto total = static_cast<std::ptrdiff_t>(error.samples.size());
  for (std::size_t n : picks) {
    if (n >= seq.size())
      throw DomainError("transition " + std::to_string(n) + " does not exist");
    TransitionTrace t{n, seq.delta(n), {}, {}};
    const auto center = static_cast<std::ptrdiff_t>(n * osr);
    const auto w = static_cast<std::ptrdiff_t>(window_ticks);
    for (auto k = center - w; k < center + w; ++k) {
      auto at = k;
      if (periodic) at = (k % total + total) % total;
      else if (k < 0 || k >= total) continue;
      const double e = error.samples[static_cast<std::size_t>(at)];
      t.t_offset.push_back(static_cast<double>(k - center) * error.sample_period);
      t.squared_error.push_back(e * e);
    }
    out.push_back(std::move(t));
  }
  return out;
}

void write_spectrum_csv(const Spectrum& s, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "freq_hz,power\n";
  char buf[64];
  for (std::size_t k = 0; k < s.bin_power.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g\n",
                  static_cast<double>(k) * s.bin_width, s.bin_power[k]);
    f << buf;
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string to_string(Band b) {
  return b == Band::wideband ? "wideband" : "nyquist";
}

}  // namespace csdac
