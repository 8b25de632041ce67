#include "csdac/dac_core.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace csdac {

DacConfig::DacConfig(int resolution_bits, int thermometer_bits,
                     int oversampling_ratio, double unit_current,
                     double sample_rate)
    : resolution_bits_(resolution_bits),
      thermometer_bits_(thermometer_bits),
      oversampling_ratio_(oversampling_ratio),
      unit_current_(unit_current),
      sample_rate_(sample_rate) {
  if (resolution_bits < 1 || resolution_bits > 16)
    throw ConfigError("resolution_bits must be in [1, 16], got " +
                      std::to_string(resolution_bits));
  if (thermometer_bits < 0 || thermometer_bits > resolution_bits)
    throw ConfigError("thermometer_bits must be in [0, resolution_bits], got " +
                      std::to_string(thermometer_bits));
  if (oversampling_ratio < 2)
    throw ConfigError("oversampling_ratio must be >= 2, got " +
                      std::to_string(oversampling_ratio));
  if (!(unit_current > 0.0) || !std::isfinite(unit_current))
    throw ConfigError("unit_current must be positive");
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
    throw ConfigError("sample_rate must be positive");
}

DacConfig DacConfig::fully_segmented(int resolution_bits,
                                     int oversampling_ratio,
                                     double unit_current, double sample_rate) {
  return DacConfig(resolution_bits, resolution_bits, oversampling_ratio,
                   unit_current, sample_rate);
}

Code DacConfig::cell_weight(std::size_t cell) const {
  if (cell < thermometer_cell_count()) return thermometer_weight();
  const auto k = cell - thermometer_cell_count();
  if (k >= static_cast<std::size_t>(binary_bits()))
    throw std::out_of_range("cell index out of range");
  return Code{1} << (binary_bits() - 1 - static_cast<int>(k));
}

double ToneSpec::amplitude_for(const DacConfig& cfg) const {
  return amplitude.value_or(static_cast<double>(cfg.max_code()) / 2.0);
}

std::int64_t ToneSpec::cycles() const {
  const double k = frequency_ratio * static_cast<double>(record_length);
  const double rounded = std::round(k);
  if (std::abs(k - rounded) > 1e-9 * std::max(1.0, k))
    throw ConfigError("tone is not coherent: frequency_ratio * record_length = " +
                      std::to_string(k) + " is not an integer");
  return static_cast<std::int64_t>(rounded);
}

std::size_t ToneSpec::code_period() const {
  const auto k = static_cast<std::size_t>(cycles());
  return record_length / std::gcd(record_length, k);
}

void ToneSpec::validate(const DacConfig& cfg) const {
  if (!(frequency_ratio > 0.0 && frequency_ratio < 0.5))
    throw ConfigError("frequency_ratio must be in (0, 0.5)");
  if (record_length == 0) throw ConfigError("record_length must be positive");
  if (cycles() == 0) throw ConfigError("tone has zero cycles in the record");
  const double a = amplitude_for(cfg);
  const double full = static_cast<double>(cfg.max_code()) / 2.0;
  if (!(a >= 0.0) || a > full)
    throw ConfigError("amplitude must be in [0, (2^M - 1)/2]");
}

DigitalSequence::DigitalSequence(const DacConfig& cfg, std::vector<Code> codes,
                                 Code initial_code)
    : codes_(std::move(codes)), initial_code_(initial_code) {
  const Code hi = cfg.max_code();
  if (initial_code < 0 || initial_code > hi)
    throw DomainError("initial code outside [0, 2^M - 1]");
  deltas_.resize(codes_.size());
  Code prev = initial_code;
  for (std::size_t n = 0; n < codes_.size(); ++n) {
    if (codes_[n] < 0 || codes_[n] > hi)
      throw DomainError("code " + std::to_string(codes_[n]) + " at index " +
                        std::to_string(n) + " outside [0, 2^M - 1]");
    deltas_[n] = codes_[n] - prev;
    prev = codes_[n];
  }
}

DigitalSequence with_periodic_start(const DacConfig& cfg,
                                    const DigitalSequence& seq) {
  const auto codes = seq.codes();
  const Code start = codes.empty() ? seq.initial_code() : codes.back();
  return DigitalSequence(cfg, {codes.begin(), codes.end()}, start);
}

std::vector<std::uint8_t> binary_to_thermometer(Code code, std::size_t width) {
  if (code < 0 || static_cast<std::size_t>(code) > width)
    throw DomainError("code " + std::to_string(code) +
                      " outside thermometer range [0, " +
                      std::to_string(width) + "]");
  std::vector<std::uint8_t> bits(width, 0);
  std::fill_n(bits.begin(), static_cast<std::size_t>(code), std::uint8_t{1});
  return bits;
}

DigitalSequence generate_tone_codes(const DacConfig& cfg, const ToneSpec& tone,
                                    Code initial_code) {
  tone.validate(cfg);
  const double offset = static_cast<double>(cfg.max_code()) / 2.0;
  const double amp = tone.amplitude_for(cfg);
  const double hi = static_cast<double>(cfg.max_code());
  const auto len = static_cast<std::int64_t>(tone.record_length);
  const std::int64_t k = tone.cycles();
  std::vector<Code> codes(tone.record_length);
  for (std::int64_t n = 0; n < len; ++n) {
    // Reduce k * n modulo the record so every period sees the same argument.
    const double turn = static_cast<double>((k * n) % len) /
                        static_cast<double>(len);
    double v = offset + amp * std::sin(2.0 * std::numbers::pi * turn + tone.phase);
    const double fl = std::floor(v);
    if (std::abs(v - fl - 0.5) < 1e-9) v = fl + 0.5;
    // std::round rounds half away from zero.
    codes[static_cast<std::size_t>(n)] =
        static_cast<Code>(std::clamp(std::round(v), 0.0, hi));
  }
  return DigitalSequence(cfg, std::move(codes), initial_code);
}

std::vector<double> draw_normal(std::size_t count, double sigma,
                                std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw DomainError("sigma must be non-negative and finite");
  std::vector<double> out(count, 0.0);
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  for (auto& v : out) v = dist(rng);
  return out;
}

TimingErrorSet draw_timing_errors(const DacConfig& cfg, double sigma,
                                  std::uint64_t seed) {
  return TimingErrorSet{draw_normal(cfg.physical_cell_count(), sigma, seed),
                        sigma, seed, cfg};
}

TransitionSet equivalent_timing_errors(const DigitalSequence& seq,
                                       const TimingErrorSet& taus) {
  if (!taus.config.is_fully_segmented())
    throw UnsupportedRegime(
        "equivalent timing errors are defined for fully segmented converters "
        "only");
  const double iu = taus.config.unit_current();
  TransitionSet out;
  out.equivalent_errors.resize(seq.size(), 0.0);
  out.charge_errors.resize(seq.size(), 0.0);
  for (std::size_t n = 0; n < seq.size(); ++n) {
    const Code dx = seq.delta(n);
    if (dx == 0) continue;
    const Code lo = std::min(seq.code(n), seq.previous(n));
    const Code hi = std::max(seq.code(n), seq.previous(n));
    if (lo < 0 || static_cast<std::size_t>(hi) > taus.offsets.size())
      throw std::logic_error("cell index out of range in transition " +
                             std::to_string(n));
    double sum = 0.0;
    for (Code m = lo; m < hi; ++m) sum += taus.offsets[static_cast<std::size_t>(m)];
    const double mag = static_cast<double>(hi - lo);
    const double t_eps = sum / mag;
    out.equivalent_errors[n] = t_eps;
    out.charge_errors[n] = iu * std::abs(static_cast<double>(dx) * t_eps);
  }
  return out;
}

}  // namespace csdac
