#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "csdac/errors.hpp"

namespace csdac {

using Code = std::int64_t;

/// Static description of a (possibly partially) segmented current-steering
/// DAC. The T most significant bits drive 2^T - 1 equally weighted
/// thermometer cells; the remaining M - T bits drive binary-weighted cells.
/// T == M is the fully segmented converter with 2^M - 1 unit cells.
class DacConfig {
 public:
  DacConfig(int resolution_bits, int thermometer_bits, int oversampling_ratio,
            double unit_current = 1.0, double sample_rate = 1.0);

  /// Fully segmented converter.
  static DacConfig fully_segmented(int resolution_bits, int oversampling_ratio,
                                   double unit_current = 1.0,
                                   double sample_rate = 1.0);

  int resolution_bits() const { return resolution_bits_; }
  int thermometer_bits() const { return thermometer_bits_; }
  int oversampling_ratio() const { return oversampling_ratio_; }
  double unit_current() const { return unit_current_; }
  double sample_rate() const { return sample_rate_; }

  double sample_period() const { return 1.0 / sample_rate_; }
  double tick() const { return sample_period() / oversampling_ratio_; }
  Code max_code() const { return (Code{1} << resolution_bits_) - 1; }
  bool is_fully_segmented() const {
    return thermometer_bits_ == resolution_bits_;
  }

  int binary_bits() const { return resolution_bits_ - thermometer_bits_; }
  std::size_t thermometer_cell_count() const {
    return (std::size_t{1} << thermometer_bits_) - 1;
  }
  Code thermometer_weight() const { return Code{1} << binary_bits(); }
  std::size_t physical_cell_count() const {
    return thermometer_cell_count() + static_cast<std::size_t>(binary_bits());
  }

  /// Weight in LSB units of a physical cell. Thermometer cells come first
  /// (index order t_0, t_1, ...), then binary cells in descending weight.
  Code cell_weight(std::size_t cell) const;

  /// Physical index of the binary cell driving bit `bit` (0 = LSB).
  std::size_t binary_cell_index(int bit) const {
    return thermometer_cell_count() +
           static_cast<std::size_t>(binary_bits() - 1 - bit);
  }

  bool operator==(const DacConfig&) const = default;

 private:
  int resolution_bits_;
  int thermometer_bits_;
  int oversampling_ratio_;
  double unit_current_;
  double sample_rate_;
};

/// Coherent single tone. `amplitude` is in LSB units; unset means full scale.
struct ToneSpec {
  double frequency_ratio = 0.01;
  std::size_t record_length = 1000;
  std::optional<double> amplitude;
  double phase = 0.0;

  double amplitude_for(const DacConfig& cfg) const;
  /// Integer number of cycles in the record; throws if not coherent.
  std::int64_t cycles() const;
  /// Length of the shortest exact repeat of the sampled tone, in codes.
  std::size_t code_period() const;
  void validate(const DacConfig& cfg) const;
};

class DigitalSequence {
 public:
  DigitalSequence(const DacConfig& cfg, std::vector<Code> codes,
                  Code initial_code = 0);

  std::span<const Code> codes() const { return codes_; }
  std::span<const Code> deltas() const { return deltas_; }
  Code initial_code() const { return initial_code_; }
  std::size_t size() const { return codes_.size(); }
  Code code(std::size_t n) const { return codes_[n]; }
  /// x_{n-1}, with x_{-1} the configured initial code.
  Code previous(std::size_t n) const {
    return n == 0 ? initial_code_ : codes_[n - 1];
  }
  Code delta(std::size_t n) const { return deltas_[n]; }

 private:
  std::vector<Code> codes_;
  std::vector<Code> deltas_;
  Code initial_code_;
};

/// Same codes, with the initial code taken as the last code of the record so
/// the first transition is the steady-state wrap-around of a periodic input.
DigitalSequence with_periodic_start(const DacConfig& cfg,
                                    const DigitalSequence& seq);

struct TimingErrorSet {
  std::vector<double> offsets;  // seconds, one per physical cell
  double sigma = 0.0;
  std::uint64_t seed = 0;
  DacConfig config;
};

struct TransitionSet {
  std::vector<double> equivalent_errors;  // T_eps(n), seconds
  std::vector<double> charge_errors;      // Q_eps(n), coulombs
};

/// Thermometer code of `code` over `width` cells, t_0 first.
std::vector<std::uint8_t> binary_to_thermometer(Code code, std::size_t width);

DigitalSequence generate_tone_codes(const DacConfig& cfg, const ToneSpec& tone,
                                    Code initial_code = 0);

/// `count` i.i.d. N(0, sigma^2) samples from a seeded stream.
std::vector<double> draw_normal(std::size_t count, double sigma,
                                std::uint64_t seed);

TimingErrorSet draw_timing_errors(const DacConfig& cfg, double sigma,
                                  std::uint64_t seed);

/// Equivalent timing error and charge error of every transition. Only defined
/// for fully segmented converters.
TransitionSet equivalent_timing_errors(const DigitalSequence& seq,
                                       const TimingErrorSet& taus);

}  // namespace csdac
