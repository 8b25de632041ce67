#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "csdac/dac_core.hpp"

namespace csdac {

/// How a firing instant that falls between oversample ticks is rendered.
///  grid_round:      the instant snaps to the nearest tick boundary.
///  fractional_edge: the straddled tick holds the tick-average of the step,
///                   so the integrated charge of every edge is exact.
enum class EdgeMode { grid_round, fractional_edge };

struct OversampledWaveform {
  std::vector<double> samples;  // amperes
  double sample_period = 0.0;   // seconds, T_s / OSR
  DacConfig config;

  std::size_t periods() const {
    return samples.size() /
           static_cast<std::size_t>(config.oversampling_ratio());
  }
};

/// A current step fired by one or more cells. `period` is the code period n
/// whose transition produced the edge and `offset` its firing instant
/// relative to n * T_s.
struct EdgeEvent {
  std::int64_t period = 0;
  double offset = 0.0;
  double amplitude_step = 0.0;

  double time(const DacConfig& cfg) const {
    return static_cast<double>(period) * cfg.sample_period() + offset;
  }
};

/// Supplies the firing edges of the transition x_{n-1} -> x_n.
class EdgeSource {
 public:
  virtual ~EdgeSource() = default;
  virtual void edges(std::size_t n, std::vector<EdgeEvent>& out) const = 0;
  virtual const DigitalSequence& sequence() const = 0;
  virtual const DacConfig& config() const = 0;
};

/// Every switching physical cell fires at n * T_s + tau_cell.
class PerCellEdges final : public EdgeSource {
 public:
  PerCellEdges(const DacConfig& cfg, const DigitalSequence& seq,
               const TimingErrorSet& taus);
  void edges(std::size_t n, std::vector<EdgeEvent>& out) const override;
  const DigitalSequence& sequence() const override { return seq_; }
  const DacConfig& config() const override { return cfg_; }

 private:
  DacConfig cfg_;
  const DigitalSequence& seq_;
  const TimingErrorSet& taus_;
};

/// The whole step I_u * dx_n fires at n * T_s + T_eps(n).
class EquivalentEdges final : public EdgeSource {
 public:
  EquivalentEdges(const DacConfig& cfg, const DigitalSequence& seq,
                  const TransitionSet& trans);
  void edges(std::size_t n, std::vector<EdgeEvent>& out) const override;
  const DigitalSequence& sequence() const override { return seq_; }
  const DacConfig& config() const override { return cfg_; }

 private:
  DacConfig cfg_;
  const DigitalSequence& seq_;
  const TransitionSet& trans_;
};

/// Period-by-period renderer. Period n depends on the edges of transition n
/// (late edges) and transition n + 1 (early edges), so only O(OSR) state is
/// needed to stream a record.
class PeriodRenderer {
 public:
  PeriodRenderer(const EdgeSource& source, EdgeMode mode);

  /// Writes the OSR samples of code period n into `out`.
  void render(std::size_t n, std::span<double> out);
  /// Writes only the deviation from the ideal output for period n.
  void render_error(std::size_t n, std::span<double> out);

 private:
  void apply_edges(std::size_t n, std::span<double> out);

  const EdgeSource& source_;
  EdgeMode mode_;
  std::vector<EdgeEvent> scratch_;
};

/// Half-open range of code periods to render.
struct PeriodWindow {
  std::size_t first = 0;
  std::size_t count = 0;

  static PeriodWindow all(const DigitalSequence& seq) {
    return {0, seq.size()};
  }
};

OversampledWaveform render_ideal(const DacConfig& cfg,
                                 const DigitalSequence& seq);
OversampledWaveform render_ideal(const DacConfig& cfg,
                                 const DigitalSequence& seq,
                                 PeriodWindow window);

OversampledWaveform render_percell(const DacConfig& cfg,
                                   const DigitalSequence& seq,
                                   const TimingErrorSet& taus, EdgeMode mode);
OversampledWaveform render_percell(const DacConfig& cfg,
                                   const DigitalSequence& seq,
                                   const TimingErrorSet& taus, EdgeMode mode,
                                   PeriodWindow window);

OversampledWaveform render_equivalent(const DacConfig& cfg,
                                      const DigitalSequence& seq,
                                      const TransitionSet& trans,
                                      EdgeMode mode);
OversampledWaveform render_equivalent(const DacConfig& cfg,
                                      const DigitalSequence& seq,
                                      const TransitionSet& trans,
                                      EdgeMode mode, PeriodWindow window);

/// Direct rendering of the sum of rectangular error pulses, charge exact.
OversampledWaveform error_pulse_train(const DacConfig& cfg,
                                      const DigitalSequence& seq,
                                      const TransitionSet& trans);

OversampledWaveform extract_error(const OversampledWaveform& nonideal,
                                  const OversampledWaveform& ideal);

/// Integral of the squared continuous-time error of one transition
/// (A^2 * s), computed from the exact piecewise-constant error defined by the
/// edges. This is the infinite-OSR limit of the sampled error energy.
double transition_error_energy(std::span<const EdgeEvent> edges);

/// Throws UnsupportedRegime if any cell offset reaches half a code period.
void check_offsets(const DacConfig& cfg, std::span<const double> offsets);

/// Little-endian float64 sample stream plus a `<path>.txt` header.
void write_waveform(const OversampledWaveform& w, const std::string& path);

}  // namespace csdac
