#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csdac/closed_form.hpp"
#include "csdac/dac_core.hpp"
#include "csdac/spectral.hpp"
#include "csdac/waveform.hpp"

namespace csdac {

enum class Model { equivalent, percell };
enum class SweepVariable { sigma_ratio, frequency_ratio, thermometer_bits };

/// How wideband error power is measured.
///  exact:   continuous-time integral of the squared error, edge by edge
///           (the OSR -> infinity limit of the sampled power).
///  sampled: mean square of the rendered oversampled error.
enum class WidebandRoute { exact, sampled };

struct SimOptions {
  EdgeMode edge_mode = EdgeMode::fractional_edge;
  WidebandRoute wideband_route = WidebandRoute::exact;
};

struct RunRecord {
  SweepVariable sweep_var = SweepVariable::sigma_ratio;
  double sweep_value = 0.0;
  std::size_t grid_index = 0;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  Model model = Model::equivalent;
  Band band = Band::wideband;
  int m_bits = 0;
  int t_bits = 0;
  int osr = 0;
  double f0_over_fs = 0.0;
  double sigma_over_ts = 0.0;
  double sdr_db = 0.0;
  double signal_power = 0.0;
  double error_power = 0.0;
  DeltaStats stats;

  bool unbounded() const { return !(error_power > 0.0); }
};

/// One simulated draw: warm-up, timing draw, ideal and nonideal rendering,
/// error extraction and one SDR per requested band. The record covers the
/// `tone.record_length` codes that follow a one-period warm-up.
std::vector<RunRecord> simulate(const DacConfig& cfg, const ToneSpec& tone,
                                double sigma_ratio, std::uint64_t seed,
                                Model model, std::span<const Band> bands,
                                const SimOptions& options = {});

RunRecord run_point(const DacConfig& cfg, const ToneSpec& tone,
                    double sigma_ratio, std::uint64_t seed, Model model,
                    Band band, const SimOptions& options = {});

/// Code sequence used for a run: one code period of warm-up, the record,
/// and one trailing code so early edges of the wrap-around transition land
/// inside the record.
struct RunSequence {
  DigitalSequence extended;
  PeriodWindow window;
  /// The record alone, with the steady-state wrap-around as initial code.
  DigitalSequence record;
};

RunSequence build_run_sequence(const DacConfig& cfg, const ToneSpec& tone);

struct SweepPlan {
  SweepVariable variable = SweepVariable::sigma_ratio;
  std::vector<double> grid;

  int m_bits = 3;
  std::optional<int> t_bits;  // unset: fully segmented
  int osr = 1024;
  double unit_current = 1.0;
  double sample_rate = 1.0;
  ToneSpec tone;
  double sigma_ratio = 3e-3;

  std::size_t runs = 50;
  std::vector<Model> models{Model::equivalent};
  std::vector<Band> bands{Band::wideband};
  std::uint64_t base_seed = 1;
  SimOptions options;

  void validate() const;
  DacConfig config_at(std::size_t grid_index) const;
  ToneSpec tone_at(std::size_t grid_index) const;
  double sigma_ratio_at(std::size_t grid_index) const;
};

/// Stable per-run seed; depends only on (base_seed, grid index, run index).
std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t grid_index,
                          std::size_t run);

struct AggregateRow {
  SweepVariable sweep_var = SweepVariable::sigma_ratio;
  double sweep_value = 0.0;
  std::size_t grid_index = 0;
  int m_bits = 0;
  int t_bits = 0;
  Model model = Model::equivalent;
  Band band = Band::wideband;
  std::size_t runs = 0;       // bounded records aggregated
  std::size_t unbounded = 0;  // records excluded for zero error power
  double sdr_db_mean = 0.0;
  double sdr_db_ci95 = 0.0;   // 1.96 s / sqrt(runs), on dB values
};

/// Mean and 95% normal-approximation half-width of the bounded SDRs of each
/// (grid point, model, band) group. Independent of record order.
std::vector<AggregateRow> aggregate(std::span<const RunRecord> records);

struct SweepResult {
  std::vector<RunRecord> records;
  std::vector<AggregateRow> aggregates;
  /// Excluded unbounded records, and grid points whose zero-sigma
  /// measurement does not clear the mean SDR by 20 dB.
  std::vector<std::string> diagnostics;
};

/// Runs every grid x run point on `parallelism` workers. Records come back
/// sorted by (grid index, run, model, band) whatever the worker count.
SweepResult run_sweep(const SweepPlan& plan, std::size_t parallelism = 1);

struct TraceBundle {
  DigitalSequence record;
  std::vector<TransitionTrace> traces;
};

/// Squared-error traces around selected transitions of one run. Selection
/// indices are code positions within the record; unset picks the first
/// occurrence of each distinct code step, up to `max_default` of them.
TraceBundle capture_traces(const DacConfig& cfg, const ToneSpec& tone,
                           double sigma_ratio, std::uint64_t seed, Model model,
                           std::size_t window_ticks,
                           std::optional<std::vector<std::size_t>> selection,
                           const SimOptions& options = {},
                           std::size_t max_default = 8);

struct Preset {
  int osr;
  SimOptions options;
};

/// OSR 1024, charge-exact edges, exact wideband power.
Preset desk_preset();
/// OSR 4096, grid-snapped edges, sampled wideband power.
Preset fine_preset();

extern const char* const kRecordHeader;
extern const char* const kAggregateHeader;

void write_records_csv(std::ostream& os, std::span<const RunRecord> records);
void write_aggregates_csv(std::ostream& os,
                          std::span<const AggregateRow> rows);

std::string to_string(Model m);
std::string to_string(SweepVariable v);
std::string to_string(EdgeMode m);
std::string to_string(WidebandRoute r);

}  // namespace csdac
