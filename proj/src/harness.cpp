#include "csdac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

namespace csdac {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string fmt9(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::unique_ptr<EdgeSource> make_source(Model model, const DacConfig& cfg,
                                        const DigitalSequence& seq,
                                        const TimingErrorSet& taus,
                                        std::optional<TransitionSet>& trans) {
  if (model == Model::percell)
    return std::make_unique<PerCellEdges>(cfg, seq, taus);
  trans = equivalent_timing_errors(seq, taus);
  return std::make_unique<EquivalentEdges>(cfg, seq, *trans);
}

OversampledWaveform render_nonideal(Model model, const DacConfig& cfg,
                                    const DigitalSequence& seq,
                                    const TimingErrorSet& taus,
                                    const std::optional<TransitionSet>& trans,
                                    EdgeMode mode, PeriodWindow window) {
  if (model == Model::percell)
    return render_percell(cfg, seq, taus, mode, window);
  return render_equivalent(cfg, seq, *trans, mode, window);
}

void check_model(Model model, const DacConfig& cfg) {
  if (model == Model::equivalent && !cfg.is_fully_segmented())
    throw UnsupportedRegime(
        "the equivalent timing error model needs a fully segmented converter; "
        "use the per-cell model");
}

}  // namespace

RunSequence build_run_sequence(const DacConfig& cfg, const ToneSpec& tone) {
  const auto base = generate_tone_codes(cfg, tone);
  const std::size_t n = tone.record_length;
  const std::size_t warmup = tone.code_period();
  // The sampled tone repeats every `warmup` codes and `warmup` divides n.
  std::vector<Code> ext(warmup + n + 1);
  for (std::size_t i = 0; i < ext.size(); ++i) ext[i] = base.code(i % n);
  std::vector<Code> rec(ext.begin() + static_cast<std::ptrdiff_t>(warmup),
                        ext.begin() + static_cast<std::ptrdiff_t>(warmup + n));
  DigitalSequence extended(cfg, std::move(ext));
  DigitalSequence record(cfg, std::move(rec), extended.code(warmup - 1));
  return {std::move(extended), PeriodWindow{warmup, n}, std::move(record)};
}

std::vector<RunRecord> simulate(const DacConfig& cfg, const ToneSpec& tone,
                                double sigma_ratio, std::uint64_t seed,
                                Model model, std::span<const Band> bands,
                                const SimOptions& options) {
  check_model(model, cfg);
  if (!(sigma_ratio >= 0.0)) throw DomainError("sigma ratio must be >= 0");
  const auto rs = build_run_sequence(cfg, tone);
  const auto taus =
      draw_timing_errors(cfg, sigma_ratio * cfg.sample_period(), seed);
  check_offsets(cfg, taus.offsets);

  std::optional<TransitionSet> trans;
  const auto source = make_source(model, cfg, rs.extended, taus, trans);

  const auto ideal = render_ideal(cfg, rs.extended, rs.window);
  const double p_sig = fundamental_power(ideal);

  std::optional<OversampledWaveform> error;
  auto sampled_error = [&]() -> const OversampledWaveform& {
    if (!error)
      error = extract_error(render_nonideal(model, cfg, rs.extended, taus,
                                            trans, options.edge_mode,
                                            rs.window),
                            ideal);
    return *error;
  };

  RunRecord proto;
  proto.seed = seed;
  proto.model = model;
  proto.m_bits = cfg.resolution_bits();
  proto.t_bits = cfg.thermometer_bits();
  proto.osr = cfg.oversampling_ratio();
  proto.f0_over_fs = tone.frequency_ratio;
  proto.sigma_over_ts = sigma_ratio;
  proto.stats = delta_stats(rs.record);

  std::vector<RunRecord> out;
  for (Band band : bands) {
    SdrReport rep;
    if (band == Band::nyquist) {
      rep = nyquist_sdr(ideal, sampled_error());
    } else if (options.wideband_route == WidebandRoute::sampled) {
      rep = wideband_sdr(ideal, sampled_error());
    } else {
      std::vector<EdgeEvent> edges;
      double energy = 0.0;
      for (std::size_t n = rs.window.first;
           n < rs.window.first + rs.window.count; ++n) {
        source->edges(n, edges);
        energy += transition_error_energy(edges);
      }
      const double duration =
          static_cast<double>(rs.window.count) * cfg.sample_period();
      rep = make_sdr_report(p_sig, energy / duration, Band::wideband);
    }
    RunRecord r = proto;
    r.band = band;
    r.sdr_db = rep.sdr_db;
    r.signal_power = rep.signal_power;
    r.error_power = rep.error_power;
    out.push_back(r);
  }
  return out;
}

RunRecord run_point(const DacConfig& cfg, const ToneSpec& tone,
                    double sigma_ratio, std::uint64_t seed, Model model,
                    Band band, const SimOptions& options) {
  const Band bands[] = {band};
  return simulate(cfg, tone, sigma_ratio, seed, model, bands, options).front();
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t grid_index,
                          std::size_t run) {
  const std::uint64_t h =
      splitmix64(splitmix64(static_cast<std::uint64_t>(grid_index)) ^
                 splitmix64(~static_cast<std::uint64_t>(run)));
  return base_seed ^ h;
}

void SweepPlan::validate() const {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  const bool up = grid.size() < 2 || grid[1] > grid[0];
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (up ? !(grid[i] > grid[i - 1]) : !(grid[i] < grid[i - 1]))
      throw ConfigError("sweep grid must be strictly monotone");
  if (runs < 2) throw ConfigError("runs must be at least 2");
  if (models.empty()) throw ConfigError("no model selected");
  if (bands.empty()) throw ConfigError("no band selected");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto cfg = config_at(g);
    tone_at(g).validate(cfg);
    if (!(sigma_ratio_at(g) >= 0.0) || !(sigma_ratio_at(g) < 0.5))
      throw ConfigError("sigma ratio must be in [0, 0.5)");
    for (Model m : models)
      if (m == Model::equivalent && !cfg.is_fully_segmented())
        throw ConfigError(
            "equivalent model requested for a partially segmented grid point");
  }
}

DacConfig SweepPlan::config_at(std::size_t g) const {
  int t = t_bits.value_or(m_bits);
  if (variable == SweepVariable::thermometer_bits) {
    const double v = grid.at(g);
    if (v != std::round(v))
      throw ConfigError("thermometer bits must be integers");
    t = static_cast<int>(v);
  }
  return DacConfig(m_bits, t, osr, unit_current, sample_rate);
}

ToneSpec SweepPlan::tone_at(std::size_t g) const {
  ToneSpec t = tone;
  if (variable == SweepVariable::frequency_ratio) t.frequency_ratio = grid.at(g);
  return t;
}

double SweepPlan::sigma_ratio_at(std::size_t g) const {
  return variable == SweepVariable::sigma_ratio ? grid.at(g) : sigma_ratio;
}

std::vector<AggregateRow> aggregate(std::span<const RunRecord> records) {
  using Key = std::tuple<std::size_t, int, int>;
  std::map<Key, std::vector<const RunRecord*>> groups;
  for (const auto& r : records)
    groups[{r.grid_index, static_cast<int>(r.model), static_cast<int>(r.band)}]
        .push_back(&r);

  std::vector<AggregateRow> rows;
  for (auto& [key, members] : groups) {
    // Sum in a fixed order so the result does not depend on input order.
    std::sort(members.begin(), members.end(),
              [](const RunRecord* a, const RunRecord* b) {
                return std::tie(a->run, a->seed) < std::tie(b->run, b->seed);
              });
    const auto& first = *members.front();
    AggregateRow row;
    row.sweep_var = first.sweep_var;
    row.sweep_value = first.sweep_value;
    row.grid_index = first.grid_index;
    row.m_bits = first.m_bits;
    row.t_bits = first.t_bits;
    row.model = first.model;
    row.band = first.band;
    double sum = 0.0;
    for (const auto* m : members) {
      if (m->unbounded()) {
        ++row.unbounded;
        continue;
      }
      ++row.runs;
      sum += m->sdr_db;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.sdr_db_mean = row.runs ? sum / static_cast<double>(row.runs) : nan;
    if (row.runs >= 2) {
      double ss = 0.0;
      for (const auto* m : members)
        if (!m->unbounded()) ss += (m->sdr_db - row.sdr_db_mean) * (m->sdr_db - row.sdr_db_mean);
      const double s = std::sqrt(ss / static_cast<double>(row.runs - 1));
      row.sdr_db_ci95 = 1.96 * s / std::sqrt(static_cast<double>(row.runs));
    } else {
      row.sdr_db_ci95 = nan;
    }
    rows.push_back(row);
  }
  return rows;
}

SweepResult run_sweep(const SweepPlan& plan, std::size_t parallelism) {
  plan.validate();
  const std::size_t points = plan.grid.size() * plan.runs;
  std::vector<std::vector<RunRecord>> slots(points);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::exception_ptr first_error;
  std::size_t first_error_point = points;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points || failed.load()) return;
      const std::size_t g = i / plan.runs;
      const std::size_t r = i % plan.runs;
      try {
        const auto cfg = plan.config_at(g);
        const auto tone = plan.tone_at(g);
        const auto seed = derive_seed(plan.base_seed, g, r);
        for (Model m : plan.models) {
          auto recs = simulate(cfg, tone, plan.sigma_ratio_at(g), seed, m,
                               plan.bands, plan.options);
          for (auto& rec : recs) {
            rec.sweep_var = plan.variable;
            rec.sweep_value = plan.grid[g];
            rec.grid_index = g;
            rec.run = r;
            slots[i].push_back(rec);
          }
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        if (i < first_error_point) {
          first_error_point = i;
          first_error = std::make_exception_ptr(std::runtime_error(
              "sweep point failed (" + to_string(plan.variable) + "=" +
              fmt9(plan.grid[g]) + ", grid index " + std::to_string(g) +
              ", run " + std::to_string(r) + "): " + e.what()));
        }
        failed.store(true);
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(parallelism, points));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (first_error) std::rethrow_exception(first_error);

  SweepResult result;
  for (auto& s : slots)
    for (auto& r : s) result.records.push_back(std::move(r));
  std::sort(result.records.begin(), result.records.end(),
            [](const RunRecord& a, const RunRecord& b) {
              return std::make_tuple(a.grid_index, a.run, static_cast<int>(a.model),
                                     static_cast<int>(a.band)) <
                     std::make_tuple(b.grid_index, b.run, static_cast<int>(b.model),
                                     static_cast<int>(b.band));
            });
  result.aggregates = aggregate(result.records);

  // A zero-sigma run measures the floor of the differencing method itself;
  // it must sit at least 20 dB above every timing-error SDR under test.
  for (std::size_t g = 0; g < plan.grid.size(); ++g) {
    const auto cfg = plan.config_at(g);
    for (Model m : plan.models) {
      const auto floor_recs =
          simulate(cfg, plan.tone_at(g), 0.0, plan.base_seed, m, plan.bands,
                   plan.options);
      for (const auto& fr : floor_recs)
        for (const auto& row : result.aggregates)
          if (row.grid_index == g && row.model == m && row.band == fr.band &&
              row.runs > 0 && !(fr.sdr_db >= row.sdr_db_mean + 20.0))
            result.diagnostics.push_back(
                "zero-sigma floor " + fmt9(fr.sdr_db) +
                " dB is within 20 dB of " + to_string(m) + "/" +
                to_string(fr.band) + " mean SDR at " +
                to_string(plan.variable) + "=" + fmt9(row.sweep_value));
    }
    std::size_t unbounded = 0;
    for (const auto& row : result.aggregates)
      if (row.grid_index == g) unbounded += row.unbounded;
    if (unbounded > 0)
      result.diagnostics.push_back(
          std::to_string(unbounded) + " unbounded-SDR records excluded at " +
          to_string(plan.variable) + "=" + fmt9(plan.grid[g]));
  }
  return result;
}

TraceBundle capture_traces(const DacConfig& cfg, const ToneSpec& tone,
                           double sigma_ratio, std::uint64_t seed, Model model,
                           std::size_t window_ticks,
                           std::optional<std::vector<std::size_t>> selection,
                           const SimOptions& options, std::size_t max_default) {
  check_model(model, cfg);
  auto rs = build_run_sequence(cfg, tone);
  if (selection) {
    for (std::size_t n : *selection)
      if (n >= rs.record.size())
        throw DomainError("transition " + std::to_string(n) +
                          " is outside the record of " +
                          std::to_string(rs.record.size()) + " codes");
  } else {
    std::vector<std::size_t> picks;
    std::vector<Code> seen;
    for (std::size_t n = 0; n < rs.record.size() && picks.size() < max_default;
         ++n) {
      const Code d = rs.record.delta(n);
      if (d == 0 || std::find(seen.begin(), seen.end(), d) != seen.end())
        continue;
      seen.push_back(d);
      picks.push_back(n);
    }
    selection = std::move(picks);
  }

  const auto taus =
      draw_timing_errors(cfg, sigma_ratio * cfg.sample_period(), seed);
  check_offsets(cfg, taus.offsets);
  std::optional<TransitionSet> trans;
  if (model == Model::equivalent)
    trans = equivalent_timing_errors(rs.extended, taus);
  const auto ideal = render_ideal(cfg, rs.extended, rs.window);
  const auto error = extract_error(
      render_nonideal(model, cfg, rs.extended, taus, trans, options.edge_mode,
                      rs.window),
      ideal);
  auto traces =
      transition_traces(error, rs.record, window_ticks, std::move(selection), true);
  return {std::move(rs.record), std::move(traces)};
}

Preset desk_preset() {
  return {1024, {EdgeMode::fractional_edge, WidebandRoute::exact}};
}

Preset fine_preset() {
  return {4096, {EdgeMode::grid_round, WidebandRoute::sampled}};
}

const char* const kRecordHeader =
    "sweep_var,sweep_value,m_bits,t_bits,osr,f0_over_fs,sigma_over_ts,model,"
    "band,run,seed,sdr_db,signal_power,error_power";
const char* const kAggregateHeader =
    "sweep_var,sweep_value,m_bits,t_bits,model,band,runs,sdr_db_mean,"
    "sdr_db_ci95";

void write_records_csv(std::ostream& os, std::span<const RunRecord> records) {
  os << kRecordHeader << '\n';
  for (const auto& r : records) {
    os << to_string(r.sweep_var) << ',' << fmt9(r.sweep_value) << ','
       << r.m_bits << ',' << r.t_bits << ',' << r.osr << ','
       << fmt9(r.f0_over_fs) << ',' << fmt9(r.sigma_over_ts) << ','
       << to_string(r.model) << ',' << to_string(r.band) << ',' << r.run << ','
       << r.seed << ',' << fmt9(r.sdr_db) << ',' << fmt9(r.signal_power) << ','
       << fmt9(r.error_power) << '\n';
  }
}

void write_aggregates_csv(std::ostream& os,
                          std::span<const AggregateRow> rows) {
  os << kAggregateHeader << '\n';
  for (const auto& r : rows) {
    os << to_string(r.sweep_var) << ',' << fmt9(r.sweep_value) << ','
       << r.m_bits << ',' << r.t_bits << ',' << to_string(r.model) << ','
       << to_string(r.band) << ',' << r.runs << ',' << fmt9(r.sdr_db_mean)
       << ',' << fmt9(r.sdr_db_ci95) << '\n';
  }
}

std::string to_string(Model m) {
  return m == Model::equivalent ? "equivalent" : "percell";
}

std::string to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::sigma_ratio: return "sigma_ratio";
    case SweepVariable::frequency_ratio: return "frequency_ratio";
    case SweepVariable::thermometer_bits: return "thermometer_bits";
  }
  return "?";
}

std::string to_string(EdgeMode m) {
  return m == EdgeMode::grid_round ? "grid_round" : "fractional_edge";
}

std::string to_string(WidebandRoute r) {
  return r == WidebandRoute::exact ? "exact" : "sampled";
}

}  // namespace csdac
