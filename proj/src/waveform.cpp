#include "csdac/waveform.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <utility>

namespace csdac {

namespace {

// Adds `value` over tick-unit interval [a, b) of a period-local buffer.
void add_interval(std::span<double> out, double a, double b, double value,
                  EdgeMode mode) {
  const auto len = static_cast<double>(out.size());
  if (mode == EdgeMode::grid_round) {
    a = std::round(a);
    b = std::round(b);
  }
  a = std::clamp(a, 0.0, len);
  b = std::clamp(b, 0.0, len);
  if (!(b > a)) return;
  const auto first = static_cast<std::size_t>(std::floor(a));
  const auto last = std::min(out.size(), static_cast<std::size_t>(std::ceil(b)));
  for (std::size_t k = first; k < last; ++k) {
    const double lo = std::max(a, static_cast<double>(k));
    const double hi = std::min(b, static_cast<double>(k + 1));
    out[k] += value * (hi - lo);
  }
}

OversampledWaveform blank(const DacConfig& cfg, std::size_t periods) {
  OversampledWaveform w{
      std::vector<double>(periods * static_cast<std::size_t>(
                                        cfg.oversampling_ratio()),
                          0.0),
      cfg.tick(), cfg};
  return w;
}

OversampledWaveform render_stream(const EdgeSource& src, EdgeMode mode,
                                  PeriodWindow window) {
  const auto& cfg = src.config();
  if (window.first + window.count > src.sequence().size())
    throw DomainError("period window exceeds the sequence");
  auto w = blank(cfg, window.count);
  const auto osr = static_cast<std::size_t>(cfg.oversampling_ratio());
  PeriodRenderer r(src, mode);
  for (std::size_t i = 0; i < window.count; ++i)
    r.render(window.first + i, std::span(w.samples).subspan(i * osr, osr));
  return w;
}

}  // namespace

PerCellEdges::PerCellEdges(const DacConfig& cfg, const DigitalSequence& seq,
                           const TimingErrorSet& taus)
    : cfg_(cfg), seq_(seq), taus_(taus) {
  if (taus.offsets.size() != cfg.physical_cell_count())
    throw DomainError("timing error set does not match the cell inventory");
}

void PerCellEdges::edges(std::size_t n, std::vector<EdgeEvent>& out) const {
  out.clear();
  const Code a = seq_.previous(n);
  const Code b = seq_.code(n);
  if (a == b) return;
  const double iu = cfg_.unit_current();
  const auto period = static_cast<std::int64_t>(n);

  const int shift = cfg_.binary_bits();
  const Code ta = a >> shift;
  const Code tb = b >> shift;
  if (ta != tb) {
    const double step = (tb > ta ? 1.0 : -1.0) *
                        static_cast<double>(cfg_.thermometer_weight()) * iu;
    for (Code i = std::min(ta, tb); i < std::max(ta, tb); ++i)
      out.push_back({period, taus_.offsets[static_cast<std::size_t>(i)], step});
  }
  for (int bit = 0; bit < shift; ++bit) {
    const Code ba = (a >> bit) & 1;
    const Code bb = (b >> bit) & 1;
    if (ba == bb) continue;
    const double step =
        static_cast<double>((bb - ba) * (Code{1} << bit)) * iu;
    out.push_back({period, taus_.offsets[cfg_.binary_cell_index(bit)], step});
  }
}

EquivalentEdges::EquivalentEdges(const DacConfig& cfg,
                                 const DigitalSequence& seq,
                                 const TransitionSet& trans)
    : cfg_(cfg), seq_(seq), trans_(trans) {
  if (trans.equivalent_errors.size() != seq.size())
    throw DomainError("transition set does not match the sequence length");
}

void EquivalentEdges::edges(std::size_t n, std::vector<EdgeEvent>& out) const {
  out.clear();
  const Code dx = seq_.delta(n);
  if (dx == 0) return;
  out.push_back({static_cast<std::int64_t>(n), trans_.equivalent_errors[n],
                 static_cast<double>(dx) * cfg_.unit_current()});
}

PeriodRenderer::PeriodRenderer(const EdgeSource& source, EdgeMode mode)
    : source_(source), mode_(mode) {}

void PeriodRenderer::render(std::size_t n, std::span<double> out) {
  const double level = static_cast<double>(source_.sequence().code(n)) *
                       source_.config().unit_current();
  std::fill(out.begin(), out.end(), level);
  apply_edges(n, out);
}

void PeriodRenderer::render_error(std::size_t n, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  apply_edges(n, out);
}

void PeriodRenderer::apply_edges(std::size_t n, std::span<double> out) {
  const double tick = source_.config().tick();
  const auto osr = static_cast<double>(out.size());
  // A late edge of transition n holds the previous level over [0, tau).
  source_.edges(n, scratch_);
  for (const auto& e : scratch_)
    if (e.offset > 0.0)
      add_interval(out, 0.0, e.offset / tick, -e.amplitude_step, mode_);
  // An early edge of transition n + 1 reaches into the tail of period n.
  if (n + 1 < source_.sequence().size()) {
    source_.edges(n + 1, scratch_);
    for (const auto& e : scratch_)
      if (e.offset < 0.0)
        add_interval(out, osr + e.offset / tick, osr, e.amplitude_step, mode_);
  }
}

void check_offsets(const DacConfig& cfg, std::span<const double> offsets) {
  const double limit = cfg.sample_period() / 2.0;
  for (std::size_t i = 0; i < offsets.size(); ++i)
    if (!(std::abs(offsets[i]) < limit))
      throw UnsupportedRegime("timing offset " + std::to_string(offsets[i]) +
                              " s at index " + std::to_string(i) +
                              " is not below half a code period");
}

OversampledWaveform render_ideal(const DacConfig& cfg,
                                 const DigitalSequence& seq) {
  return render_ideal(cfg, seq, PeriodWindow::all(seq));
}

OversampledWaveform render_ideal(const DacConfig& cfg,
                                 const DigitalSequence& seq,
                                 PeriodWindow window) {
  if (window.first + window.count > seq.size())
    throw DomainError("period window exceeds the sequence");
  auto w = blank(cfg, window.count);
  const auto osr = static_cast<std::size_t>(cfg.oversampling_ratio());
  for (std::size_t i = 0; i < window.count; ++i) {
    const double level =
        static_cast<double>(seq.code(window.first + i)) * cfg.unit_current();
    std::fill_n(w.samples.begin() + static_cast<std::ptrdiff_t>(i * osr), osr,
                level);
  }
  return w;
}

OversampledWaveform render_percell(const DacConfig& cfg,
                                   const DigitalSequence& seq,
                                   const TimingErrorSet& taus, EdgeMode mode) {
  return render_percell(cfg, seq, taus, mode, PeriodWindow::all(seq));
}

OversampledWaveform render_percell(const DacConfig& cfg,
                                   const DigitalSequence& seq,
                                   const TimingErrorSet& taus, EdgeMode mode,
                                   PeriodWindow window) {
  check_offsets(cfg, taus.offsets);
  const PerCellEdges src(cfg, seq, taus);
  return render_stream(src, mode, window);
}

OversampledWaveform render_equivalent(const DacConfig& cfg,
                                      const DigitalSequence& seq,
                                      const TransitionSet& trans,
                                      EdgeMode mode) {
  return render_equivalent(cfg, seq, trans, mode, PeriodWindow::all(seq));
}

OversampledWaveform render_equivalent(const DacConfig& cfg,
                                      const DigitalSequence& seq,
                                      const TransitionSet& trans,
                                      EdgeMode mode, PeriodWindow window) {
  check_offsets(cfg, trans.equivalent_errors);
  const EquivalentEdges src(cfg, seq, trans);
  return render_stream(src, mode, window);
}

OversampledWaveform error_pulse_train(const DacConfig& cfg,
                                      const DigitalSequence& seq,
                                      const TransitionSet& trans) {
  check_offsets(cfg, trans.equivalent_errors);
  if (trans.equivalent_errors.size() != seq.size())
    throw DomainError("transition set does not match the sequence length");
  auto w = blank(cfg, seq.size());
  const double osr = cfg.oversampling_ratio();
  const double tick = cfg.tick();
  const double total = static_cast<double>(w.samples.size());
  for (std::size_t n = 0; n < seq.size(); ++n) {
    const double t_eps = trans.equivalent_errors[n];
    const Code dx = seq.delta(n);
    if (dx == 0 || t_eps == 0.0) continue;
    const double height = (t_eps > 0.0 ? -1.0 : 1.0) * cfg.unit_current() *
                          static_cast<double>(dx);
    const double nominal = static_cast<double>(n) * osr;
    const double start = std::max(0.0, nominal + std::min(0.0, t_eps / tick));
    const double stop = std::min(total, nominal + std::max(0.0, t_eps / tick));
    for (auto k = static_cast<std::size_t>(std::floor(start));
         static_cast<double>(k) < stop; ++k) {
      const double overlap = std::min(stop, static_cast<double>(k) + 1.0) -
                             std::max(start, static_cast<double>(k));
      if (overlap > 0.0) w.samples[k] += height * overlap;
    }
  }
  return w;
}

OversampledWaveform extract_error(const OversampledWaveform& nonideal,
                                  const OversampledWaveform& ideal) {
  if (nonideal.samples.size() != ideal.samples.size())
    throw DomainError("waveform lengths differ");
  if (!(nonideal.config == ideal.config) ||
      nonideal.sample_period != ideal.sample_period)
    throw DomainError("waveforms were rendered under different configurations");
  OversampledWaveform e{std::vector<double>(ideal.samples.size()),
                        ideal.sample_period, ideal.config};
  std::transform(nonideal.samples.begin(), nonideal.samples.end(),
                 ideal.samples.begin(), e.samples.begin(), std::minus<>());
  return e;
}

double transition_error_energy(std::span<const EdgeEvent> edges) {
  if (edges.empty()) return 0.0;
  // e(t) = sum_j step_j * ([t >= offset_j] - [t >= 0]).
  std::vector<std::pair<double, double>> events;
  events.reserve(edges.size() + 1);
  double total = 0.0;
  for (const auto& e : edges) {
    events.emplace_back(e.offset, e.amplitude_step);
    total += e.amplitude_step;
  }
  events.emplace_back(0.0, -total);
  std::sort(events.begin(), events.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  double level = 0.0;
  double energy = 0.0;
  for (std::size_t i = 0; i + 1 < events.size(); ++i) {
    level += events[i].second;
    energy += level * level * (events[i + 1].first - events[i].first);
  }
  return energy;
}

void write_waveform(const OversampledWaveform& w, const std::string& path) {
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + path + " for writing");
  for (double v : w.samples) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big)
      bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    bin.write(buf, 8);
  }
  if (!bin) throw std::runtime_error("write failed: " + path);

  std::ofstream hdr(path + ".txt");
  if (!hdr) throw std::runtime_error("cannot open " + path + ".txt");
  hdr << std::setprecision(17);
  hdr << "format = float64le\n"
      << "sample_period = " << w.sample_period << "\n"
      << "length = " << w.samples.size() << "\n"
      << "m_bits = " << w.config.resolution_bits() << "\n"
      << "t_bits = " << w.config.thermometer_bits() << "\n"
      << "osr = " << w.config.oversampling_ratio() << "\n"
      << "unit_current = " << w.config.unit_current() << "\n"
      << "sample_rate = " << w.config.sample_rate() << "\n";
}

}  // namespace csdac
