#include "csdac/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "csdac/closed_form.hpp"
#include "csdac/harness.hpp"

namespace csdac::cli {

namespace {

const char* const kVersion = "csdac " CSDAC_VERSION;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

std::string g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct Common {
  int m = 3;
  int t = -1;  // -1: fully segmented
  int osr = 1024;
  std::size_t n = 1000;
  double f0 = 0.01;
  double sigma_ratio = 3e-3;
  std::uint64_t seed = 1;
  std::string model = "equivalent";
  std::string preset = "desk";
  std::string edge_mode = "fractional_edge";
  std::string wideband_route = "exact";
  std::string out_dir = ".";
  std::string name;
};

struct SweepArgs : Common {
  std::string var = "sigma";
  std::string grid;
  std::size_t runs = 50;
  std::string band = "wideband";
  std::size_t jobs = 1;
};

struct TraceArgs : Common {
  std::size_t window = 0;  // 0: OSR / 64
  std::string transitions;
};

struct PredictArgs {
  int m = 8;
  std::size_t n = 1000;
  double f0 = 0.01;
  double sigma_ratio = 0.0;
  std::string csv;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--m", c.m, "Resolution in bits")->capture_default_str();
  sub->add_option("--t", c.t, "Thermometer bits (-1: fully segmented)")
      ->capture_default_str();
  sub->add_option("--osr", c.osr, "Oversampling ratio")->capture_default_str();
  sub->add_option("--n", c.n, "Record length in codes")->capture_default_str();
  sub->add_option("--f0", c.f0, "Tone frequency f0/fs")->capture_default_str();
  sub->add_option("--sigma-ratio", c.sigma_ratio, "Timing spread sigma/Ts")
      ->capture_default_str();
  sub->add_option("--seed", c.seed, "Base seed")->capture_default_str();
  sub->add_option("--model", c.model, "Error model")
      ->check(CLI::IsMember({"equivalent", "percell", "both"}))
      ->capture_default_str();
  sub->add_option("--preset", c.preset, "desk or fine")
      ->check(CLI::IsMember({"desk", "fine"}))
      ->capture_default_str();
  sub->add_option("--edge-mode", c.edge_mode, "Sub-tick edge rendering")
      ->check(CLI::IsMember({"fractional_edge", "grid_round"}));
  sub->add_option("--wideband-route", c.wideband_route,
                  "Wideband error power: exact or sampled")
      ->check(CLI::IsMember({"exact", "sampled"}));
  sub->add_option("--out-dir", c.out_dir, "Output directory")
      ->envname(kOutputDirEnv)
      ->capture_default_str();
  sub->add_option("--name", c.name, "Output file stem")->capture_default_str();
}

// Fills the preset's values into options the user did not set.
void apply_preset(CLI::App* sub, Common& c) {
  const Preset p = c.preset == "fine" ? fine_preset() : desk_preset();
  if (sub->get_option("--osr")->count() == 0) c.osr = p.osr;
  if (sub->get_option("--edge-mode")->count() == 0)
    c.edge_mode = to_string(p.options.edge_mode);
  if (sub->get_option("--wideband-route")->count() == 0)
    c.wideband_route = to_string(p.options.wideband_route);
}

SimOptions sim_options(const Common& c) {
  return {c.edge_mode == "grid_round" ? EdgeMode::grid_round
                                      : EdgeMode::fractional_edge,
          c.wideband_route == "sampled" ? WidebandRoute::sampled
                                        : WidebandRoute::exact};
}

std::vector<Model> models_of(const std::string& s) {
  if (s == "both") return {Model::equivalent, Model::percell};
  return {s == "percell" ? Model::percell : Model::equivalent};
}

std::vector<Band> bands_of(const std::string& s) {
  if (s == "both") return {Band::wideband, Band::nyquist};
  return {s == "nyquist" ? Band::nyquist : Band::wideband};
}

void echo_common(std::ostream& os, const Common& c) {
  os << "m = " << c.m << "\n"
     << "t = " << c.t << "\n"
     << "osr = " << c.osr << "\n"
     << "n = " << c.n << "\n"
     << "f0 = " << g9(c.f0) << "\n"
     << "sigma-ratio = " << g9(c.sigma_ratio) << "\n"
     << "seed = " << c.seed << "\n"
     << "model = " << c.model << "\n"
     << "preset = " << c.preset << "\n"
     << "edge-mode = " << c.edge_mode << "\n"
     << "wideband-route = " << c.wideband_route << "\n"
     << "out-dir = " << c.out_dir << "\n"
     << "name = " << c.name << "\n";
}

std::ofstream open_output(const std::filesystem::path& p) {
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

void write_sidecar(const std::filesystem::path& csv, const std::string& cmd,
                   const std::string& body,
                   const std::vector<std::string>& diagnostics = {}) {
  auto f = open_output(csv.string() + ".cfg");
  f << "# " << kVersion << "\n# reproduce with: csdac " << cmd
    << " --config " << csv.filename().string() << ".cfg\n";
  for (const auto& d : diagnostics) f << "# diagnostic: " << d << "\n";
  f << body;
  if (!f) throw std::runtime_error("write failed: " + csv.string() + ".cfg");
}

DacConfig config_of(const Common& c) {
  return DacConfig(c.m, c.t < 0 ? c.m : c.t, c.osr);
}

ToneSpec tone_of(const Common& c) {
  ToneSpec t;
  t.frequency_ratio = c.f0;
  t.record_length = c.n;
  return t;
}

int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream& err) {
  if (!(a.sigma_ratio > 0.0))
    throw ConfigError("--sigma-ratio must be positive (SDR is unbounded at 0)");
  const auto cfg = DacConfig::fully_segmented(a.m, 2);
  ToneSpec tone;
  tone.frequency_ratio = a.f0;
  tone.record_length = a.n;
  const auto seq = with_periodic_start(cfg, generate_tone_codes(cfg, tone));
  const auto stats = delta_stats(seq);
  const double sigma = a.sigma_ratio * cfg.sample_period();
  const auto improved = sdr_wideband_improved(cfg, stats, sigma);
  const auto previous = sdr_wideband_previous(cfg, stats, sigma);
  const auto nyq = sdr_nyquist_previous(cfg, tone, sigma);
  if (nyq.advisory)
    err << "warning: f0/fs = " << g9(a.f0)
        << " > 0.1; the Nyquist-band formula assumes f0 << fs\n";

  const std::vector<std::pair<std::string, std::string>> rows = {
      {"m_bits", std::to_string(a.m)},
      {"f0_over_fs", g9(a.f0)},
      {"sigma_over_ts", g9(a.sigma_ratio)},
      {"record_length", std::to_string(a.n)},
      {"mean_abs_delta", g9(stats.mean_abs_delta)},
      {"mean_abs_delta_32", g9(stats.mean_abs_delta_32)},
      {"sdr_wideband_improved_db", g9(improved.sdr_db)},
      {"sdr_wideband_previous_db", g9(previous.sdr_db)},
      {"sdr_nyquist_previous_db", g9(nyq.sdr_db)},
  };
  out << std::left << std::setw(28) << "quantity" << "value\n";
  for (const auto& [k, v] : rows) out << std::setw(28) << k << v << "\n";

  if (!a.csv.empty()) {
    auto f = open_output(a.csv);
    f << "quantity,value\n";
    for (const auto& [k, v] : rows) f << k << ',' << v << "\n";
    if (!f) throw std::runtime_error("write failed: " + a.csv);
    std::ostringstream body;
    body << "m = " << a.m << "\nn = " << a.n << "\nf0 = " << g9(a.f0)
         << "\nsigma-ratio = " << g9(a.sigma_ratio) << "\ncsv = " << a.csv
         << "\n";
    write_sidecar(a.csv, "predict", body.str());
  }
  return kExitOk;
}

SweepVariable variable_of(const std::string& v) {
  if (v == "sigma") return SweepVariable::sigma_ratio;
  if (v == "frequency") return SweepVariable::frequency_ratio;
  return SweepVariable::thermometer_bits;
}

int cmd_sweep(const SweepArgs& a, bool verbose, std::ostream& out,
              std::ostream& err) {
  SweepPlan plan;
  plan.variable = variable_of(a.var);
  plan.grid = parse_grid(a.grid);
  plan.m_bits = a.m;
  if (a.t >= 0) plan.t_bits = a.t;
  plan.osr = a.osr;
  plan.tone = tone_of(a);
  plan.sigma_ratio = a.sigma_ratio;
  plan.runs = a.runs;
  plan.models = models_of(a.model);
  plan.bands = bands_of(a.band);
  plan.base_seed = a.seed;
  plan.options = sim_options(a);
  plan.validate();

  if (verbose)
    err << "sweep: " << plan.grid.size() << " grid points x " << plan.runs
        << " runs on " << a.jobs << " worker(s)\n";
  const auto result = run_sweep(plan, a.jobs);

  const std::filesystem::path dir(a.out_dir);
  const auto rec_path = dir / (a.name + "_records.csv");
  const auto agg_path = dir / (a.name + "_aggregates.csv");
  {
    auto f = open_output(rec_path);
    write_records_csv(f, result.records);
    if (!f) throw std::runtime_error("write failed: " + rec_path.string());
  }
  {
    auto f = open_output(agg_path);
    write_aggregates_csv(f, result.aggregates);
    if (!f) throw std::runtime_error("write failed: " + agg_path.string());
  }
  std::ostringstream body;
  body << "var = " << a.var << "\n"
       << "grid = " << a.grid << "\n"
       << "runs = " << a.runs << "\n"
       << "band = " << a.band << "\n"
       << "jobs = " << a.jobs << "\n";
  echo_common(body, a);
  write_sidecar(rec_path, "sweep", body.str(), result.diagnostics);
  write_sidecar(agg_path, "sweep", body.str(), result.diagnostics);
  for (const auto& d : result.diagnostics) err << "diagnostic: " << d << "\n";

  out << "wrote " << result.records.size() << " records to "
      << rec_path.string() << "\n"
      << "wrote " << result.aggregates.size() << " aggregate rows to "
      << agg_path.string() << "\n";
  return kExitOk;
}

int cmd_traces(const TraceArgs& a, std::ostream& out) {
  if (a.model == "both") throw ConfigError("traces take a single --model");
  const auto cfg = config_of(a);
  const auto tone = tone_of(a);
  std::optional<std::vector<std::size_t>> selection;
  if (!a.transitions.empty()) {
    std::vector<std::size_t> picks;
    std::stringstream ss(a.transitions);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const double v = parse_double(trim(item));
      if (v < 0 || v != std::floor(v))
        throw ConfigError("transition indices must be non-negative integers");
      picks.push_back(static_cast<std::size_t>(v));
    }
    selection = std::move(picks);
  }
  const std::size_t window =
      a.window ? a.window : static_cast<std::size_t>(std::max(1, a.osr / 64));
  const auto bundle = capture_traces(
      cfg, tone, a.sigma_ratio, a.seed,
      a.model == "percell" ? Model::percell : Model::equivalent, window,
      selection, sim_options(a));

  const auto path = std::filesystem::path(a.out_dir) / (a.name + ".csv");
  auto f = open_output(path);
  f << "transition_id,delta_x,t_offset_s,squared_error\n";
  for (const auto& t : bundle.traces)
    for (std::size_t i = 0; i < t.t_offset.size(); ++i)
      f << t.period << ',' << t.delta_x << ',' << g9(t.t_offset[i]) << ','
        << g9(t.squared_error[i]) << '\n';
  if (!f) throw std::runtime_error("write failed: " + path.string());

  std::ostringstream body;
  body << "window = " << window << "\n"
       << "transitions = " << a.transitions << "\n";
  echo_common(body, a);
  write_sidecar(path, "traces", body.str());
  out << "wrote " << bundle.traces.size() << " traces to " << path.string()
      << "\n";
  return kExitOk;
}

}  // namespace

std::vector<double> parse_grid(const std::string& raw) {
  const std::string spec = trim(raw);
  if (spec.empty()) throw ConfigError("empty grid");
  std::vector<double> out;
  if (spec.find(',') != std::string::npos || spec.find(':') == std::string::npos) {
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
    return out;
  }
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(trim(item));
  if (parts.size() < 2 || parts.size() > 3)
    throw ConfigError("grid must look like lo:hi, lo:hi:logK or lo:hi:linK");
  const double lo = parse_double(parts[0]);
  const double hi = parse_double(parts[1]);
  if (parts.size() == 2) {
    if (hi < lo) throw ConfigError("grid upper bound below lower bound");
    for (double v = lo; v <= hi + 1e-9; v += 1.0) out.push_back(v);
    return out;
  }
  const std::string& kind = parts[2];
  const bool log = kind.rfind("log", 0) == 0;
  if (!log && kind.rfind("lin", 0) != 0)
    throw ConfigError("grid spacing must be logK or linK, got '" + kind + "'");
  const double kd = parse_double(kind.substr(3));
  if (kd < 1 || kd != std::floor(kd))
    throw ConfigError("grid point count must be a positive integer");
  const auto k = static_cast<std::size_t>(kd);
  if (log && !(lo > 0.0 && hi > 0.0))
    throw ConfigError("log grid bounds must be positive");
  for (std::size_t i = 0; i < k; ++i) {
    const double u = k == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(k - 1);
    out.push_back(log ? lo * std::pow(hi / lo, u) : lo + (hi - lo) * u);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  // Config-file values are spliced in right after the subcommand name, ahead
  // of the user's own flags, so command-line values win (last one is kept).
  std::vector<std::string> args;
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) {
      config_path = argv[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(9);
    } else {
      args.push_back(a);
    }
  }

  CLI::App app{"Current-steering DAC timing-mismatch simulator", "csdac"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");
  app.add_option("--config", config_path,
                 "Flat 'key = value' file of subcommand options");

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "Closed-form SDR predictions");
  predict->add_option("--m", pa.m, "Resolution in bits")->capture_default_str();
  predict->add_option("--n", pa.n, "Record length in codes")->capture_default_str();
  predict->add_option("--f0", pa.f0, "Tone frequency f0/fs")->capture_default_str();
  predict->add_option("--sigma-ratio", pa.sigma_ratio, "Timing spread sigma/Ts")
      ->required();
  predict->add_option("--csv", pa.csv, "Also write the table as CSV");

  SweepArgs sa;
  sa.name = "sweep";
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo SDR sweep");
  add_common(sweep, sa);
  sweep->add_option("--var", sa.var, "Swept variable")
      ->check(CLI::IsMember({"sigma", "frequency", "t-bits"}))
      ->capture_default_str();
  sweep->add_option("--grid", sa.grid, "lo:hi:logK, lo:hi:linK, lo:hi or a,b,c")
      ->required();
  sweep->add_option("--runs", sa.runs, "Runs per grid point")->capture_default_str();
  sweep->add_option("--band", sa.band, "wideband, nyquist or both")
      ->check(CLI::IsMember({"wideband", "nyquist", "both"}))
      ->capture_default_str();
  sweep->add_option("--jobs", sa.jobs, "Worker threads")->capture_default_str();

  TraceArgs ta;
  ta.name = "traces";
  ta.f0 = 0.11;
  auto* traces = app.add_subcommand("traces", "Squared-error transition traces");
  add_common(traces, ta);
  traces->add_option("--window", ta.window, "Half-width in ticks (default OSR/64)");
  traces->add_option("--transitions", ta.transitions,
                     "Comma list of code indices within the record");

  std::vector<std::string> final_args = args;
  if (!config_path.empty()) {
    try {
      const auto kv = read_config_file(config_path);
      auto sub_at = std::find_if(args.begin(), args.end(), [](const std::string& s) {
        return s == "predict" || s == "sweep" || s == "traces";
      });
      if (sub_at == args.end()) throw ConfigError("no subcommand given");
      std::vector<std::string> injected;
      for (const auto& [k, v] : kv) injected.push_back("--" + k + "=" + v);
      final_args.assign(args.begin(), sub_at + 1);
      final_args.insert(final_args.end(), injected.begin(), injected.end());
      final_args.insert(final_args.end(), sub_at + 1, args.end());
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }

  try {
    std::vector<std::string> reversed(final_args.rbegin(), final_args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (predict->parsed()) return cmd_predict(pa, out, err);
    if (sweep->parsed()) {
      apply_preset(sweep, sa);
      return cmd_sweep(sa, verbose, out, err);
    }
    apply_preset(traces, ta);
    return cmd_traces(ta, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace csdac::cli
