// telspin: command line front end for the telegraph-noise spin toolkit.
// Every tabular output embeds the fully resolved configuration, so a run
// can be replayed byte-for-byte from its own header via --config.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "telspin/analytic.hpp"
#include "telspin/fit.hpp"
#include "telspin/io.hpp"
#include "telspin/lindblad.hpp"
#include "telspin/mc.hpp"
#include "telspin/params.hpp"
#include "telspin/sequence.hpp"

namespace {

using telspin::ConfigMap;
using telspin::DecayCurve;
using telspin::Drive;
using telspin::FluctuatorParams;
using telspin::g17;
using telspin::Init;
using telspin::Levels;
using telspin::PulseSchedule;
using telspin::Table;

// Post-parse problems with flag values; reported as usage errors (exit 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::string engine = "analytic";
  int levels = 2;
  double t1_us = 10.0;
  double hyperfine_mhz = 2.16;
  std::string init = "eq";
  std::string drive = "qubit";
  std::string seq;
  double tau_ns = 200.0;
  double pulse_width_ns = 0.0;
  long pulses = 0;
  long traj = 10000;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string grid;
  std::string out;
  std::string format = "csv";
  double tol = 1e-3;
  double se_mult = 3.0;
  bool with_fit = false;
  std::string model = "exp";
  // traces
  double horizon_us = 40.0;
  std::string save_path;
  std::string load_path;
  // fit
  std::string in_path;
  std::string xcol = "t_us";
  std::string ycol = "abs";
  // sweep
  std::string tau_list = "100,200,300,400,500,600,800,1000";
};

Init parse_init(const std::string& s) {
  if (s == "eq") return Init::equilibrium;
  if (s == "0") return Init::level_0;
  if (s == "+1" || s == "p1") return Init::level_p1;
  if (s == "-1" || s == "m1") return Init::level_m1;
  throw UsageError("init: expected one of 0, +1, -1, eq (got '" + s + "')");
}

Drive parse_drive(const std::string& s) {
  if (s == "qubit") return Drive::qubit;
  if (s == "dq") return Drive::dq;
  if (s == "sq+") return Drive::sq_plus;
  if (s == "sq-") return Drive::sq_minus;
  throw UsageError("drive: expected qubit, dq, sq+ or sq- (got '" + s +
                   "')");
}

std::vector<std::string> parse_engines(const std::string& spec) {
  std::vector<std::string> picked;
  const auto add = [&](const std::string& e) {
    if (e != "analytic" && e != "mc" && e != "lindblad")
      throw UsageError("engine: unknown engine '" + e + "'");
    if (std::find(picked.begin(), picked.end(), e) == picked.end())
      picked.push_back(e);
  };
  std::string item;
  std::istringstream in(spec);
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    if (item == "all") {
      add("analytic");
      add("mc");
      add("lindblad");
    } else {
      add(item);
    }
  }
  if (picked.empty()) throw UsageError("engine: no engine selected");
  // Canonical order keeps embedded configs and column layouts stable.
  std::vector<std::string> order{"analytic", "mc", "lindblad"};
  std::vector<std::string> out;
  for (const std::string& e : order)
    if (std::find(picked.begin(), picked.end(), e) != picked.end())
      out.push_back(e);
  return out;
}

std::string join(const std::vector<std::string>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += v[i];
  }
  return s;
}

std::vector<double> parse_list(const std::string& spec, const char* what) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(spec);
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const char* b = item.c_str();
    char* e = nullptr;
    const double x = std::strtod(b, &e);
    if (e == b || *e != '\0' || !std::isfinite(x))
      throw UsageError(std::string(what) + ": bad number '" + item + "'");
    out.push_back(x);
  }
  if (out.empty()) throw UsageError(std::string(what) + ": empty list");
  return out;
}

// ---------------------------------------------------------------------------
// Config files.  Accepted forms: a csv or json table emitted by this tool
// (the embedded config is reused) or flat `key value` lines.  Explicit
// command line flags always win over config values.

ConfigMap config_from_text(const std::string& text) {
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
    ++i;
  if (i < text.size() && text[i] == '{')
    return telspin::table_from_json(text).config;
  if (text.compare(0, 9, "# telspin") == 0)
    return telspin::table_from_csv(text).config;
  ConfigMap kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    if (line[b] == '#' || line[b] == '[') continue;
    std::size_t sp = line.find_first_of(" \t", b);
    std::string key = line.substr(b, sp - b);
    std::string value;
    if (sp != std::string::npos) {
      std::size_t vb = line.find_first_not_of(" \t", sp);
      if (vb != std::string::npos) value = line.substr(vb);
      while (!value.empty() && (value.back() == ' ' || value.back() == '\t'))
        value.pop_back();
    }
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

double config_double(const std::string& key, const std::string& value) {
  const char* b = value.c_str();
  char* e = nullptr;
  const double x = std::strtod(b, &e);
  if (e == b || *e != '\0')
    throw UsageError("config: bad value for " + key + ": '" + value + "'");
  return x;
}

long config_long(const std::string& key, const std::string& value) {
  const char* b = value.c_str();
  char* e = nullptr;
  const long x = std::strtol(b, &e, 10);
  if (e == b || *e != '\0')
    throw UsageError("config: bad value for " + key + ": '" + value + "'");
  return x;
}

// Applies one config entry unless the same flag was given explicitly.
// Unknown keys are reported once on stderr and skipped.
void apply_config(const ConfigMap& kv, const std::string& cmd, Options& o,
                  const std::function<bool(const std::string&)>& flag_set) {
  for (const auto& [key, value] : kv) {
    if (key == "command" || key == "out" || key == "save" || key == "load" ||
        key == "config")
      continue;
    const auto want = [&](const char* flag) { return !flag_set(flag); };
    if (key == "engine") {
      if (want("--engine")) o.engine = value;
    } else if (key == "levels") {
      if (want("--levels")) {
        const long v = config_long(key, value);
        if (v != 2 && v != 3)
          throw UsageError("config: levels must be 2 or 3");
        o.levels = static_cast<int>(v);
      }
    } else if (key == "t1_us") {
      if (want("--t1")) o.t1_us = config_double(key, value);
    } else if (key == "hyperfine_mhz") {
      if (want("--hyperfine-mhz")) o.hyperfine_mhz = config_double(key, value);
    } else if (key == "init") {
      if (want("--init")) o.init = value;
    } else if (key == "drive") {
      if (want("--drive")) o.drive = value;
    } else if (key == "seq") {
      if (want("--seq")) o.seq = value;
    } else if (key == "tau_ns") {
      if (cmd == "sweep") {
        if (want("--tau-ns")) o.tau_list = value;
      } else if (want("--tau-ns")) {
        o.tau_ns = config_double(key, value);
      }
    } else if (key == "pulse_width_ns") {
      if (want("--pulse-width-ns")) o.pulse_width_ns = config_double(key, value);
    } else if (key == "pulses") {
      if (want("--pulses")) o.pulses = config_long(key, value);
    } else if (key == "grid") {
      if (want("--grid")) o.grid = value;
    } else if (key == "traj") {
      if (want("--traj")) o.traj = config_long(key, value);
    } else if (key == "seed") {
      if (want("--seed")) {
        const char* b = value.c_str();
        char* e = nullptr;
        o.seed = std::strtoull(b, &e, 10);
        if (e == b || *e != '\0')
          throw UsageError("config: bad value for seed: '" + value + "'");
        o.seed_set = true;
      }
    } else if (key == "format") {
      if (want("--format")) o.format = value;
    } else if (key == "tol") {
      if (want("--tol")) o.tol = config_double(key, value);
    } else if (key == "se_mult") {
      if (want("--se-mult")) o.se_mult = config_double(key, value);
    } else if (key == "horizon_us") {
      if (want("--horizon-us")) o.horizon_us = config_double(key, value);
    } else if (key == "model") {
      if (want("--model")) o.model = value;
    } else if (key == "xcol") {
      if (want("--xcol")) o.xcol = value;
    } else if (key == "ycol") {
      if (want("--ycol")) o.ycol = value;
    } else if (key == "fit") {
      if (want("--fit")) o.with_fit = value == "1" || value == "true";
    } else {
      std::cerr << "telspin: config: ignoring unknown key '" << key << "'\n";
    }
  }
}

// ---------------------------------------------------------------------------
// Shared run machinery.

PulseSchedule build_schedule(const Options& o, Drive drive) {
  std::string seq = o.seq;
  if (seq.empty() && o.pulses > 0)
    seq = "CPMG(" + std::to_string(o.pulses) + ")";
  if (seq.empty()) return PulseSchedule{};
  const telspin::SequenceAst ast = telspin::parse_sequence(seq);
  return telspin::expand(ast, o.tau_ns / 1000.0, o.pulse_width_ns / 1000.0,
                         drive);
}

// Uniform single-target pi train: centers at (j + 1/2) tau.
struct UniformTrain {
  bool uniform = false;
  double tau_us = 0.0;
};

UniformTrain detect_uniform(const PulseSchedule& s) {
  const std::vector<double> c = s.pulse_centers();
  if (c.empty()) return {};
  Drive target = Drive::qubit;
  bool first = true;
  for (const telspin::ScheduleEvent& e : s.events) {
    if (e.type != telspin::EventType::pulse) continue;
    if (first) {
      target = e.target;
      first = false;
    } else if (e.target != target) {
      return {};
    }
  }
  const double tau = 2.0 * c[0];
  if (!(tau > 0.0)) return {};
  for (std::size_t j = 0; j < c.size(); ++j) {
    const double want = (static_cast<double>(j) + 0.5) * tau;
    if (std::abs(c[j] - want) > 1e-9 * std::max(1.0, want)) return {};
  }
  return {true, tau};
}

// Truncates the schedule at time t and evaluates the semiclassical walk.
std::complex<double> prefix_value(const FluctuatorParams& p, Init init,
                                  const PulseSchedule& s, double t) {
  PulseSchedule pre;
  double elapsed = 0.0;
  const double tiny = 1e-12 * std::max(1.0, t);
  for (const telspin::ScheduleEvent& e : s.events) {
    if (e.type == telspin::EventType::delay) {
      if (elapsed + e.duration_us > t + tiny) break;
    } else if (e.center_us > t + tiny) {
      break;
    }
    pre.events.push_back(e);
    elapsed += e.duration_us;
  }
  if (t - elapsed > 0.0) {
    telspin::ScheduleEvent tail;
    tail.type = telspin::EventType::delay;
    tail.duration_us = t - elapsed;
    pre.events.push_back(tail);
  }
  pre.total_us = t;
  return telspin::coherence_schedule(p, init, pre);
}

std::vector<std::complex<double>> analytic_curve(
    const FluctuatorParams& p, Init init, Drive drive, const PulseSchedule& s,
    const std::vector<double>& grid) {
  if (s.pulse_count() == 0) return telspin::coherence_free(p, init, grid);
  const UniformTrain u = detect_uniform(s);
  std::vector<std::complex<double>> out(grid.size());
  // Samples on whole-cycle boundaries go through the cycle-power map; the
  // rest walk a truncated copy of the schedule.
  std::vector<long> cycles;
  std::vector<std::size_t> where;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    bool mapped = false;
    if (u.uniform) {
      const long n = std::llround(t / u.tau_us);
      if (n >= 0 && n <= s.pulse_count() &&
          std::abs(t - static_cast<double>(n) * u.tau_us) <=
              1e-9 * std::max(1.0, t)) {
        cycles.push_back(n);
        where.push_back(k);
        mapped = true;
      }
    }
    if (!mapped) out[k] = prefix_value(p, init, s, t);
  }
  if (!cycles.empty()) {
    const std::vector<std::complex<double>> v =
        telspin::coherence_dd_curve(p, init, drive, u.tau_us, cycles);
    for (std::size_t i = 0; i < where.size(); ++i) out[where[i]] = v[i];
  }
  return out;
}

DecayCurve run_engine(const std::string& engine, const FluctuatorParams& p,
                      Init init, Drive drive, const PulseSchedule& s,
                      const std::vector<double>& grid, const Options& o) {
  DecayCurve c;
  if (engine == "analytic") {
    c.engine = "analytic";
    c.params = p;
    c.times_us = grid;
    c.values = analytic_curve(p, init, drive, s, grid);
  } else if (engine == "mc") {
    const telspin::McResult r = telspin::mc_coherence(
        p, init, s, grid, static_cast<std::size_t>(o.traj), o.seed);
    c.engine = "mc";
    c.params = p;
    c.seed = o.seed;
    c.n_traj = r.n_traj;
    c.times_us = grid;
    c.values = r.mean;
    c.std_error = r.std_error;
  } else {
    const telspin::RegisterHamiltonian h = telspin::secular_register(p);
    const telspin::Liouvillian l = telspin::build_liouvillian(h, p.t1_us);
    const Eigen::MatrixXcd rho0 = telspin::initial_register_state(h, init);
    c = telspin::lindblad_dd(l, rho0, s, grid);
  }
  return c;
}

// Default sampling: free decays cover six lifetimes; pulse trains cover the
// schedule with about 240 (uniform) or 120 (general) samples.
std::string default_grid(const Options& o, const PulseSchedule& s) {
  if (s.pulse_count() == 0) {
    const double step = 6.0 * o.t1_us / 240.0;
    return "0:" + g17(step) + ":" + g17(6.0 * o.t1_us);
  }
  const UniformTrain u = detect_uniform(s);
  const int n = s.pulse_count();
  if (u.uniform) {
    const long kstep = std::max(1L, (static_cast<long>(n) + 239L) / 240L);
    const double step = u.tau_us * static_cast<double>(kstep);
    return "0:" + g17(step) + ":" + g17(u.tau_us * static_cast<double>(n));
  }
  const double step = s.total_us / 120.0;
  return "0:" + g17(step) + ":" + g17(s.total_us);
}

void require_seed(const Options& o) {
  if (!o.seed_set)
    throw UsageError("seed: --seed is required when the mc engine runs");
}

ConfigMap base_config(const Options& o, const std::string& cmd,
                      const std::vector<std::string>& engines) {
  ConfigMap c;
  c.emplace_back("command", cmd);
  c.emplace_back("engine", join(engines, ','));
  c.emplace_back("levels", std::to_string(o.levels));
  c.emplace_back("t1_us", g17(o.t1_us));
  c.emplace_back("hyperfine_mhz", g17(o.hyperfine_mhz));
  c.emplace_back("init", o.init);
  c.emplace_back("drive", o.drive);
  if (!o.seq.empty()) c.emplace_back("seq", o.seq);
  c.emplace_back("tau_ns", g17(o.tau_ns));
  c.emplace_back("pulse_width_ns", g17(o.pulse_width_ns));
  c.emplace_back("pulses", std::to_string(o.pulses));
  c.emplace_back("grid", o.grid);
  const bool mc = std::find(engines.begin(), engines.end(), "mc") !=
                  engines.end();
  if (mc) {
    c.emplace_back("traj", std::to_string(o.traj));
    c.emplace_back("seed", std::to_string(o.seed));
  }
  c.emplace_back("format", o.format);
  return c;
}

std::string render(const Table& t, const Options& o) {
  if (o.format == "json") return telspin::table_json(t);
  if (o.format == "csv") return telspin::table_csv(t);
  throw UsageError("format: expected csv or json (got '" + o.format + "')");
}

void emit(const Table& t, const Options& o) {
  const std::string s = render(t, o);
  if (o.out.empty()) {
    std::cout << s;
  } else {
    telspin::write_file(o.out, s);
    std::cout << "wrote " << o.out << "\n";
  }
}

void append_fit_notes(Table& t, const std::string& label,
                      const telspin::FitResult& r) {
  std::istringstream in(telspin::fit_report_text(r));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) t.notes.push_back(label + line);
}

// ---------------------------------------------------------------------------
// Subcommands.

int cmd_decay(Options& o) {
  const std::vector<std::string> engines = parse_engines(o.engine);
  const bool mc = std::find(engines.begin(), engines.end(), "mc") !=
                  engines.end();
  if (mc) require_seed(o);
  const FluctuatorParams p = telspin::make_params(
      o.levels == 2 ? Levels::two : Levels::three, o.t1_us, o.hyperfine_mhz);
  const Init init = parse_init(o.init);
  const Drive drive = parse_drive(o.drive);
  const PulseSchedule s = build_schedule(o, drive);
  if (o.grid.empty()) o.grid = default_grid(o, s);
  const std::vector<double> grid = telspin::parse_grid(o.grid);

  const ConfigMap config = base_config(o, "decay", engines);
  if (engines.size() == 1) {
    DecayCurve c = run_engine(engines[0], p, init, drive, s, grid, o);
    Table t = telspin::curve_table(c, config);
    if (o.with_fit) {
      std::vector<double> y(c.values.size());
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::abs(c.values[i]);
      const telspin::FitResult r = o.model == "osc"
                                       ? telspin::fit_osc_exponential(grid, y)
                                       : telspin::fit_exponential(grid, y);
      append_fit_notes(t, "fit ", r);
    }
    emit(t, o);
    return 0;
  }
  Table t;
  t.version = telspin::kToolVersion;
  t.config = config;
  t.columns.push_back("t_us");
  std::vector<DecayCurve> curves;
  for (const std::string& e : engines) {
    curves.push_back(run_engine(e, p, init, drive, s, grid, o));
    t.columns.push_back("re_" + e);
    t.columns.push_back("im_" + e);
    t.columns.push_back("abs_" + e);
    if (e == "mc") t.columns.push_back("se_mc");
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::vector<double> row{grid[k]};
    for (const DecayCurve& c : curves) {
      row.push_back(c.values[k].real());
      row.push_back(c.values[k].imag());
      row.push_back(std::abs(c.values[k]));
      if (c.engine == "mc") row.push_back(c.std_error[k]);
    }
    t.rows.push_back(std::move(row));
  }
  emit(t, o);
  return 0;
}

int cmd_compare(Options& o) {
  const std::vector<std::string> engines = parse_engines(o.engine);
  if (engines.size() < 2)
    throw UsageError("compare needs at least two engines (got '" + o.engine +
                     "')");
  const bool mc = std::find(engines.begin(), engines.end(), "mc") !=
                  engines.end();
  if (mc) require_seed(o);
  const FluctuatorParams p = telspin::make_params(
      o.levels == 2 ? Levels::two : Levels::three, o.t1_us, o.hyperfine_mhz);
  const Init init = parse_init(o.init);
  const Drive drive = parse_drive(o.drive);
  const PulseSchedule s = build_schedule(o, drive);
  if (o.grid.empty()) o.grid = default_grid(o, s);
  const std::vector<double> grid = telspin::parse_grid(o.grid);

  std::map<std::string, DecayCurve> curves;
  for (const std::string& e : engines)
    curves[e] = run_engine(e, p, init, drive, s, grid, o);

  ConfigMap config = base_config(o, "compare", engines);
  config.emplace_back("tol", g17(o.tol));
  config.emplace_back("se_mult", g17(o.se_mult));

  Table t;
  t.version = telspin::kToolVersion;
  t.config = config;
  t.columns.push_back("t_us");
  for (const std::string& e : engines) {
    t.columns.push_back("abs_" + e);
    if (e == "mc") t.columns.push_back("se_mc");
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < engines.size(); ++i)
    for (std::size_t j = i + 1; j < engines.size(); ++j) {
      pairs.emplace_back(engines[i], engines[j]);
      t.columns.push_back("dev_" + engines[i] + "_" + engines[j]);
    }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::vector<double> row{grid[k]};
    for (const std::string& e : engines) {
      row.push_back(std::abs(curves[e].values[k]));
      if (e == "mc") row.push_back(curves[e].std_error[k]);
    }
    for (const auto& [a, b] : pairs)
      row.push_back(std::abs(curves[a].values[k] - curves[b].values[k]));
    t.rows.push_back(std::move(row));
  }

  bool ok = true;
  for (const auto& [a, b] : pairs) {
    const DecayCurve& ca = curves[a];
    const DecayCurve& cb = curves[b];
    const bool stochastic = a == "mc" || b == "mc";
    if (stochastic) {
      const std::vector<double>& se =
          a == "mc" ? ca.std_error : cb.std_error;
      double worst = 0.0;
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const double dev = std::abs(ca.values[k] - cb.values[k]);
        worst = std::max(worst, dev / std::max(se[k], 1e-300));
      }
      const bool pass = worst <= o.se_mult;
      ok = ok && pass;
      t.notes.push_back("pair " + a + ":" + b + " max_se_ratio " +
                        g17(worst) + " limit " + g17(o.se_mult) +
                        (pass ? " pass" : " fail"));
    } else {
      double worst = 0.0;
      for (std::size_t k = 0; k < grid.size(); ++k)
        worst = std::max(worst, std::abs(ca.values[k] - cb.values[k]));
      const bool pass = worst <= o.tol;
      ok = ok && pass;
      t.notes.push_back("pair " + a + ":" + b + " max_abs_dev " + g17(worst) +
                        " tol " + g17(o.tol) + (pass ? " pass" : " fail"));
    }
  }
  t.notes.push_back(std::string("verdict ") + (ok ? "pass" : "fail"));
  emit(t, o);
  if (!o.out.empty()) std::cout << "verdict " << (ok ? "pass" : "fail") << "\n";
  return ok ? 0 : 1;
}

// Locates the first unparseable record line so corrupt files are reported
// with a line number.
telspin::TraceEnsemble load_traces(const std::string& path) {
  const std::string text = telspin::read_file(path);
  try {
    return telspin::traces_from_text(text);
  } catch (const std::runtime_error& err) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    std::string where;
    if (lines.empty() || lines[0].compare(0, 7, "traces ") != 0) {
      where = "line 1";
    } else {
      std::istringstream head(lines[0]);
      std::string tag;
      long n = 0;
      double tp = 0.0;
      head >> tag >> n >> tp;
      for (std::size_t k = 1; k < lines.size(); ++k) {
        if (lines[k].empty()) continue;
        const std::string probe =
            "traces 1 " + g17(tp) + " 0\n" + lines[k] + "\n";
        try {
          telspin::traces_from_text(probe);
        } catch (const std::runtime_error&) {
          where = "line " + std::to_string(k + 1);
          break;
        }
      }
      if (where.empty()) where = "line 1";
    }
    throw std::runtime_error("corrupt trace file '" + path + "' (" + where +
                             "): " + err.what());
  }
}

int cmd_traces(Options& o) {
  telspin::TraceEnsemble ens;
  std::vector<std::string> engines{"mc"};
  if (!o.load_path.empty()) {
    ens = load_traces(o.load_path);
  } else {
    require_seed(o);
    const Drive drive = parse_drive(o.drive);
    const PulseSchedule s = build_schedule(o, drive);
    if (s.total_us > o.horizon_us * (1.0 + 1e-9))
      throw UsageError("traces: schedule outruns the horizon");
    ens = telspin::engineered_traces(o.t1_us, static_cast<std::size_t>(o.traj),
                                     o.horizon_us, o.pulse_width_ns / 1000.0,
                                     s, o.seed);
  }
  const double horizon =
      ens.traces.empty() ? o.horizon_us : ens.traces.front().horizon_us;
  if (o.grid.empty())
    o.grid = "0:" + g17(horizon / 80.0) + ":" + g17(horizon);
  const std::vector<double> grid = telspin::parse_grid(o.grid);
  const std::vector<double> pop = telspin::population_difference(ens, grid);
  const telspin::FitResult r = telspin::fit_exponential(grid, pop);
  const std::string text = telspin::traces_to_text(ens);

  ConfigMap config;
  config.emplace_back("command", "traces");
  if (o.load_path.empty()) {
    config.emplace_back("t1_us", g17(o.t1_us));
    config.emplace_back("traj", std::to_string(o.traj));
    config.emplace_back("seed", std::to_string(o.seed));
    config.emplace_back("horizon_us", g17(o.horizon_us));
    config.emplace_back("pulse_width_ns", g17(o.pulse_width_ns));
    if (!o.seq.empty()) config.emplace_back("seq", o.seq);
    config.emplace_back("tau_ns", g17(o.tau_ns));
    config.emplace_back("pulses", std::to_string(o.pulses));
  } else {
    config.emplace_back("load", o.load_path);
  }
  config.emplace_back("grid", o.grid);
  config.emplace_back("format", o.format);

  Table t;
  t.version = telspin::kToolVersion;
  t.config = config;
  t.columns = {"t_us", "pop_diff"};
  for (std::size_t k = 0; k < grid.size(); ++k)
    t.rows.push_back({grid[k], pop[k]});
  t.notes.push_back("n_traces " + std::to_string(ens.traces.size()) +
                    " discarded " + std::to_string(ens.discarded));
  t.notes.push_back("t_p_us " + g17(ens.t_p_us));
  t.notes.push_back("traces_fnv " + telspin::fnv1a64_hex(text));
  append_fit_notes(t, "fit ", r);
  if (!o.save_path.empty()) {
    telspin::write_file(o.save_path, text);
    std::cout << "saved " << o.save_path << "\n";
  }
  emit(t, o);
  return 0;
}

int cmd_sweep(Options& o) {
  const std::vector<double> taus_ns = parse_list(o.tau_list, "tau-ns");
  std::vector<double> taus;
  for (double ns : taus_ns) {
    if (!(ns > 0.0)) throw UsageError("tau-ns: spacings must be positive");
    taus.push_back(ns / 1000.0);
  }
  const Init init = parse_init(o.init);
  const bool with_mc = o.traj > 0 && o.seed_set;
  const FluctuatorParams p2 = telspin::make_params(Levels::two, o.t1_us,
                                                   o.hyperfine_mhz);
  const FluctuatorParams p3 = telspin::make_params(Levels::three, o.t1_us,
                                                   o.hyperfine_mhz);
  const std::vector<telspin::SweepRow> r2 =
      telspin::sweep_tau(p2, init, Drive::qubit, taus);
  const std::vector<telspin::SweepRow> r3d =
      telspin::sweep_tau(p3, init, Drive::dq, taus);
  const std::vector<telspin::SweepRow> r3s =
      telspin::sweep_tau(p3, init, Drive::sq_plus, taus);

  std::vector<std::string> engines{"analytic"};
  if (with_mc) engines.push_back("mc");
  ConfigMap config;
  config.emplace_back("command", "sweep");
  config.emplace_back("engine", join(engines, ','));
  config.emplace_back("levels", std::to_string(o.levels));
  config.emplace_back("t1_us", g17(o.t1_us));
  config.emplace_back("hyperfine_mhz", g17(o.hyperfine_mhz));
  config.emplace_back("init", o.init);
  config.emplace_back("drive", o.drive);
  config.emplace_back("tau_ns", o.tau_list);
  if (with_mc) {
    config.emplace_back("traj", std::to_string(o.traj));
    config.emplace_back("seed", std::to_string(o.seed));
  }
  config.emplace_back("format", o.format);

  Table t;
  t.version = telspin::kToolVersion;
  t.config = config;
  t.columns = {"tau_us",       "t2_2lf_qubit_us", "ok_2lf_qubit",
               "t2_3lf_dq_us", "ok_3lf_dq",       "t2_3lf_sq_us",
               "ok_3lf_sq"};
  if (with_mc) {
    t.columns.push_back("t2_mc_us");
    t.columns.push_back("ok_mc");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const FluctuatorParams pm = telspin::make_params(
      o.levels == 2 ? Levels::two : Levels::three, o.t1_us, o.hyperfine_mhz);
  const Drive dm = parse_drive(o.drive);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    std::vector<double> row{taus[i]};
    const auto push = [&](const telspin::CrossingResult& c) {
      row.push_back(c.found ? c.t_us : nan);
      row.push_back(c.found ? 1.0 : 0.0);
    };
    push(r2[i].t2);
    push(r3d[i].t2);
    push(r3s[i].t2);
    if (with_mc) {
      // Sample cycle boundaries out to three lifetimes of the matching
      // theory column (or 3 T1 when that column has no crossing).
      const telspin::CrossingResult& theory =
          o.levels == 2 ? r2[i].t2
                        : (dm == Drive::dq ? r3d[i].t2 : r3s[i].t2);
      const double span =
          3.0 * (theory.found ? theory.t_us : o.t1_us);
      const long n_max = std::min(
          100000L, std::max(4L, static_cast<long>(std::ceil(span / taus[i]))));
      const long kstep = std::max(1L, n_max / 240L);
      std::vector<double> times;
      for (long k = kstep; k <= n_max; k += kstep)
        times.push_back(static_cast<double>(k) * taus[i]);
      const telspin::SequenceAst ast =
          telspin::parse_sequence("CPMG(" + std::to_string(n_max) + ")");
      const PulseSchedule s = telspin::expand(ast, taus[i], 0.0, dm);
      const telspin::McResult mr = telspin::mc_coherence(
          pm, init, s, times, static_cast<std::size_t>(o.traj), o.seed);
      std::vector<double> env(mr.mean.size());
      for (std::size_t k = 0; k < env.size(); ++k)
        env[k] = std::abs(mr.mean[k]);
      push(telspin::one_over_e_time(times, env));
    }
    t.rows.push_back(std::move(row));
  }
  emit(t, o);
  return 0;
}

int cmd_fit(Options& o) {
  const std::string text = telspin::read_file(o.in_path);
  std::vector<double> tx, ty;
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
    ++i;
  const bool is_json = i < text.size() && text[i] == '{';
  if (is_json || text.compare(0, 9, "# telspin") == 0) {
    const Table t = is_json ? telspin::table_from_json(text)
                            : telspin::table_from_csv(text);
    const auto col = [&](const std::string& name) {
      const auto it = std::find(t.columns.begin(), t.columns.end(), name);
      if (it == t.columns.end())
        throw UsageError("fit: column '" + name + "' not in table (have " +
                         join(t.columns, ',') + ")");
      return static_cast<std::size_t>(it - t.columns.begin());
    };
    const std::size_t cx = col(o.xcol), cy = col(o.ycol);
    for (const std::vector<double>& row : t.rows) {
      tx.push_back(row[cx]);
      ty.push_back(row[cy]);
    }
  } else {
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::size_t b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      std::istringstream row(line);
      double x = 0.0, y = 0.0;
      if (!(row >> x >> y))
        throw UsageError("fit: line " + std::to_string(lineno) +
                         ": expected two numeric columns");
      tx.push_back(x);
      ty.push_back(y);
    }
  }
  if (tx.size() < 3) throw UsageError("fit: need at least three points");
  const telspin::FitResult r = o.model == "osc"
                                   ? telspin::fit_osc_exponential(tx, ty)
                                   : telspin::fit_exponential(tx, ty);
  std::string report = telspin::fit_report_text(r);
  report += "n_points " + std::to_string(tx.size()) + "\n";
  const telspin::CrossingResult cross = telspin::one_over_e_time(tx, ty);
  if (cross.found) report += "one_over_e_us " + g17(cross.t_us) + "\n";
  if (o.out.empty()) {
    std::cout << report;
  } else {
    telspin::write_file(o.out, report);
    std::cout << "wrote " << o.out << "\n";
  }
  return 0;
}

int cmd_parse_seq(Options& o) {
  if (o.seq.empty()) throw UsageError("parse-seq: --seq is required");
  const telspin::SequenceAst ast = telspin::parse_sequence(o.seq);
  const Drive drive = parse_drive(o.drive);
  const PulseSchedule s = telspin::expand(
      ast, o.tau_ns / 1000.0, o.pulse_width_ns / 1000.0, drive);
  const telspin::ValidationReport v =
      telspin::validate(s, o.hyperfine_mhz);
  std::string report;
  report += "canonical " + telspin::print_sequence(ast) + "\n";
  report += "pulses " + std::to_string(s.pulse_count()) + "\n";
  report += "total_us " + g17(s.total_us) + "\n";
  report += std::string("valid ") + (v.ok ? "yes" : "no") + "\n";
  for (const telspin::Finding& f : v.findings) {
    const char* tag = f.severity == telspin::Severity::error
                          ? "error"
                          : f.severity == telspin::Severity::warning
                                ? "warning"
                                : "info";
    report += std::string("note ") + tag + " " + f.message + "\n";
  }
  if (o.out.empty()) {
    std::cout << report;
  } else {
    telspin::write_file(o.out, report);
    std::cout << "wrote " << o.out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"telegraph-noise spin register toolkit"};
  app.set_version_flag("--version", std::string(telspin::kToolVersion));
  app.require_subcommand(1);

  const auto add_common = [&](CLI::App* c, bool tau_as_list = false) {
    c->add_option("--config", o.config_path,
                  "config file (flat key-value, or a csv/json output of "
                  "this tool); explicit flags win");
    c->add_option("--levels", o.levels, "fluctuator levels (2 or 3)")
        ->check(CLI::IsMember({2, 3}));
    c->add_option("--t1", o.t1_us, "fluctuator T1 in us");
    c->add_option("--hyperfine-mhz", o.hyperfine_mhz,
                  "hyperfine splitting A in MHz");
    c->add_option("--init", o.init, "initial fluctuator level: 0, +1, -1, eq");
    c->add_option("--drive", o.drive, "pulse target: qubit, dq, sq+, sq-");
    c->add_option("--seq", o.seq, "pulse sequence DSL");
    if (tau_as_list)
      c->add_option("--tau-ns", o.tau_list, "comma list of spacings in ns");
    else
      c->add_option("--tau-ns", o.tau_ns, "inter-pulse spacing in ns");
    c->add_option("--pulse-width-ns", o.pulse_width_ns, "pulse width in ns");
    c->add_option("--pulses", o.pulses, "CPMG pulse count (ignored with --seq)");
    c->add_option("--grid", o.grid,
                  "sample times in us: start:step:stop or comma list");
    c->add_option("--traj", o.traj, "Monte Carlo trajectories");
    c->add_option("--seed", o.seed, "Monte Carlo master seed")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--out", o.out, "output path (default stdout)");
    c->add_option("--format", o.format, "output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
  };

  CLI::App* decay = app.add_subcommand(
      "decay", "coherence decay curve for one or more engines");
  add_common(decay);
  decay->add_option("--engine", o.engine,
                    "analytic, mc, lindblad, all, or a comma list");
  decay->add_flag("--fit", o.with_fit, "append a decay fit to the notes");
  decay->add_option("--model", o.model, "fit model: exp or osc")
      ->check(CLI::IsMember({"exp", "osc"}));

  CLI::App* sweep = app.add_subcommand(
      "sweep", "T2 versus pulse spacing for the standard drive set");
  add_common(sweep, true);

  CLI::App* traces = app.add_subcommand(
      "traces", "engineered two-level flip ensembles and their T1 estimate");
  add_common(traces);
  traces->add_option("--horizon-us", o.horizon_us, "trace length in us");
  traces->add_option("--save", o.save_path, "write the ensemble text here");
  traces->add_option("--load", o.load_path, "replay an ensemble text file");
  traces->get_option("--traj")->description("ensemble size");

  CLI::App* compare = app.add_subcommand(
      "compare", "cross-engine deviation report (exit 1 beyond tolerance)");
  add_common(compare);
  compare->add_option("--engine", o.engine,
                      "at least two of analytic, mc, lindblad (or all)");
  compare->add_option("--tol", o.tol,
                      "max |deviation| for deterministic engine pairs");
  compare->add_option("--se-mult", o.se_mult,
                      "allowed deviation in standard errors for mc pairs");

  CLI::App* fit = app.add_subcommand(
      "fit", "fit a decay model to a table or two-column text file");
  add_common(fit);
  fit->add_option("--in", o.in_path, "input table or two-column text")
      ->required();
  fit->add_option("--model", o.model, "fit model: exp or osc")
      ->check(CLI::IsMember({"exp", "osc"}));
  fit->add_option("--xcol", o.xcol, "x column name for table inputs");
  fit->add_option("--ycol", o.ycol, "y column name for table inputs");

  CLI::App* parseq = app.add_subcommand(
      "parse-seq", "canonicalize and validate a pulse sequence");
  add_common(parseq);

  CLI11_PARSE(app, argc, argv);

  CLI::App* active = app.get_subcommands().front();
  const std::string cmd =
      active->get_name() == "parse-seq" ? "parse-seq" : active->get_name();
  o.seed_set = active->count("--seed") > 0;

  try {
    if (!o.config_path.empty()) {
      const ConfigMap kv =
          config_from_text(telspin::read_file(o.config_path));
      apply_config(kv, cmd, o, [&](const std::string& flag) {
        const CLI::Option* opt = active->get_option_no_throw(flag);
        return opt != nullptr && opt->count() > 0;
      });
    }
    if (cmd == "decay") return cmd_decay(o);
    if (cmd == "sweep") return cmd_sweep(o);
    if (cmd == "traces") return cmd_traces(o);
    if (cmd == "compare") return cmd_compare(o);
    if (cmd == "fit") return cmd_fit(o);
    return cmd_parse_seq(o);
  } catch (const telspin::ParseError& e) {
    std::cerr << "telspin: parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "telspin: error: " << e.what() << "\n";
    return 2;
  }
}
