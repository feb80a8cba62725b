#include "telspin/sequence.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "telspin/matexp.hpp"

namespace telspin {

namespace {

std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double norm_deg(double deg) {
  deg = std::fmod(deg, 360.0);
  if (deg < 0.0) deg += 360.0;
  if (deg == 0.0) deg = 0.0;  // collapse -0
  return deg;
}

// ---- scanner ---------------------------------------------------------------

struct Scanner {
  const std::string& s;
  size_t i = 0;

  int col() const { return static_cast<int>(i) + 1; }
  bool done() const { return i >= s.size(); }
  char peek() const { return done() ? '\0' : s[i]; }
  bool starts_with(const char* lit) const {
    return s.compare(i, std::char_traits<char>::length(lit), lit) == 0;
  }
  void skip_ws() {
    while (!done() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
};

[[noreturn]] void fail(const Scanner& sc, const std::string& msg) {
  throw ParseError(msg, sc.col());
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

// Unsigned decimal with optional fraction and exponent.
double parse_number(Scanner& sc, const char* what) {
  const size_t start = sc.i;
  size_t j = sc.i;
  auto digits = [&] {
    size_t n = 0;
    while (j < sc.s.size() && std::isdigit(static_cast<unsigned char>(sc.s[j]))) ++j, ++n;
    return n;
  };
  size_t intd = digits();
  size_t fracd = 0;
  if (j < sc.s.size() && sc.s[j] == '.') {
    ++j;
    fracd = digits();
  }
  if (intd + fracd == 0) fail(sc, std::string("expected ") + what);
  if (j < sc.s.size() && (sc.s[j] == 'e' || sc.s[j] == 'E')) {
    size_t k = j + 1;
    if (k < sc.s.size() && (sc.s[k] == '+' || sc.s[k] == '-')) ++k;
    size_t e = k;
    while (e < sc.s.size() && std::isdigit(static_cast<unsigned char>(sc.s[e]))) ++e;
    if (e > k) j = e;
  }
  double out = 0.0;
  const auto res = std::from_chars(sc.s.data() + start, sc.s.data() + j, out);
  if (res.ec != std::errc()) fail(sc, std::string("malformed ") + what);
  sc.i = j;
  return out;
}

long parse_count(Scanner& sc, const char* what) {
  const size_t start = sc.i;
  size_t j = sc.i;
  while (j < sc.s.size() && std::isdigit(static_cast<unsigned char>(sc.s[j]))) ++j;
  if (j == start) fail(sc, std::string("expected ") + what);
  long out = 0;
  const auto res = std::from_chars(sc.s.data() + start, sc.s.data() + j, out);
  if (res.ec != std::errc()) fail(sc, std::string("malformed ") + what);
  if (j < sc.s.size() && is_word_char(sc.s[j])) {
    sc.i = j;
    fail(sc, std::string("malformed ") + what);
  }
  sc.i = j;
  return out;
}

// Number with a required unit suffix, yielding microseconds.
double parse_duration(Scanner& sc) {
  const double num = parse_number(sc, "a duration");
  size_t j = sc.i;
  while (j < sc.s.size() && std::isalpha(static_cast<unsigned char>(sc.s[j]))) ++j;
  const std::string unit = sc.s.substr(sc.i, j - sc.i);
  double scale = 0.0;
  if (unit == "ns") scale = 1e-3;
  else if (unit == "us") scale = 1.0;
  else if (unit == "ms") scale = 1e3;
  else if (unit == "s") scale = 1e6;
  else if (unit.empty()) fail(sc, "expected a duration unit (ns, us, ms, s)");
  else fail(sc, "unknown duration unit '" + unit + "'");
  sc.i = j;
  return num * scale;
}

// Axis name, degrees, or radians with a 'rad' suffix; degrees in [0, 360).
double parse_phase(Scanner& sc) {
  auto axis_ends = [&](size_t j) {
    return j >= sc.s.size() || !is_word_char(sc.s[j]);
  };
  if (sc.starts_with("-x") && axis_ends(sc.i + 2)) { sc.i += 2; return 180.0; }
  if (sc.starts_with("-y") && axis_ends(sc.i + 2)) { sc.i += 2; return 270.0; }
  if (sc.starts_with("x") && axis_ends(sc.i + 1)) { sc.i += 1; return 0.0; }
  if (sc.starts_with("y") && axis_ends(sc.i + 1)) { sc.i += 1; return 90.0; }

  double sign = 1.0;
  if (sc.peek() == '-' || sc.peek() == '+') {
    if (sc.peek() == '-') sign = -1.0;
    ++sc.i;
  }
  if (!std::isdigit(static_cast<unsigned char>(sc.peek())) && sc.peek() != '.')
    fail(sc, "malformed phase");
  double value = sign * parse_number(sc, "a phase");
  if (sc.starts_with("rad")) {
    const size_t after = sc.i + 3;
    if (after >= sc.s.size() || !is_word_char(sc.s[after])) {
      sc.i = after;
      return norm_deg(value * (180.0 / pi));
    }
  }
  if (!sc.done() && std::isalpha(static_cast<unsigned char>(sc.peek())))
    fail(sc, "malformed phase suffix (only 'rad' is recognized)");
  return norm_deg(value);
}

std::string parse_word(Scanner& sc) {
  size_t j = sc.i;
  while (j < sc.s.size() && (std::isalnum(static_cast<unsigned char>(sc.s[j])) ||
                             sc.s[j] == '_'))
    ++j;
  std::string w = sc.s.substr(sc.i, j - sc.i);
  sc.i = j;
  return w;
}

AstItem parse_macro(Scanner& sc, std::string name, int begin) {
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  if (name != "CPMG" && name != "KDD" && name != "KDDXY16") {
    sc.i = static_cast<size_t>(begin) - 1;
    fail(sc, "unknown macro '" + name + "'");
  }
  sc.skip_ws();
  if (sc.peek() != '(') fail(sc, "expected '(' after macro name");
  ++sc.i;

  AstItem item;
  item.kind = ItemKind::macro_call;
  item.macro = name;
  item.begin = begin;

  bool first = true;
  while (true) {
    sc.skip_ws();
    if (sc.peek() == ')') { ++sc.i; break; }
    if (!first) {
      if (sc.peek() != ',') fail(sc, "expected ',' or ')' in macro arguments");
      ++sc.i;
      sc.skip_ws();
    }
    if (sc.done()) fail(sc, "unterminated macro argument list");
    const size_t argn = item.args.size();
    if (name == "CPMG") {
      if (argn == 0) item.args.push_back(static_cast<double>(parse_count(sc, "a pulse count")));
      else if (argn == 1) item.args.push_back(parse_duration(sc));
      else fail(sc, "CPMG takes at most two arguments");
    } else if (name == "KDD") {
      if (argn == 0) item.args.push_back(parse_phase(sc));
      else fail(sc, "KDD takes at most one argument");
    } else {  // KDDXY16
      if (argn == 0) item.args.push_back(static_cast<double>(parse_count(sc, "a supercycle count")));
      else fail(sc, "KDDXY16 takes at most one argument");
    }
    first = false;
  }

  if (name == "CPMG") {
    if (item.args.empty()) {
      sc.i = static_cast<size_t>(begin) - 1;
      fail(sc, "CPMG requires a pulse count");
    }
    if (item.args[0] < 1.0) {
      sc.i = static_cast<size_t>(begin) - 1;
      fail(sc, "CPMG pulse count must be positive");
    }
    if (item.args.size() == 2 && item.args[1] <= 0.0) {
      sc.i = static_cast<size_t>(begin) - 1;
      fail(sc, "CPMG spacing must be positive");
    }
  } else if (name == "KDD") {
    if (item.args.empty()) item.args.push_back(0.0);
  } else {
    if (item.args.empty()) item.args.push_back(1.0);
    if (item.args[0] < 1.0) {
      sc.i = static_cast<size_t>(begin) - 1;
      fail(sc, "KDDXY16 supercycle count must be positive");
    }
  }
  item.end = sc.col();
  return item;
}

AstItem parse_item(Scanner& sc) {
  AstItem item;
  item.begin = sc.col();

  const char c = sc.peek();
  if (c == '(') {
    if (!sc.starts_with("(pi)_")) fail(sc, "expected '(pi)_' pulse");
    sc.i += 5;
    item.kind = ItemKind::pulse;
    item.value = parse_phase(sc);
    item.end = sc.col();
    return item;
  }
  if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
    item.kind = ItemKind::delay;
    item.value = parse_duration(sc);
    item.end = sc.col();
    return item;
  }
  if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
    const int begin = sc.col();
    std::string word = parse_word(sc);
    if (word == "tau") {
      if (sc.peek() == '/') {
        ++sc.i;
        if (sc.peek() != '2') fail(sc, "expected 'tau/2'");
        ++sc.i;
        if (!sc.done() && is_word_char(sc.peek())) fail(sc, "expected 'tau/2'");
        item.kind = ItemKind::tau_half;
      } else {
        item.kind = ItemKind::tau;
      }
      item.end = sc.col();
      return item;
    }
    return parse_macro(sc, std::move(word), begin);
  }
  fail(sc, "expected an item (tau, tau/2, a duration, '(pi)_' or a macro)");
}

// ---- expansion -------------------------------------------------------------

struct Prim {
  bool is_pulse = false;
  double value = 0.0;  // delay us, or phase degrees
};

void emit_block(std::vector<Prim>& out, double tau, const double* deg, int n) {
  out.push_back({false, tau * 0.5});
  for (int k = 0; k < n; ++k) {
    if (k) out.push_back({false, tau});
    out.push_back({true, deg[k]});
  }
  out.push_back({false, tau * 0.5});
}

void emit_kdd(std::vector<Prim>& out, double tau, double off) {
  const double deg[5] = {norm_deg(30.0 + off), norm_deg(off),
                         norm_deg(90.0 + off), norm_deg(off),
                         norm_deg(30.0 + off)};
  emit_block(out, tau, deg, 5);
}

std::vector<Prim> resolve(const SequenceAst& ast, double tau_us) {
  std::vector<Prim> prims;
  for (const auto& item : ast.items) {
    switch (item.kind) {
      case ItemKind::tau:      prims.push_back({false, tau_us}); break;
      case ItemKind::tau_half: prims.push_back({false, tau_us * 0.5}); break;
      case ItemKind::delay:    prims.push_back({false, item.value}); break;
      case ItemKind::pulse:    prims.push_back({true, item.value}); break;
      case ItemKind::macro_call: {
        if (item.macro == "CPMG") {
          const long n = static_cast<long>(item.args[0]);
          const double t = item.args.size() > 1 ? item.args[1] : tau_us;
          std::vector<double> deg(static_cast<size_t>(n), 90.0);
          emit_block(prims, t, deg.data(), static_cast<int>(n));
        } else if (item.macro == "KDD") {
          emit_kdd(prims, tau_us, item.args[0]);
        } else {  // KDDXY16
          static const double offsets[16] = {0,   90,  0,   90,  90,  0,
                                             90,  0,   180, 270, 180, 270,
                                             270, 180, 270, 180};
          const long reps = static_cast<long>(item.args[0]);
          for (long r = 0; r < reps; ++r)
            for (double off : offsets) emit_kdd(prims, tau_us, off);
        }
        break;
      }
    }
  }
  return prims;
}

std::vector<Prim> merge_delays(const std::vector<Prim>& in) {
  std::vector<Prim> out;
  for (const auto& pr : in) {
    if (!pr.is_pulse && !out.empty() && !out.back().is_pulse)
      out.back().value += pr.value;
    else
      out.push_back(pr);
  }
  return out;
}

// Emits delay durations from the merged primitive values directly (shaving
// half a width off each pulse-adjacent end) rather than differencing the
// cumulative timeline, so symbolic tau spacings survive bit-exactly.
PulseSchedule build_schedule(const std::vector<Prim>& prims, double width,
                             Drive target) {
  double total = 0.0;
  for (const auto& pr : prims)
    if (!pr.is_pulse) total += pr.value;
  const double slack = 1e-12 * std::max(1.0, total);

  PulseSchedule s;
  s.total_us = total;
  double t = 0.0;
  double prev_center = 0.0;
  bool have_prev = false;
  for (size_t k = 0; k < prims.size(); ++k) {
    const auto& pr = prims[k];
    if (pr.is_pulse) {
      if (have_prev && t <= prev_center)
        throw std::runtime_error("timing infeasible: pulse centers collide");
      if (t - width * 0.5 < -slack)
        throw std::runtime_error(
            "timing infeasible: pulse window precedes the start");
      s.events.push_back(
          {EventType::pulse, width, pr.value * (pi / 180.0), t, target});
      prev_center = t;
      have_prev = true;
    } else {
      double d = pr.value;
      if (k > 0 && prims[k - 1].is_pulse) d -= width * 0.5;
      if (k + 1 < prims.size() && prims[k + 1].is_pulse) d -= width * 0.5;
      if (d < -slack)
        throw std::runtime_error("timing infeasible: pulse windows overlap");
      // Delays carry no target; the field stays at its default.
      if (d > 0.0)
        s.events.push_back({EventType::delay, d, 0.0, 0.0, Drive::qubit});
      t += pr.value;
    }
  }
  if (!prims.empty() && prims.back().is_pulse && width > 0.0)
    throw std::runtime_error("timing infeasible: pulse window past the end");
  s.cycle_events = static_cast<int>(s.events.size());
  return s;
}

}  // namespace

ParseError::ParseError(const std::string& msg, int col)
    : std::runtime_error(msg + " (column " + std::to_string(col) + ")"),
      column(col) {}

SequenceAst parse_sequence(const std::string& text) {
  Scanner sc{text};
  SequenceAst ast;
  sc.skip_ws();
  if (sc.done()) fail(sc, "empty sequence");
  while (true) {
    ast.items.push_back(parse_item(sc));
    sc.skip_ws();
    if (sc.done()) break;
    if (sc.peek() != '-') fail(sc, "expected '-' between items");
    ++sc.i;
    sc.skip_ws();
    if (sc.done()) fail(sc, "expected an item after '-'");
  }
  return ast;
}

std::string print_sequence(const SequenceAst& ast) {
  std::string out;
  auto phase_text = [](double deg) -> std::string {
    if (deg == 0.0) return "x";
    if (deg == 90.0) return "y";
    if (deg == 180.0) return "-x";
    if (deg == 270.0) return "-y";
    return fmt_g17(deg);
  };
  for (size_t k = 0; k < ast.items.size(); ++k) {
    if (k) out += '-';
    const auto& item = ast.items[k];
    switch (item.kind) {
      case ItemKind::tau:      out += "tau"; break;
      case ItemKind::tau_half: out += "tau/2"; break;
      case ItemKind::delay:    out += fmt_g17(item.value) + "us"; break;
      case ItemKind::pulse:    out += "(pi)_" + phase_text(item.value); break;
      case ItemKind::macro_call:
        out += item.macro + "(";
        if (item.macro == "CPMG") {
          out += std::to_string(static_cast<long>(item.args[0]));
          if (item.args.size() > 1) out += "," + fmt_g17(item.args[1]) + "us";
        } else if (item.macro == "KDD") {
          out += fmt_g17(item.args[0]);
        } else {
          out += std::to_string(static_cast<long>(item.args[0]));
        }
        out += ")";
        break;
    }
  }
  return out;
}

int PulseSchedule::pulse_count() const {
  int n = 0;
  for (const auto& e : events) n += (e.type == EventType::pulse);
  return n;
}

std::vector<double> PulseSchedule::pulse_centers() const {
  std::vector<double> c;
  for (const auto& e : events)
    if (e.type == EventType::pulse) c.push_back(e.center_us);
  return c;
}

std::vector<double> PulseSchedule::pulse_phases() const {
  std::vector<double> p;
  for (const auto& e : events)
    if (e.type == EventType::pulse) p.push_back(e.phase_rad);
  return p;
}

PulseSchedule expand(const SequenceAst& ast, double tau_us,
                     double pulse_width_us, Drive target, int repeats) {
  if (!(tau_us > 0.0) || !std::isfinite(tau_us))
    throw std::invalid_argument("expand: tau must be positive");
  if (pulse_width_us < 0.0 || !std::isfinite(pulse_width_us))
    throw std::invalid_argument("expand: pulse width must be non-negative");
  if (tau_us <= pulse_width_us)
    throw std::invalid_argument("expand: tau must exceed the pulse width");
  if (repeats < 1) throw std::invalid_argument("expand: repeats must be >= 1");

  const std::vector<Prim> unit = resolve(ast, tau_us);
  PulseSchedule one = build_schedule(merge_delays(unit), pulse_width_us, target);
  if (repeats == 1) return one;

  std::vector<Prim> full;
  full.reserve(unit.size() * static_cast<size_t>(repeats));
  for (int r = 0; r < repeats; ++r)
    full.insert(full.end(), unit.begin(), unit.end());
  PulseSchedule s = build_schedule(merge_delays(full), pulse_width_us, target);
  s.cycle_events = one.cycle_events;
  return s;
}

ValidationReport validate(const PulseSchedule& s, double hyperfine_mhz) {
  ValidationReport r;
  auto add = [&](Severity sev, std::string msg) {
    if (sev == Severity::error) r.ok = false;
    r.findings.push_back({sev, std::move(msg)});
  };

  for (size_t k = 0; k < s.events.size(); ++k)
    if (s.events[k].duration_us < 0.0)
      add(Severity::error,
          "negative duration at event " + std::to_string(k));

  std::vector<const ScheduleEvent*> pulses;
  for (const auto& e : s.events)
    if (e.type == EventType::pulse) pulses.push_back(&e);

  const double slack = 1e-12 * std::max(1.0, s.total_us);
  for (size_t k = 1; k < pulses.size(); ++k) {
    const auto& a = *pulses[k - 1];
    const auto& b = *pulses[k];
    if (b.center_us <= a.center_us) {
      add(Severity::error, "pulse centers not strictly increasing near t = " +
                               fmt_g17(a.center_us) + " us");
      continue;
    }
    const double a_end = a.center_us + a.duration_us * 0.5;
    const double b_start = b.center_us - b.duration_us * 0.5;
    if (a_end > b_start + slack)
      add(Severity::error,
          "pulse windows overlap near t = " + fmt_g17(a.center_us) + " us");
  }

  if (hyperfine_mhz > 0.0 && pulses.size() >= 2) {
    double tau_eff = 0.0;
    for (size_t k = 1; k < pulses.size(); ++k)
      tau_eff = std::max(tau_eff, pulses[k]->center_us - pulses[k - 1]->center_us);
    const double x = two_pi * hyperfine_mhz * tau_eff;
    char buf[160];
    if (x > pi) {
      std::snprintf(buf, sizeof buf,
                    "DD ineffective: 2 pi A tau = %.3g exceeds pi; pulses are "
                    "too sparse to refocus this coupling",
                    x);
      add(Severity::warning, buf);
    } else if (x > 1.0) {
      std::snprintf(buf, sizeof buf,
                    "marginal spacing: 2 pi A tau = %.3g is in (1, pi]; "
                    "refocusing degrades but a net gain remains",
                    x);
      add(Severity::info, buf);
    }
  }
  return r;
}

std::string schedule_to_text(const PulseSchedule& s) {
  std::string out;
  for (const auto& e : s.events) {
    if (e.type == EventType::delay) {
      out += "D " + fmt_g17(e.duration_us) + "\n";
    } else {
      out += "P " + fmt_g17(e.phase_rad) + " " + drive_name(e.target) + " " +
             fmt_g17(e.duration_us) + "\n";
    }
  }
  return out;
}

PulseSchedule schedule_from_text(const std::string& text) {
  PulseSchedule s;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  double t = 0.0;
  auto bad = [&](const std::string& msg) {
    throw std::runtime_error("schedule line " + std::to_string(lineno) + ": " +
                             msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;  // blank line
    if (tag == "D") {
      double d = 0.0;
      if (!(ls >> d)) bad("malformed delay");
      s.events.push_back({EventType::delay, d, 0.0, 0.0, Drive::qubit});
      t += d;
    } else if (tag == "P") {
      double phase = 0.0, width = 0.0;
      std::string target;
      if (!(ls >> phase >> target >> width)) bad("malformed pulse");
      Drive d = Drive::qubit;
      if (target == "qubit") d = Drive::qubit;
      else if (target == "dq") d = Drive::dq;
      else if (target == "sq+") d = Drive::sq_plus;
      else if (target == "sq-") d = Drive::sq_minus;
      else bad("unknown target '" + target + "'");
      const double center = t + width * 0.5;
      s.events.push_back({EventType::pulse, width, phase, center, d});
      t += width;
    } else {
      bad("unknown event tag '" + tag + "'");
    }
    std::string rest;
    if (ls >> rest) bad("trailing text '" + rest + "'");
  }
  s.total_us = t;
  s.cycle_events = static_cast<int>(s.events.size());
  return s;
}

std::complex<double> coherence_schedule(const FluctuatorParams& p, Init init,
                                        const PulseSchedule& s) {
  const Eigen::MatrixXcd m = generator(p);
  Eigen::VectorXcd x = initial_vector(p, init);

  std::map<double, Eigen::MatrixXcd> free_cache;
  std::map<Drive, Eigen::MatrixXcd> pulse_cache;
  auto free_step = [&](double dt) {
    if (dt == 0.0) return;
    auto it = free_cache.find(dt);
    if (it == free_cache.end())
      it = free_cache.emplace(dt, mat_exp(m, dt)).first;
    x = it->second * x;
  };
  // The fluctuator keeps evolving during a finite pulse window; the ideal
  // flip acts at the nominal center, so a width-w pulse is free(w/2) U
  // free(w/2).
  for (const auto& e : s.events) {
    if (e.type == EventType::delay) {
      free_step(e.duration_us);
    } else {
      free_step(e.duration_us * 0.5);
      auto it = pulse_cache.find(e.target);
      if (it == pulse_cache.end())
        it = pulse_cache.emplace(e.target, pulse_operator(p, e.target)).first;
      x = it->second * x;
      free_step(e.duration_us * 0.5);
    }
  }
  return x(0);
}

}  // namespace telspin
