#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "telspin/analytic.hpp"

// Pulse-sequence language.  Grammar:
//   seq  := item ('-' item)*
//   item := 'tau' | 'tau/2' | DURATION | '(pi)_' PHASE | MACRO '(' args ')'
// DURATION is a number with a unit (ns, us, ms, s); PHASE is an axis name
// (x, y, -x, -y), a number in degrees, or a number with a 'rad' suffix;
// MACRO is CPMG, KDD or KDDXY16.  Phases are held as degrees so the KDD
// multiples of 30 stay exact across arbitrarily long supercycles.

namespace telspin {

struct ParseError : std::runtime_error {
  int column;  // 1-based position of the offending character
  ParseError(const std::string& msg, int col);
};

enum class ItemKind { tau, tau_half, delay, pulse, macro_call };

struct AstItem {
  ItemKind kind = ItemKind::tau;
  double value = 0.0;        // delay: us; pulse: phase in degrees, [0, 360)
  std::string macro;         // macro_call: canonical upper-case name
  std::vector<double> args;  // CPMG: count[, tau_us]; KDD: phase_deg;
                             // KDDXY16: supercycle count
  int begin = 0;             // 1-based source span [begin, end)
  int end = 0;
};

struct SequenceAst {
  std::vector<AstItem> items;
};

// Throws ParseError with the offending column on bad input.
SequenceAst parse_sequence(const std::string& text);

// Canonical form: no whitespace, axis names for multiples of 90 degrees,
// durations in us.  parse(print(ast)) reproduces every semantic field.
std::string print_sequence(const SequenceAst& ast);

enum class EventType { delay, pulse };

struct ScheduleEvent {
  EventType type = EventType::delay;
  double duration_us = 0.0;  // delay length, or pulse width
  double phase_rad = 0.0;    // pulse only
  double center_us = 0.0;    // pulse only: nominal center time
  Drive target = Drive::qubit;
};

// Flat timed schedule.  Delays are the gaps between pulse windows, so
// total_us = sum of delays + sum of widths; centers strictly increase and
// windows never overlap.
struct PulseSchedule {
  std::vector<ScheduleEvent> events;
  double total_us = 0.0;
  int cycle_events = 0;  // events in one repeating unit

  int pulse_count() const;
  std::vector<double> pulse_centers() const;
  std::vector<double> pulse_phases() const;
};

// Flattens macros, repeats the whole sequence `repeats` times and merges
// delays at block boundaries so concatenated KDD/CPMG units keep a uniform
// inter-pulse spacing.  tau_us resolves the symbolic delays; a CPMG call
// with an explicit spacing argument overrides it locally.  Requires
// tau_us > pulse_width_us; throws on infeasible timing (overlapping pulse
// windows, colliding centers).
PulseSchedule expand(const SequenceAst& ast, double tau_us,
                     double pulse_width_us, Drive target, int repeats = 1);

enum class Severity { info, warning, error };

struct Finding {
  Severity severity = Severity::info;
  std::string message;
};

struct ValidationReport {
  bool ok = true;  // no error-severity findings
  std::vector<Finding> findings;
};

// Structural checks (non-negative durations, increasing centers, no window
// overlap) plus a spacing advisory against the fluctuator coupling:
// x = 2 pi A tau for the widest inter-pulse gap.  x <= 1 is silent, x in
// (1, pi] earns a marginal info, x > pi a DD-ineffective warning.
ValidationReport validate(const PulseSchedule& s, double hyperfine_mhz);

// One event per line, `D <us>` or `P <phase_rad> <target> <width_us>`,
// printed with enough digits that a round-trip reproduces the doubles
// bit-exactly.  The importer rebuilds centers cumulatively.
std::string schedule_to_text(const PulseSchedule& s);
PulseSchedule schedule_from_text(const std::string& text);

// Propagates the Fourier coherence vector through the schedule: generator
// exponentials across delays, ideal pulse operators at pulse centers.
// Pulse phases never enter; only the target does.
std::complex<double> coherence_schedule(const FluctuatorParams& p, Init init,
                                        const PulseSchedule& s);

}  // namespace telspin
