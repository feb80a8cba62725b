#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "telspin/params.hpp"
#include "telspin/sequence.hpp"

// Monte Carlo engine: continuous-time telegraph trajectories, phase
// integration under pulse trains, engineered flip-trace ensembles with the
// pulse-overlap policy, and the differential-readout simulation.  All
// randomness is counter-based per trajectory index, so results are
// bit-identical across runs and thread counts.

namespace telspin {

// One realized fluctuator trajectory.  jump_times_us strictly increase and
// stay below horizon_us; levels holds jumps+1 entries (segment values, first
// entry is the initial level) and adjacent entries differ.  For engineered
// ensembles the cancelled lists record designed flips and pulse centers
// removed by the overlap policy; designed flips = jump_times + cancelled.
struct RtnTrace {
  std::vector<double> jump_times_us;
  std::vector<int> levels;
  double horizon_us = 0.0;
  std::uint64_t seed = 0;
  bool corrective_flip = false;  // trace ends in level 0 (engineered)
  std::vector<double> cancelled_flips;
  std::vector<double> cancelled_pulses;

  // Level of the segment containing t (segments are half-open on the right).
  int level_at(double t_us) const;
};

struct TraceEnsemble {
  std::vector<RtnTrace> traces;
  double t_p_us = 0.0;       // pulse width shared by flips and DD pulses
  std::size_t discarded = 0; // traces regenerated by the overlap policy
};

// Ensemble coherence.  by_final_level is keyed by the fluctuator level at
// each sample time (what a readout then would see); mean is defined as the
// key-order sum of the per-level entries, so the partition identity is
// exact.  std_error combines the cos and sin sample variances.
struct McResult {
  std::vector<double> times_us;
  std::vector<std::complex<double>> mean;
  std::map<int, std::vector<std::complex<double>>> by_final_level;
  std::vector<double> std_error;
  std::size_t n_traj = 0;
};

// Phase-accumulation velocity per fluctuator level (rad/us).
using VelocityMap = std::map<int, double>;

// 2LF: {-1: -v, +1: +v}; 3LF adds {0: 0}.  Matches the generator
// convention: a fluctuator stuck at level l contributes e^{i l v t}.
VelocityMap default_velocity_map(const FluctuatorParams& p);

// Continuous-time Markov chain: 2LF holds Exp(gamma) and flips; 3LF holds
// Exp(2 gamma) and moves to one of the other two levels uniformly.
// t1 = +inf gives a jump-free trace.  Throws on non-positive horizon or a
// 2LF level-0 start.
RtnTrace sample_trace(const FluctuatorParams& p, Init init, double horizon_us,
                      std::uint64_t seed);

// e^{i phi} with phi = integral of s(t) v(level(t)) dt over the schedule
// span; s toggles sign at qubit/DQ pulse centers, SQ pulses instead swap
// the velocity assignment of the driven pair (p0 <-> p+1 or p0 <-> p-1).
// Pulse widths are ignored (ideal pulses).  Throws when the schedule
// outruns the trace or the map lacks a level the trace visits.
std::complex<double> phase_integrate(const RtnTrace& trace,
                                     const PulseSchedule& schedule,
                                     const VelocityMap& velocity_of_level);

// Ensemble mean of e^{i phi} at each sample time under the schedule
// (empty schedule = free evolution).  Trajectory g draws its stream from
// substream_seed(seed, g); trajectories run in fixed-size blocks whose
// reductions fold in block order, so the result is deterministic for a
// given (seed, inputs) regardless of thread count.  times_us must be
// non-empty, non-negative and strictly increasing.
McResult mc_coherence(const FluctuatorParams& p, Init init,
                      const PulseSchedule& schedule,
                      const std::vector<double>& times_us, std::size_t n_traj,
                      std::uint64_t seed);

// Engineered two-level flip ensemble (levels -1 <-> 0, start -1) with flip
// rate 1/(2 t1_target), filtered against the schedule by the overlap
// policy: a flip within t_p/2 of a pulse center cancels both the flip and
// the pulse (recorded in the cancelled lists); a flip between t_p/2 and
// t_p of a center discards the whole trace, and the ensemble is topped
// back up from fresh substreams (discards counted).  Throws when pulse
// spacing makes t_p infeasible.
TraceEnsemble engineered_traces(double t1_target_us, std::size_t n_traces,
                                double horizon_us, double t_p_us,
                                const PulseSchedule& schedule,
                                std::uint64_t seed);

// Mean designed-level sign (+1 for level -1, -1 for level 0) per time.
// Designed flips are jump_times plus cancelled_flips: a cancelled pair
// removes two toggles of the same transition, so the realized parity
// equals the designed parity and this is the unbiased population estimate.
std::vector<double> population_difference(const TraceEnsemble& ensemble,
                                          const std::vector<double>& times_us);

// Common-mode readout background per final fluctuator level (arbitrary
// units; magnitudes are free parameters).
struct ReadoutErrorModel {
  std::map<int, double> background{{-1, 0.25}, {0, 0.5}, {+1, 0.25}};
};

struct RamseyConfig {
  double detuning_rad_us = 0.0;
  std::vector<double> times_us;
  std::size_t n_traj = 10000;
  std::uint64_t seed = 1;
  Init init = Init::level_m1;
  PulseSchedule schedule;  // DD between the pi/2 pulses; empty = free
};

// S(0 deg), S(180 deg) and their difference.  Trajectories ending in their
// original level contribute the fringe (1 + cos(delta t + psi + phase))/2;
// every trajectory contributes the background of its final level.  The
// difference is computed from the conditioned trig moments alone, so it is
// exactly independent of the background amplitudes.
struct DifferentialResult {
  std::vector<double> times_us;
  std::vector<double> s_0;
  std::vector<double> s_180;
  std::vector<double> difference;
  std::vector<std::complex<double>> conditioned;  // original-level coherence
  std::vector<std::complex<double>> total;        // all-manifold coherence
  std::size_t n_traj = 0;
};

DifferentialResult differential_signal(const FluctuatorParams& p,
                                       const RamseyConfig& cfg,
                                       const ReadoutErrorModel& err);

// One Ramsey signal; the second pi/2 phase must be 0 or pi.
std::vector<double> ramsey_signal(const FluctuatorParams& p,
                                  const RamseyConfig& cfg,
                                  const ReadoutErrorModel& err,
                                  double phase_rad);

// Line-delimited text, one record per trace (seed, horizon, t_p,
// corrective flag, initial level, jump list as time:level, cancelled flip
// and pulse lists).  Doubles print with 17 significant digits so a
// round-trip is bit-exact.  The importer throws on malformed input.
std::string traces_to_text(const TraceEnsemble& ensemble);
TraceEnsemble traces_from_text(const std::string& text);

}  // namespace telspin
