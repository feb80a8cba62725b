#include "telspin/mc.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "telspin/kernels.hpp"
#include "telspin/rng.hpp"
#include "telspin/threads.hpp"

namespace telspin {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int initial_level(const FluctuatorParams& p, Init init, SplitMix64& g) {
  if (p.levels == Levels::two) {
    switch (init) {
      case Init::level_p1:
        return +1;
      case Init::level_m1:
        return -1;
      case Init::level_0:
        throw std::invalid_argument(
            "sample_trace: level 0 undefined for a 2LF");
      case Init::equilibrium:
        return g.below(2) == 0 ? -1 : +1;
    }
  }
  switch (init) {
    case Init::level_0:
      return 0;
    case Init::level_p1:
      return +1;
    case Init::level_m1:
      return -1;
    case Init::equilibrium:
      return static_cast<int>(g.below(3)) - 1;
  }
  throw std::logic_error("initial_level: unreachable");
}

double exit_rate(const FluctuatorParams& p) {
  const double g = p.gamma();
  return p.levels == Levels::two ? g : 2.0 * g;
}

int next_level(const FluctuatorParams& p, int level, SplitMix64& g) {
  if (p.levels == Levels::two) return -level;
  switch (level) {  // uniform over the two other levels, ascending order
    case -1:
      return g.below(2) == 0 ? 0 : +1;
    case 0:
      return g.below(2) == 0 ? -1 : +1;
    default:
      return g.below(2) == 0 ? -1 : 0;
  }
}

std::array<double, 3> default_velocity_array(const FluctuatorParams& p) {
  return {-p.v(), 0.0, p.v()};
}

struct PulseEvent {
  double t;
  int kind;  // 0: sign toggle (qubit/DQ), 1: swap 0/+1, 2: swap 0/-1
};

std::vector<PulseEvent> pulse_events(const PulseSchedule& s) {
  std::vector<PulseEvent> out;
  for (const ScheduleEvent& e : s.events) {
    if (e.type != EventType::pulse) continue;
    int kind = 0;
    if (e.target == Drive::sq_plus) kind = 1;
    if (e.target == Drive::sq_minus) kind = 2;
    out.push_back({e.center_us, kind});
  }
  return out;
}

// Sign-toggle trains on the uniform grid (k + 1/2) tau admit a closed-form
// toggled-time integral, making the sweep O(jumps + samples) instead of
// O(pulses) for long CPMG/KDD trains.
struct ToggleGrid {
  bool uniform = false;
  double tau = 0.0;
  long count = 0;
};

ToggleGrid detect_grid(const std::vector<PulseEvent>& pulses) {
  ToggleGrid g;
  g.count = static_cast<long>(pulses.size());
  if (pulses.empty()) {
    g.uniform = true;
    return g;
  }
  for (const PulseEvent& e : pulses)
    if (e.kind != 0) return g;
  const double tau = 2.0 * pulses[0].t;
  if (!(tau > 0.0)) return g;
  for (std::size_t j = 0; j < pulses.size(); ++j) {
    const double want = (static_cast<double>(j) + 0.5) * tau;
    if (std::fabs(pulses[j].t - want) > 1e-9 * std::max(1.0, want)) return g;
  }
  g.uniform = true;
  g.tau = tau;
  return g;
}

// Integral of the toggling sign over [0, t] for `count` pulses at centers
// (k + 1/2) tau: a continuous tent wave while the train runs, then linear
// with slope (-1)^count.
double toggled_time(double t, double tau, long count) {
  if (count == 0) return t;
  const double t_last = (static_cast<double>(count) - 0.5) * tau;
  const double sgn = (count % 2 == 0) ? 1.0 : -1.0;
  if (t > t_last) return sgn * (t - static_cast<double>(count) * tau);
  const double y = t / tau;
  const double r = std::floor(y + 0.5);
  const double period_sgn =
      (static_cast<long long>(r) % 2 == 0) ? 1.0 : -1.0;
  return tau * period_sgn * (y - r);
}

// Walks one trajectory, sampling jumps on the fly, and calls
// emit(k, level, phi) at every sample time in order.  Returns the initial
// level.  The draw order (initial level, holding time, destination, ...)
// matches sample_trace exactly, so explicit traces from the same substream
// reproduce the same path.
template <typename Emit>
int sweep_trajectory(const FluctuatorParams& p, Init init,
                     const std::vector<PulseEvent>& pulses,
                     const ToggleGrid& grid, const std::array<double, 3>& vel0,
                     const std::vector<double>& times, std::uint64_t seed,
                     Emit&& emit) {
  SplitMix64 g(seed);
  const int l0 = initial_level(p, init, g);
  int level = l0;
  const double rate = exit_rate(p);
  const bool jumps = rate > 0.0 && std::isfinite(rate);
  double next_jump = jumps ? g.exponential(rate) : kInf;
  const std::size_t n_times = times.size();
  double phi = 0.0;
  std::size_t k = 0;
  if (grid.uniform) {
    double s_prev = 0.0;
    while (k < n_times) {
      if (next_jump < times[k]) {
        const double s_here = toggled_time(next_jump, grid.tau, grid.count);
        phi += vel0[level + 1] * (s_here - s_prev);
        s_prev = s_here;
        level = next_level(p, level, g);
        next_jump += g.exponential(rate);
      } else {
        const double s_here = toggled_time(times[k], grid.tau, grid.count);
        phi += vel0[level + 1] * (s_here - s_prev);
        s_prev = s_here;
        emit(k, level, phi);
        ++k;
      }
    }
  } else {
    std::array<double, 3> vel = vel0;
    double sign = 1.0;
    double t = 0.0;
    std::size_t j = 0;
    while (k < n_times) {
      const double t_pulse = j < pulses.size() ? pulses[j].t : kInf;
      if (t_pulse <= std::min(next_jump, times[k])) {
        phi += vel[level + 1] * sign * (t_pulse - t);
        t = t_pulse;
        if (pulses[j].kind == 0)
          sign = -sign;
        else if (pulses[j].kind == 1)
          std::swap(vel[1], vel[2]);
        else
          std::swap(vel[0], vel[1]);
        ++j;
      } else if (next_jump < times[k]) {
        phi += vel[level + 1] * sign * (next_jump - t);
        t = next_jump;
        level = next_level(p, level, g);
        next_jump += g.exponential(rate);
      } else {
        phi += vel[level + 1] * sign * (times[k] - t);
        t = times[k];
        emit(k, level, phi);
        ++k;
      }
    }
  }
  return l0;
}

void check_times(const std::vector<double>& times, const char* who) {
  if (times.empty())
    throw std::invalid_argument(std::string(who) + ": empty time grid");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!std::isfinite(times[k]) || times[k] < 0.0)
      throw std::invalid_argument(std::string(who) +
                                  ": times must be finite and non-negative");
    if (k > 0 && !(times[k] > times[k - 1]))
      throw std::invalid_argument(std::string(who) +
                                  ": times must strictly increase");
  }
}

struct Kahan {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

constexpr std::size_t kBlock = 4096;

std::vector<int> level_keys(const FluctuatorParams& p) {
  if (p.levels == Levels::two) return {-1, +1};
  return {-1, 0, +1};
}

void append_double(std::string& s, double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  s += buf;
}

}  // namespace

int RtnTrace::level_at(double t_us) const {
  const auto it =
      std::upper_bound(jump_times_us.begin(), jump_times_us.end(), t_us);
  return levels[static_cast<std::size_t>(it - jump_times_us.begin())];
}

VelocityMap default_velocity_map(const FluctuatorParams& p) {
  if (p.levels == Levels::two) return {{-1, -p.v()}, {+1, p.v()}};
  return {{-1, -p.v()}, {0, 0.0}, {+1, p.v()}};
}

RtnTrace sample_trace(const FluctuatorParams& p, Init init, double horizon_us,
                      std::uint64_t seed) {
  if (!(horizon_us > 0.0))
    throw std::invalid_argument("sample_trace: horizon must be positive");
  SplitMix64 g(seed);
  RtnTrace tr;
  tr.horizon_us = horizon_us;
  tr.seed = seed;
  int level = initial_level(p, init, g);
  tr.levels.push_back(level);
  const double rate = exit_rate(p);
  if (rate > 0.0 && std::isfinite(rate)) {
    for (double t = g.exponential(rate); t < horizon_us;
         t += g.exponential(rate)) {
      level = next_level(p, level, g);
      tr.jump_times_us.push_back(t);
      tr.levels.push_back(level);
    }
  }
  return tr;
}

std::complex<double> phase_integrate(const RtnTrace& trace,
                                     const PulseSchedule& schedule,
                                     const VelocityMap& velocity_of_level) {
  const double total = schedule.total_us;
  if (total > trace.horizon_us * (1.0 + 1e-12) + 1e-12)
    throw std::invalid_argument("phase_integrate: schedule outruns the trace");
  if (trace.levels.size() != trace.jump_times_us.size() + 1)
    throw std::invalid_argument("phase_integrate: malformed trace");
  std::array<double, 3> vel{0.0, 0.0, 0.0};
  std::array<bool, 3> have{false, false, false};
  for (const auto& [lvl, v] : velocity_of_level) {
    if (lvl < -1 || lvl > +1)
      throw std::invalid_argument(
          "phase_integrate: velocity level outside {-1,0,+1}");
    vel[lvl + 1] = v;
    have[lvl + 1] = true;
  }
  for (int lvl : trace.levels)
    if (lvl < -1 || lvl > +1 || !have[lvl + 1])
      throw std::invalid_argument(
          "phase_integrate: trace level missing from the velocity map");
  const std::vector<PulseEvent> pulses = pulse_events(schedule);
  double phi = 0.0;
  double t = 0.0;
  double sign = 1.0;
  std::size_t j = 0;
  std::size_t i = 0;
  int level = trace.levels[0];
  while (true) {
    const double t_pulse = j < pulses.size() ? pulses[j].t : kInf;
    const double t_jump =
        i < trace.jump_times_us.size() ? trace.jump_times_us[i] : kInf;
    if (t_pulse <= t_jump && t_pulse < total) {
      phi += vel[level + 1] * sign * (t_pulse - t);
      t = t_pulse;
      if (pulses[j].kind == 0)
        sign = -sign;
      else if (pulses[j].kind == 1)
        std::swap(vel[1], vel[2]);
      else
        std::swap(vel[0], vel[1]);
      ++j;
    } else if (t_jump < total) {
      phi += vel[level + 1] * sign * (t_jump - t);
      t = t_jump;
      ++i;
      level = trace.levels[i];
    } else {
      phi += vel[level + 1] * sign * (total - t);
      break;
    }
  }
  return std::polar(1.0, phi);
}

McResult mc_coherence(const FluctuatorParams& p, Init init,
                      const PulseSchedule& schedule,
                      const std::vector<double>& times_us, std::size_t n_traj,
                      std::uint64_t seed) {
  if (n_traj < 1)
    throw std::invalid_argument("mc_coherence: need at least one trajectory");
  check_times(times_us, "mc_coherence");
  const std::vector<PulseEvent> pulses = pulse_events(schedule);
  const ToggleGrid grid = detect_grid(pulses);
  const std::array<double, 3> vel = default_velocity_array(p);
  const std::size_t n_times = times_us.size();
  const std::size_t n_blocks = (n_traj + kBlock - 1) / kBlock;

  struct BlockMoments {
    std::vector<kernels::TrigMoments> m;  // n_times * 3, index k*3 + level+1
  };
  std::vector<BlockMoments> acc(n_blocks);
  parallel_for_blocks(n_blocks, [&](std::size_t b) {
    const std::size_t g0 = b * kBlock;
    const std::size_t g1 = std::min(n_traj, g0 + kBlock);
    std::vector<std::vector<double>> bucket(3 * n_times);
    for (std::size_t g = g0; g < g1; ++g)
      sweep_trajectory(p, init, pulses, grid, vel, times_us,
                       substream_seed(seed, g),
                       [&](std::size_t k, int lvl, double phi) {
                         bucket[k * 3 + (lvl + 1)].push_back(phi);
                       });
    BlockMoments& a = acc[b];
    a.m.resize(3 * n_times);
    for (std::size_t i = 0; i < 3 * n_times; ++i)
      a.m[i] = kernels::trig_moments(bucket[i].data(), bucket[i].size());
  });

  std::vector<Kahan> sc(3 * n_times), ss(3 * n_times), sc2(3 * n_times),
      ss2(3 * n_times);
  std::vector<std::size_t> cnt(3 * n_times, 0);
  for (const BlockMoments& a : acc)
    for (std::size_t i = 0; i < 3 * n_times; ++i) {
      sc[i].add(a.m[i].sum_cos);
      ss[i].add(a.m[i].sum_sin);
      sc2[i].add(a.m[i].sum_cos2);
      ss2[i].add(a.m[i].sum_sin2);
      cnt[i] += a.m[i].count;
    }

  McResult out;
  out.times_us = times_us;
  out.n_traj = n_traj;
  out.mean.resize(n_times);
  out.std_error.resize(n_times);
  const std::vector<int> keys = level_keys(p);
  for (int lvl : keys) out.by_final_level[lvl].assign(n_times, {0.0, 0.0});
  const double n = static_cast<double>(n_traj);
  for (std::size_t k = 0; k < n_times; ++k) {
    std::complex<double> total(0.0, 0.0);
    double tc = 0.0, ts = 0.0, tc2 = 0.0, ts2 = 0.0;
    std::size_t tn = 0;
    for (int lvl : keys) {
      const std::size_t i = k * 3 + static_cast<std::size_t>(lvl + 1);
      const std::complex<double> part(sc[i].sum / n, ss[i].sum / n);
      out.by_final_level[lvl][k] = part;
      total += part;
      tc += sc[i].sum;
      ts += ss[i].sum;
      tc2 += sc2[i].sum;
      ts2 += ss2[i].sum;
      tn += cnt[i];
    }
    assert(tn == n_traj);
    (void)tn;
    out.mean[k] = total;
    double se = 0.0;
    if (n_traj > 1) {
      const double vc = std::max(0.0, (tc2 - tc * tc / n) / (n - 1.0));
      const double vs = std::max(0.0, (ts2 - ts * ts / n) / (n - 1.0));
      se = std::sqrt((vc + vs) / n);
    }
    out.std_error[k] = se;
  }
  return out;
}

TraceEnsemble engineered_traces(double t1_target_us, std::size_t n_traces,
                                double horizon_us, double t_p_us,
                                const PulseSchedule& schedule,
                                std::uint64_t seed) {
  if (!(t1_target_us > 0.0))
    throw std::invalid_argument("engineered_traces: t1 must be positive");
  if (n_traces < 1)
    throw std::invalid_argument("engineered_traces: need at least one trace");
  if (!(horizon_us > 0.0))
    throw std::invalid_argument("engineered_traces: horizon must be positive");
  if (!(t_p_us >= 0.0) || !std::isfinite(t_p_us))
    throw std::invalid_argument("engineered_traces: invalid pulse width");
  const std::vector<double> centers = schedule.pulse_centers();
  for (std::size_t j = 1; j < centers.size(); ++j)
    if (centers[j] - centers[j - 1] <= t_p_us)
      throw std::invalid_argument(
          "engineered_traces: pulse spacing infeasible for this pulse width");
  const double rate =
      std::isfinite(t1_target_us) ? 1.0 / (2.0 * t1_target_us) : 0.0;
  TraceEnsemble out;
  out.t_p_us = t_p_us;
  std::uint64_t index = 0;
  std::vector<char> pulse_dead(centers.size(), 0);
  while (out.traces.size() < n_traces) {
    const std::uint64_t sub = substream_seed(seed, index++);
    SplitMix64 g(sub);
    RtnTrace tr;
    tr.horizon_us = horizon_us;
    tr.seed = sub;
    std::fill(pulse_dead.begin(), pulse_dead.end(), 0);
    bool discard = false;
    std::vector<double> applied;
    if (rate > 0.0) {
      for (double t = g.exponential(rate); t < horizon_us;
           t += g.exponential(rate)) {
        double d = kInf;
        std::size_t jn = 0;
        if (!centers.empty()) {
          const auto it =
              std::lower_bound(centers.begin(), centers.end(), t);
          if (it != centers.end()) {
            d = *it - t;
            jn = static_cast<std::size_t>(it - centers.begin());
          }
          if (it != centers.begin()) {
            const double dl = t - *(it - 1);
            if (dl < d) {
              d = dl;
              jn = static_cast<std::size_t>(it - centers.begin()) - 1;
            }
          }
        }
        if (d < 0.5 * t_p_us) {
          // Window overlap beyond half the width: apply neither pulse.  A
          // second flip hitting an already-cancelled pulse has no partner
          // left and is applied normally.
          if (!pulse_dead[jn]) {
            pulse_dead[jn] = 1;
            tr.cancelled_flips.push_back(t);
            tr.cancelled_pulses.push_back(centers[jn]);
          } else {
            applied.push_back(t);
          }
        } else if (d < t_p_us) {
          discard = true;
          break;
        } else {
          applied.push_back(t);
        }
      }
    }
    if (discard) {
      ++out.discarded;
      continue;
    }
    tr.jump_times_us = std::move(applied);
    int level = -1;
    tr.levels.push_back(level);
    for (std::size_t i = 0; i < tr.jump_times_us.size(); ++i) {
      level = level == -1 ? 0 : -1;
      tr.levels.push_back(level);
    }
    tr.corrective_flip = tr.levels.back() == 0;
    out.traces.push_back(std::move(tr));
  }
  return out;
}

std::vector<double> population_difference(const TraceEnsemble& ensemble,
                                          const std::vector<double>& times_us) {
  if (ensemble.traces.empty())
    throw std::invalid_argument("population_difference: empty ensemble");
  check_times(times_us, "population_difference");
  std::vector<double> sum(times_us.size(), 0.0);
  std::vector<double> designed;
  for (const RtnTrace& tr : ensemble.traces) {
    designed.resize(tr.jump_times_us.size() + tr.cancelled_flips.size());
    std::merge(tr.jump_times_us.begin(), tr.jump_times_us.end(),
               tr.cancelled_flips.begin(), tr.cancelled_flips.end(),
               designed.begin());
    std::size_t i = 0;
    for (std::size_t k = 0; k < times_us.size(); ++k) {
      while (i < designed.size() && designed[i] <= times_us[k]) ++i;
      sum[k] += i % 2 == 0 ? 1.0 : -1.0;
    }
  }
  std::vector<double> out(times_us.size());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = sum[k] / static_cast<double>(ensemble.traces.size());
  return out;
}

DifferentialResult differential_signal(const FluctuatorParams& p,
                                       const RamseyConfig& cfg,
                                       const ReadoutErrorModel& err) {
  if (cfg.n_traj < 1)
    throw std::invalid_argument(
        "differential_signal: need at least one trajectory");
  check_times(cfg.times_us, "differential_signal");
  const std::vector<int> keys = level_keys(p);
  std::array<double, 3> bg{0.0, 0.0, 0.0};
  for (int lvl : keys) {
    const auto it = err.background.find(lvl);
    if (it == err.background.end())
      throw std::invalid_argument(
          "differential_signal: background missing a model level");
    bg[lvl + 1] = it->second;
  }
  const std::vector<PulseEvent> pulses = pulse_events(cfg.schedule);
  const ToggleGrid grid = detect_grid(pulses);
  const std::array<double, 3> vel = default_velocity_array(p);
  const std::size_t n_times = cfg.times_us.size();
  const std::size_t n_blocks = (cfg.n_traj + kBlock - 1) / kBlock;

  struct BlockMoments {
    std::vector<kernels::TrigMoments> matched;       // conditioned on l0
    std::vector<kernels::TrigMoments> all;           // every trajectory
    std::vector<std::array<std::size_t, 3>> counts;  // final level counts
  };
  std::vector<BlockMoments> acc(n_blocks);
  parallel_for_blocks(n_blocks, [&](std::size_t b) {
    const std::size_t g0 = b * kBlock;
    const std::size_t g1 = std::min(cfg.n_traj, g0 + kBlock);
    std::vector<std::vector<double>> mphase(n_times), aphase(n_times);
    std::vector<std::array<std::size_t, 3>> counts(n_times, {0, 0, 0});
    std::vector<int> lvl_buf(n_times);
    std::vector<double> phi_buf(n_times);
    for (std::size_t g = g0; g < g1; ++g) {
      const int l0 = sweep_trajectory(p, cfg.init, pulses, grid, vel,
                                      cfg.times_us, substream_seed(cfg.seed, g),
                                      [&](std::size_t k, int lvl, double phi) {
                                        lvl_buf[k] = lvl;
                                        phi_buf[k] = phi;
                                      });
      for (std::size_t k = 0; k < n_times; ++k) {
        aphase[k].push_back(phi_buf[k]);
        ++counts[k][lvl_buf[k] + 1];
        if (lvl_buf[k] == l0) mphase[k].push_back(phi_buf[k]);
      }
    }
    BlockMoments& a = acc[b];
    a.matched.resize(n_times);
    a.all.resize(n_times);
    a.counts = std::move(counts);
    for (std::size_t k = 0; k < n_times; ++k) {
      a.matched[k] = kernels::trig_moments(mphase[k].data(), mphase[k].size());
      a.all[k] = kernels::trig_moments(aphase[k].data(), aphase[k].size());
    }
  });

  std::vector<Kahan> mcs(n_times), mss(n_times), acs(n_times), ass(n_times);
  std::vector<std::size_t> nmatch(n_times, 0);
  std::vector<std::array<std::size_t, 3>> counts(n_times, {0, 0, 0});
  for (const BlockMoments& a : acc)
    for (std::size_t k = 0; k < n_times; ++k) {
      mcs[k].add(a.matched[k].sum_cos);
      mss[k].add(a.matched[k].sum_sin);
      acs[k].add(a.all[k].sum_cos);
      ass[k].add(a.all[k].sum_sin);
      nmatch[k] += a.matched[k].count;
      for (int i = 0; i < 3; ++i) counts[k][i] += a.counts[k][i];
    }

  DifferentialResult out;
  out.times_us = cfg.times_us;
  out.n_traj = cfg.n_traj;
  out.s_0.resize(n_times);
  out.s_180.resize(n_times);
  out.difference.resize(n_times);
  out.conditioned.resize(n_times);
  out.total.resize(n_times);
  const double n = static_cast<double>(cfg.n_traj);
  for (std::size_t k = 0; k < n_times; ++k) {
    out.conditioned[k] = {mcs[k].sum / n, mss[k].sum / n};
    out.total[k] = {acs[k].sum / n, ass[k].sum / n};
    const double dt = cfg.detuning_rad_us * cfg.times_us[k];
    // sum over matched trajectories of cos(delta t + psi)
    const double fringe = std::cos(dt) * mcs[k].sum - std::sin(dt) * mss[k].sum;
    double bgsum = 0.0;
    for (int lvl : keys)
      bgsum += bg[lvl + 1] * static_cast<double>(counts[k][lvl + 1]);
    const double match = static_cast<double>(nmatch[k]);
    out.s_0[k] = 0.5 * (match + fringe) / n + bgsum / n;
    out.s_180[k] = 0.5 * (match - fringe) / n + bgsum / n;
    out.difference[k] = fringe / n;
  }
  return out;
}

std::vector<double> ramsey_signal(const FluctuatorParams& p,
                                  const RamseyConfig& cfg,
                                  const ReadoutErrorModel& err,
                                  double phase_rad) {
  const bool is_zero = std::fabs(phase_rad) <= 1e-12;
  const bool is_pi = std::fabs(phase_rad - pi) <= 1e-12;
  if (!is_zero && !is_pi)
    throw std::invalid_argument(
        "ramsey_signal: second pulse phase must be 0 or pi");
  DifferentialResult r = differential_signal(p, cfg, err);
  return is_zero ? std::move(r.s_0) : std::move(r.s_180);
}

std::string traces_to_text(const TraceEnsemble& ensemble) {
  std::string s;
  s += "traces ";
  s += std::to_string(ensemble.traces.size());
  s += ' ';
  append_double(s, ensemble.t_p_us);
  s += ' ';
  s += std::to_string(ensemble.discarded);
  s += '\n';
  for (const RtnTrace& tr : ensemble.traces) {
    s += "T ";
    s += std::to_string(tr.seed);
    s += ' ';
    append_double(s, tr.horizon_us);
    s += ' ';
    append_double(s, ensemble.t_p_us);
    s += tr.corrective_flip ? " 1 " : " 0 ";
    s += std::to_string(tr.levels.empty() ? -1 : tr.levels.front());
    s += " J ";
    s += std::to_string(tr.jump_times_us.size());
    for (std::size_t i = 0; i < tr.jump_times_us.size(); ++i) {
      s += ' ';
      append_double(s, tr.jump_times_us[i]);
      s += ':';
      s += std::to_string(tr.levels[i + 1]);
    }
    s += " C ";
    s += std::to_string(tr.cancelled_flips.size());
    for (double t : tr.cancelled_flips) {
      s += ' ';
      append_double(s, t);
    }
    s += " P ";
    s += std::to_string(tr.cancelled_pulses.size());
    for (double t : tr.cancelled_pulses) {
      s += ' ';
      append_double(s, t);
    }
    s += '\n';
  }
  return s;
}

namespace {

[[noreturn]] void bad_traces(const std::string& what) {
  throw std::runtime_error("traces_from_text: " + what);
}

double read_double(std::istream& in, const char* what) {
  double x;
  if (!(in >> x)) bad_traces(std::string("missing ") + what);
  return x;
}

long long read_int(std::istream& in, const char* what) {
  long long x;
  if (!(in >> x)) bad_traces(std::string("missing ") + what);
  return x;
}

void expect_word(std::istream& in, const char* want) {
  std::string w;
  if (!(in >> w) || w != want)
    bad_traces(std::string("expected '") + want + "'");
}

}  // namespace

TraceEnsemble traces_from_text(const std::string& text) {
  std::istringstream in(text);
  expect_word(in, "traces");
  const long long n = read_int(in, "trace count");
  if (n < 0) bad_traces("negative trace count");
  TraceEnsemble out;
  out.t_p_us = read_double(in, "pulse width");
  const long long discarded = read_int(in, "discard count");
  if (discarded < 0) bad_traces("negative discard count");
  out.discarded = static_cast<std::size_t>(discarded);
  out.traces.reserve(static_cast<std::size_t>(n));
  for (long long rec = 0; rec < n; ++rec) {
    expect_word(in, "T");
    RtnTrace tr;
    unsigned long long seed;
    if (!(in >> seed)) bad_traces("missing seed");
    tr.seed = seed;
    tr.horizon_us = read_double(in, "horizon");
    const double tp = read_double(in, "record pulse width");
    if (tp != out.t_p_us) bad_traces("record pulse width differs from header");
    const long long corrective = read_int(in, "corrective flag");
    if (corrective != 0 && corrective != 1) bad_traces("corrective flag not 0/1");
    tr.corrective_flip = corrective == 1;
    const long long init = read_int(in, "initial level");
    if (init < -1 || init > 1) bad_traces("initial level outside {-1,0,+1}");
    tr.levels.push_back(static_cast<int>(init));
    expect_word(in, "J");
    const long long jumps = read_int(in, "jump count");
    if (jumps < 0) bad_traces("negative jump count");
    double prev = -kInf;
    for (long long i = 0; i < jumps; ++i) {
      std::string tok;
      if (!(in >> tok)) bad_traces("missing jump record");
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos) bad_traces("jump record missing ':'");
      char* end = nullptr;
      const double t = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + colon) bad_traces("bad jump time");
      const long lvl = std::strtol(tok.c_str() + colon + 1, &end, 10);
      if (*end != '\0' || lvl < -1 || lvl > 1) bad_traces("bad jump level");
      if (!(t > prev)) bad_traces("jump times not increasing");
      if (!(t < tr.horizon_us)) bad_traces("jump beyond horizon");
      if (static_cast<int>(lvl) == tr.levels.back())
        bad_traces("jump keeps the level unchanged");
      prev = t;
      tr.jump_times_us.push_back(t);
      tr.levels.push_back(static_cast<int>(lvl));
    }
    expect_word(in, "C");
    const long long cancelled = read_int(in, "cancelled flip count");
    if (cancelled < 0) bad_traces("negative cancelled flip count");
    for (long long i = 0; i < cancelled; ++i)
      tr.cancelled_flips.push_back(read_double(in, "cancelled flip"));
    expect_word(in, "P");
    const long long dead = read_int(in, "cancelled pulse count");
    if (dead < 0) bad_traces("negative cancelled pulse count");
    for (long long i = 0; i < dead; ++i)
      tr.cancelled_pulses.push_back(read_double(in, "cancelled pulse"));
    out.traces.push_back(std::move(tr));
  }
  std::string tail;
  if (in >> tail) bad_traces("trailing content after the last record");
  return out;
}

}  // namespace telspin
