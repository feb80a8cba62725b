#pragma once

#include <complex>
#include <vector>

#include "telspin/params.hpp"

// Semiclassical engine: evolves the Fourier-space coherence vector through
// free segments (generator exponentials) and ideal instantaneous pi pulses,
// and evaluates the closed forms that follow from the 2LF cycle transfer
// matrix and the weak-coupling 3LF cubic.

namespace telspin {

// Pulse drive applied between free segments.  For the scalar engines every
// pi pulse acts only through population bookkeeping, never through its phase.
//   qubit:    sign flip of the velocity-difference coordinate (2LF and 3LF)
//   dq:       3LF double-quantum drive; same matrix as qubit
//   sq_plus:  3LF single-quantum drive swapping the resting and +v slots
//   sq_minus: 3LF single-quantum drive swapping the resting and -v slots
enum class Drive { qubit, dq, sq_plus, sq_minus };

const char* drive_name(Drive d);

// Pulse operator in the (P, p) / (P, p_plus, p) basis.  Involution: U^2 = I
// with exact arithmetic.  SQ drives are occupancy-slot swaps conjugated into
// the Fourier basis and are only defined for a 3LF.
Eigen::MatrixXcd pulse_operator(const FluctuatorParams& p, Drive d);

// Free-evolution coherence <e^{i phi}>(t), first component of e^{Mt} x0.
std::complex<double> coherence_free(const FluctuatorParams& p, Init init,
                                    double t_us);
std::vector<std::complex<double>> coherence_free(
    const FluctuatorParams& p, Init init, const std::vector<double>& t_us);

// Cycle transfer matrix e^{M tau/2} U e^{M tau/2} for one pulse period.
Eigen::MatrixXcd cycle_operator(const FluctuatorParams& p, Drive d,
                                double tau_us);
Eigen::MatrixXcd cycle_operator_with(const FluctuatorParams& p,
                                     const Eigen::MatrixXcd& u, double tau_us);

// Spectral form of the cycle map: coherence after N pulses is
// sum_i coeff_i * lambda_i^N.  Eigenvalues are sorted by descending real
// part; coeff_i couples the initial vector to the coherence component.
struct EigenReport {
  Eigen::VectorXcd lambdas;
  Eigen::VectorXcd coeffs;
};
EigenReport eigen_report(const FluctuatorParams& p, Init init, Drive d,
                         double tau_us);
EigenReport eigen_report_with(const Eigen::MatrixXcd& cycle,
                              const Eigen::VectorXcd& x0);

std::complex<double> eval_report(const EigenReport& r, long n);

// Coherence after n_pulses cycles of period tau.
std::complex<double> coherence_dd(const FluctuatorParams& p, Init init,
                                  Drive d, double tau_us, long n_pulses);
std::vector<std::complex<double>> coherence_dd_curve(
    const FluctuatorParams& p, Init init, Drive d, double tau_us,
    const std::vector<long>& n_pulses);

// Closed forms for the 2LF cycle map under the qubit/dq drive.  Valid in
// both regimes via analytic continuation (W = sqrt(v^2 - gamma^2) turns
// imaginary for v < gamma while every reported quantity stays real/finite).
struct TwoLevelCycleForms {
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
  std::complex<double> c1, c2, c3, c4;  // coherence(N) = p c1 L+^N - p c2 L-^N
                                        //              + c3 L+^N + c4 L-^N
};
TwoLevelCycleForms two_level_cycle_forms(const FluctuatorParams& p,
                                         double tau_us);

// Closed-form decay rate (1/us) of the pulsed 2LF coherence,
// 1/T2 = gamma - ln(lambda_plus e^{gamma tau}) / tau.
double t2_rate_2lf(const FluctuatorParams& p, double tau_us);

// Closed-form weak-coupling free-decay rate of the 3LF (real cubic root;
// the radicand v^4 - 9 v^2 g^2 + 27 g^4 is strictly positive).
double weak_t2star_rate_3lf(const FluctuatorParams& p);

// Strong-coupling free-decay limits: 2*t1 (2LF), 1.5*t1 (3LF).
double strong_limit_t2star(const FluctuatorParams& p);

struct CrossingResult {
  bool found = false;
  double t_us = 0.0;
};

// 1/e time of the free-decay envelope sum_i |c_i| e^{Re(lambda_i) t} built
// from the eigen expansion of the generator.  The envelope is monotone and
// oscillation-free, which is what an oscillating-exponential fit measures;
// the raw |coherence| passes through hyperfine-oscillation zeros for
// mixture preparations.
CrossingResult free_envelope_t2star(const FluctuatorParams& p, Init init);

// First N tau with |coherence(N tau)| <= 1/e, located by geometric
// bracketing, bisection and log-linear interpolation between the bracketing
// pulse counts.  not-found is reported when no crossing occurs within
// max_cycles.
CrossingResult effective_t2(const FluctuatorParams& p, Init init, Drive d,
                            double tau_us, long max_cycles = 10'000'000);

struct SweepRow {
  double tau_us = 0.0;
  CrossingResult t2;
};
std::vector<SweepRow> sweep_tau(const FluctuatorParams& p, Init init, Drive d,
                                const std::vector<double>& taus_us);

}  // namespace telspin
