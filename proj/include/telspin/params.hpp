#pragma once

#include <complex>

#include <Eigen/Dense>

// Model core: a qubit dephased by a single strongly coupled two- or
// three-level telegraph fluctuator.  Internally all frequencies are angular
// (rad/us) and all rates are 1/us; the user-facing hyperfine coupling A is
// cyclic (MHz = cycles/us).
//
// Conventions:
//   2LF: pairwise jump rate gamma = 1/(2*t1), phase speed v = pi*A  (= 2pi*A/2)
//   3LF: pairwise jump rate gamma = 1/(3*t1), phase speed v = 2pi*A
//
// The coherence is propagated in a compact Fourier-space basis:
//   2LF: (P, p)          with P = p_+ + p_-, p = p_+ - p_-
//   3LF: (P, p_plus, p)  with P = p_0 + p_l + p_r, p_plus = p_l + p_r,
//                        p = p_r - p_l
// where p_r/p_l are the right/left-moving populations (phase velocity +v/-v)
// and p_0 is the resting one.  The qubit coherence is the first component.

namespace telspin {

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double two_pi = 2.0 * pi;

enum class Levels : int { two = 2, three = 3 };

// Initial fluctuator preparation.  level_0 is valid for 3LF only; for 2LF
// level_p1/level_m1 select the +v/-v mover.
enum class Init { level_0, level_p1, level_m1, equilibrium };

struct FluctuatorParams {
  Levels levels = Levels::two;
  double t1_us = 1.0;
  double hyperfine_mhz = 0.0;

  int dim() const { return levels == Levels::two ? 2 : 3; }
  double gamma() const {
    return levels == Levels::two ? 1.0 / (2.0 * t1_us) : 1.0 / (3.0 * t1_us);
  }
  double v() const {
    return levels == Levels::two ? pi * hyperfine_mhz : two_pi * hyperfine_mhz;
  }
};

// Validates and builds parameters.  Throws std::invalid_argument on
// non-positive t1 or negative hyperfine coupling.
FluctuatorParams make_params(Levels levels, double t1_us, double hyperfine_mhz);

// Fourier-space generator block governing the qubit coherence,
//   2LF: [[0, iv], [iv, -2g]]
//   3LF: [[0, 0, iv], [2g, -3g, iv], [0, iv, -3g]]
// in the bases documented above.
Eigen::MatrixXcd generator(const FluctuatorParams& p);

// Occupancy-basis jump generator (no phase terms): column sums vanish
// exactly, so total population is conserved.
Eigen::MatrixXd occupancy_rate_matrix(const FluctuatorParams& p);

// Initial Fourier vector for a given preparation.  First component is 1.
Eigen::VectorXcd initial_vector(const FluctuatorParams& p, Init init);

const char* init_name(Init init);

}  // namespace telspin
