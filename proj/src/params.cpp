#include "telspin/params.hpp"

#include <stdexcept>

namespace telspin {

FluctuatorParams make_params(Levels levels, double t1_us, double hyperfine_mhz) {
  if (!(t1_us > 0.0))
    throw std::invalid_argument("make_params: t1 must be positive");
  if (!(hyperfine_mhz >= 0.0))
    throw std::invalid_argument("make_params: hyperfine coupling must be non-negative");
  FluctuatorParams p;
  p.levels = levels;
  p.t1_us = t1_us;
  p.hyperfine_mhz = hyperfine_mhz;
  return p;
}

Eigen::MatrixXcd generator(const FluctuatorParams& p) {
  const std::complex<double> iv(0.0, p.v());
  const double g = p.gamma();
  if (p.levels == Levels::two) {
    Eigen::MatrixXcd m(2, 2);
    m << 0.0, iv,
         iv, -2.0 * g;
    return m;
  }
  Eigen::MatrixXcd m(3, 3);
  m << 0.0,     0.0,      iv,
       2.0 * g, -3.0 * g, iv,
       0.0,     iv,       -3.0 * g;
  return m;
}

Eigen::MatrixXd occupancy_rate_matrix(const FluctuatorParams& p) {
  const double g = p.gamma();
  const int d = p.dim();
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(d, d, g);
  for (int j = 0; j < d; ++j) r(j, j) = -(d - 1) * g;
  return r;
}

Eigen::VectorXcd initial_vector(const FluctuatorParams& p, Init init) {
  if (p.levels == Levels::two) {
    Eigen::VectorXcd x(2);
    switch (init) {
      case Init::level_p1:    x << 1.0, 1.0;  break;
      case Init::level_m1:    x << 1.0, -1.0; break;
      case Init::equilibrium: x << 1.0, 0.0;  break;
      case Init::level_0:
        throw std::invalid_argument("initial_vector: level 0 undefined for a 2LF");
    }
    return x;
  }
  Eigen::VectorXcd x(3);
  switch (init) {
    case Init::level_0:     x << 1.0, 0.0, 0.0;        break;
    case Init::level_p1:    x << 1.0, 1.0, 1.0;        break;
    case Init::level_m1:    x << 1.0, 1.0, -1.0;       break;
    case Init::equilibrium: x << 1.0, 2.0 / 3.0, 0.0;  break;
  }
  return x;
}

const char* init_name(Init init) {
  switch (init) {
    case Init::level_0:     return "0";
    case Init::level_p1:    return "+1";
    case Init::level_m1:    return "-1";
    case Init::equilibrium: return "eq";
  }
  return "?";
}

}  // namespace telspin
