#include "telspin/analytic.hpp"

#include <cmath>
#include <stdexcept>

#include "telspin/matexp.hpp"

namespace telspin {

namespace {

using cd = std::complex<double>;

cd cpow_n(cd base, long n) {
  cd r(1.0, 0.0);
  while (n > 0) {
    if (n & 1) r *= base;
    base *= base;
    n >>= 1;
  }
  return r;
}

// Spectral expansion of coherence(t) = first component of e^{Mt} x0 (or of
// the N-th cycle power).  Coefficients couple x0 to the coherence row.
struct Spectral {
  Eigen::VectorXcd lambdas;
  Eigen::VectorXcd coeffs;
  bool reliable = false;
};

Spectral spectral_of(const Eigen::MatrixXcd& m, const Eigen::VectorXcd& x0) {
  Spectral s;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m);
  if (es.info() != Eigen::Success) return s;
  const Eigen::MatrixXcd& vec = es.eigenvectors();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(vec);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smax / smin > 1e8) return s;

  const Eigen::VectorXcd w = vec.partialPivLu().solve(x0);
  const int n = static_cast<int>(m.rows());

  // Sort by descending real part (slowest-decaying cycle mode first).
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const cd la = es.eigenvalues()(a), lb = es.eigenvalues()(b);
    if (la.real() != lb.real()) return la.real() > lb.real();
    return la.imag() > lb.imag();
  });

  s.lambdas.resize(n);
  s.coeffs.resize(n);
  for (int i = 0; i < n; ++i) {
    s.lambdas(i) = es.eigenvalues()(order[i]);
    s.coeffs(i) = vec(0, order[i]) * w(order[i]);
  }
  s.reliable = true;
  return s;
}

}  // namespace

const char* drive_name(Drive d) {
  switch (d) {
    case Drive::qubit:    return "qubit";
    case Drive::dq:       return "dq";
    case Drive::sq_plus:  return "sq+";
    case Drive::sq_minus: return "sq-";
  }
  return "?";
}

Eigen::MatrixXcd pulse_operator(const FluctuatorParams& p, Drive d) {
  if (p.levels == Levels::two) {
    if (d == Drive::sq_plus || d == Drive::sq_minus)
      throw std::invalid_argument("pulse_operator: SQ drive undefined for a 2LF");
    Eigen::MatrixXcd u(2, 2);
    u << 1, 0,
         0, -1;
    return u;
  }
  Eigen::MatrixXcd u(3, 3);
  switch (d) {
    case Drive::qubit:
    case Drive::dq:
      u << 1, 0, 0,
           0, 1, 0,
           0, 0, -1;
      break;
    case Drive::sq_plus:
      // Occupancy swap p0 <-> pr conjugated into (P, p_plus, p).
      u << 1, 0, 0,
           1, -0.5, -0.5,
           1, -1.5, 0.5;
      break;
    case Drive::sq_minus:
      // Occupancy swap p0 <-> pl conjugated into (P, p_plus, p).
      u << 1, 0, 0,
           1, -0.5, 0.5,
           -1, 1.5, 0.5;
      break;
  }
  return u;
}

std::complex<double> coherence_free(const FluctuatorParams& p, Init init,
                                    double t_us) {
  if (!(t_us >= 0.0))
    throw std::invalid_argument("coherence_free: t must be non-negative");
  return (mat_exp(generator(p), t_us) * initial_vector(p, init))(0);
}

std::vector<std::complex<double>> coherence_free(
    const FluctuatorParams& p, Init init, const std::vector<double>& t_us) {
  std::vector<cd> out(t_us.size());
  const auto s = spectral_of(generator(p), initial_vector(p, init));
  if (s.reliable) {
    for (size_t k = 0; k < t_us.size(); ++k) {
      cd c(0.0);
      for (int i = 0; i < s.lambdas.size(); ++i)
        c += s.coeffs(i) * std::exp(s.lambdas(i) * t_us[k]);
      out[k] = c;
    }
  } else {
    for (size_t k = 0; k < t_us.size(); ++k)
      out[k] = coherence_free(p, init, t_us[k]);
  }
  return out;
}

Eigen::MatrixXcd cycle_operator_with(const FluctuatorParams& p,
                                     const Eigen::MatrixXcd& u,
                                     double tau_us) {
  if (!(tau_us > 0.0))
    throw std::invalid_argument("cycle_operator: tau must be positive");
  const Eigen::MatrixXcd half = mat_exp(generator(p), 0.5 * tau_us);
  return half * u * half;
}

Eigen::MatrixXcd cycle_operator(const FluctuatorParams& p, Drive d,
                                double tau_us) {
  return cycle_operator_with(p, pulse_operator(p, d), tau_us);
}

EigenReport eigen_report_with(const Eigen::MatrixXcd& cycle,
                              const Eigen::VectorXcd& x0) {
  const auto s = spectral_of(cycle, x0);
  if (!s.reliable)
    throw std::runtime_error(
        "eigen_report: cycle map is too close to defective for a spectral "
        "expansion");
  return EigenReport{s.lambdas, s.coeffs};
}

EigenReport eigen_report(const FluctuatorParams& p, Init init, Drive d,
                         double tau_us) {
  return eigen_report_with(cycle_operator(p, d, tau_us),
                           initial_vector(p, init));
}

std::complex<double> eval_report(const EigenReport& r, long n) {
  cd c(0.0);
  for (int i = 0; i < r.lambdas.size(); ++i)
    c += r.coeffs(i) * cpow_n(r.lambdas(i), n);
  return c;
}

std::complex<double> coherence_dd(const FluctuatorParams& p, Init init,
                                  Drive d, double tau_us, long n_pulses) {
  if (n_pulses < 0)
    throw std::invalid_argument("coherence_dd: pulse count must be >= 0");
  if (n_pulses == 0) return cd(1.0, 0.0);
  const auto cycle = cycle_operator(p, d, tau_us);
  const auto s = spectral_of(cycle, initial_vector(p, init));
  if (s.reliable) return eval_report(EigenReport{s.lambdas, s.coeffs}, n_pulses);

  // Defective cycle: binary matrix powers.
  Eigen::VectorXcd x = initial_vector(p, init);
  Eigen::MatrixXcd pw = cycle;
  long n = n_pulses;
  while (n > 0) {
    if (n & 1) x = pw * x;
    pw = pw * pw;
    n >>= 1;
  }
  return x(0);
}

std::vector<std::complex<double>> coherence_dd_curve(
    const FluctuatorParams& p, Init init, Drive d, double tau_us,
    const std::vector<long>& n_pulses) {
  std::vector<cd> out(n_pulses.size());
  const auto cycle = cycle_operator(p, d, tau_us);
  const auto s = spectral_of(cycle, initial_vector(p, init));
  for (size_t k = 0; k < n_pulses.size(); ++k) {
    if (n_pulses[k] < 0)
      throw std::invalid_argument("coherence_dd_curve: negative pulse count");
    if (n_pulses[k] == 0) {
      out[k] = cd(1.0, 0.0);
    } else if (s.reliable) {
      out[k] = eval_report(EigenReport{s.lambdas, s.coeffs}, n_pulses[k]);
    } else {
      out[k] = coherence_dd(p, init, d, tau_us, n_pulses[k]);
    }
  }
  return out;
}

TwoLevelCycleForms two_level_cycle_forms(const FluctuatorParams& p,
                                         double tau_us) {
  if (p.levels != Levels::two)
    throw std::invalid_argument("two_level_cycle_forms: 2LF only");
  if (!(tau_us > 0.0))
    throw std::invalid_argument("two_level_cycle_forms: tau must be positive");
  const double g = p.gamma(), v = p.v(), tau = tau_us;
  const double w2 = v * v - g * g;
  const double eg = std::exp(-g * tau);
  TwoLevelCycleForms f;

  if (std::abs(w2) < 1e-100) {
    // v = gamma: W -> 0 limit of every quantity below.
    const double r = std::sqrt(1.0 + g * g * tau * tau);
    f.lambda_plus = eg * (g * tau + r);
    f.lambda_minus = eg * (g * tau - r);
    f.c1 = f.c2 = cd(0.0, v * g * tau * tau / (4.0 * r));
    const double q = (1.0 + 0.5 * g * g * tau * tau) / (2.0 * r);
    f.c3 = cd(0.5 + q, 0.0);
    f.c4 = cd(0.5 - q, 0.0);
    return f;
  }

  // W is kept exactly on the real or imaginary axis so that the analytic
  // continuation into the weak regime never straddles a branch cut.
  const cd w = w2 >= 0.0 ? cd(std::sqrt(w2), 0.0) : cd(0.0, std::sqrt(-w2));
  const cd sin_wt = std::sin(w * tau);
  const cd cos_wt = std::cos(w * tau);
  const cd sin_half = std::sin(w * tau * 0.5);
  // v^2 - g^2 cos^2(W tau) rewritten as W^2 + g^2 sin^2(W tau): no
  // cancellation near the regime crossover.
  const cd s = std::sqrt(w * w + (g * sin_wt) * (g * sin_wt));
  const cd lp = eg * (g * sin_wt + s) / w;
  const cd lm = eg * (g * sin_wt - s) / w;
  f.lambda_plus = lp.real();
  f.lambda_minus = lm.real();

  const cd b = 1.0 / (w * s);
  f.c1 = f.c2 = cd(0.0, 1.0) * v * g * sin_half * sin_half * b;
  const cd q = 0.5 * b * (v * v - g * g * cos_wt);
  f.c3 = 0.5 + q;
  f.c4 = 0.5 - q;
  return f;
}

double t2_rate_2lf(const FluctuatorParams& p, double tau_us) {
  if (p.levels != Levels::two)
    throw std::invalid_argument("t2_rate_2lf: 2LF only");
  if (!(tau_us > 0.0))
    throw std::invalid_argument("t2_rate_2lf: tau must be positive");
  const double g = p.gamma(), v = p.v(), tau = tau_us;
  const double w2 = v * v - g * g;
  if (std::abs(w2) < 1e-100)
    return g - std::asinh(g * tau) / tau;
  const cd w = w2 >= 0.0 ? cd(std::sqrt(w2), 0.0) : cd(0.0, std::sqrt(-w2));
  const cd sin_wt = std::sin(w * tau);
  const cd s = std::sqrt(w * w + (g * sin_wt) * (g * sin_wt));
  const cd ratio = (g * sin_wt + s) / w;
  return g - std::log(ratio).real() / tau;
}

double weak_t2star_rate_3lf(const FluctuatorParams& p) {
  if (p.levels != Levels::three)
    throw std::invalid_argument("weak_t2star_rate_3lf: 3LF only");
  const double g = p.gamma(), v = p.v();
  // Radicand is (v^2 - 4.5 g^2)^2 + 6.75 g^4 > 0, so K is real.
  const double rad = v * v * v * v - 9.0 * v * v * g * g + 27.0 * g * g * g * g;
  const double k = std::cbrt(9.0 * g * g * g +
                             std::sqrt(3.0) * v * std::sqrt(rad));
  const double c13 = std::cbrt(3.0);        // 3^(1/3)
  const double c23 = c13 * c13;             // 3^(2/3)
  return 2.0 * g - (3.0 * g * g - v * v) / (c13 * k) - k / c23;
}

double strong_limit_t2star(const FluctuatorParams& p) {
  return p.levels == Levels::two ? 2.0 * p.t1_us : 1.5 * p.t1_us;
}

CrossingResult free_envelope_t2star(const FluctuatorParams& p, Init init) {
  const double inv_e = std::exp(-1.0);
  const auto s = spectral_of(generator(p), initial_vector(p, init));
  if (s.reliable) {
    auto env = [&](double t) {
      double e = 0.0;
      for (int i = 0; i < s.lambdas.size(); ++i)
        e += std::abs(s.coeffs(i)) * std::exp(s.lambdas(i).real() * t);
      return e;
    };
    if (env(0.0) <= inv_e) return {true, 0.0};
    double hi = p.t1_us;
    for (int k = 0; k < 200 && env(hi) > inv_e; ++k) hi *= 2.0;
    if (env(hi) > inv_e) return {false, 0.0};
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (env(mid) > inv_e ? lo : hi) = mid;
    }
    return {true, 0.5 * (lo + hi)};
  }
  // Defective generator (measure-zero parameter set): dense |coherence|.
  double hi = p.t1_us;
  auto mag = [&](double t) { return std::abs(coherence_free(p, init, t)); };
  for (int k = 0; k < 60 && mag(hi) > inv_e; ++k) hi *= 2.0;
  if (mag(hi) > inv_e) return {false, 0.0};
  double lo = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mag(mid) > inv_e ? lo : hi) = mid;
  }
  return {true, 0.5 * (lo + hi)};
}

CrossingResult effective_t2(const FluctuatorParams& p, Init init, Drive d,
                            double tau_us, long max_cycles) {
  const double inv_e = std::exp(-1.0);
  const auto cycle = cycle_operator(p, d, tau_us);
  const auto x0 = initial_vector(p, init);
  const auto s = spectral_of(cycle, x0);

  // Binary ladder of cycle powers backs the defective fallback.
  std::vector<Eigen::MatrixXcd> ladder;
  if (!s.reliable) {
    ladder.push_back(cycle);
    while ((1L << ladder.size()) <= max_cycles)
      ladder.push_back(ladder.back() * ladder.back());
  }
  auto coh = [&](long n) -> double {
    if (n == 0) return 1.0;
    if (s.reliable)
      return std::abs(eval_report(EigenReport{s.lambdas, s.coeffs}, n));
    Eigen::VectorXcd x = x0;
    for (size_t b = 0; b < ladder.size(); ++b)
      if (n & (1L << b)) x = ladder[b] * x;
    return std::abs(x(0));
  };

  long lo = 0, hi = 1;
  while (coh(hi) > inv_e) {
    lo = hi;
    hi *= 2;
    if (hi > max_cycles) return {false, 0.0};
  }
  // Smallest bracketed N with |coherence| <= 1/e.
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    (coh(mid) > inv_e ? lo : hi) = mid;
  }
  const double y_lo = coh(lo), y_hi = std::max(coh(hi), 1e-300);
  double frac = 1.0;
  if (y_lo > y_hi)
    frac = (std::log(y_lo) + 1.0) / (std::log(y_lo) - std::log(y_hi));
  return {true, (static_cast<double>(lo) + frac) * tau_us};
}

std::vector<SweepRow> sweep_tau(const FluctuatorParams& p, Init init, Drive d,
                                const std::vector<double>& taus_us) {
  std::vector<SweepRow> rows(taus_us.size());
  for (size_t i = 0; i < taus_us.size(); ++i)
    rows[i] = {taus_us[i], effective_t2(p, init, d, taus_us[i])};
  return rows;
}

}  // namespace telspin
