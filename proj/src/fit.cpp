#include "telspin/fit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace telspin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_series(const std::vector<double>& t, const std::vector<double>& y,
                  std::size_t min_n) {
  if (t.size() != y.size())
    throw std::invalid_argument("times and values differ in length");
  if (t.size() < min_n) throw std::invalid_argument("too few points");
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!std::isfinite(t[i]) || !std::isfinite(y[i]))
      throw std::invalid_argument("nonfinite sample");
}

double span_of(const std::vector<double>& t) {
  auto [lo, hi] = std::minmax_element(t.begin(), t.end());
  double span = *hi - *lo;
  if (!(span > 0.0)) throw std::invalid_argument("zero time span");
  return span;
}

// Continued fraction for the regularized incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return h;
}

double ibeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// Damped Gauss-Newton on a residual model.  eval fills residuals and the
// Jacobian, returning false outside the model's domain; SSR is monotone
// non-increasing across accepted steps.
struct NlsOutcome {
  Eigen::VectorXd p;
  double ssr = kInf;
  bool converged = false;
};

using EvalFn = std::function<bool(const Eigen::VectorXd&, Eigen::VectorXd&,
                                  Eigen::MatrixXd&)>;

NlsOutcome levenberg(const EvalFn& eval, Eigen::VectorXd p,
                     int max_iter = 200) {
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  if (!eval(p, r, J)) return {std::move(p), kInf, false};
  double ssr = r.squaredNorm();
  double lambda = 1e-3;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXd A = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    bool stepped = false;
    double step_rel = 0.0;
    while (lambda <= 1e14) {
      Eigen::MatrixXd damped = A;
      for (Eigen::Index i = 0; i < damped.rows(); ++i)
        damped(i, i) += lambda * std::max(A(i, i), 1e-30);
      const Eigen::VectorXd delta = damped.ldlt().solve(-g);
      const Eigen::VectorXd p_try = p + delta;
      Eigen::VectorXd r_try;
      Eigen::MatrixXd J_try;
      if (eval(p_try, r_try, J_try)) {
        const double ssr_try = r_try.squaredNorm();
        if (ssr_try <= ssr) {
          step_rel = 0.0;
          for (Eigen::Index i = 0; i < p.size(); ++i) {
            const double scale =
                std::max({std::fabs(p[i]), std::fabs(p_try[i]), 1e-8});
            step_rel = std::max(step_rel, std::fabs(delta[i]) / scale);
          }
          p = p_try;
          r = std::move(r_try);
          J = std::move(J_try);
          ssr = ssr_try;
          lambda = std::max(lambda * 0.25, 1e-14);
          stepped = true;
          break;
        }
      }
      lambda *= 8.0;
    }
    // No improving step exists at any damping: SSR is stationary here.
    if (!stepped) return {std::move(p), ssr, true};
    if (step_rel < 1e-10) return {std::move(p), ssr, true};
  }
  return {std::move(p), ssr, false};
}

// 95% half-widths from the Jacobian at the optimum.  Exactly degenerate
// directions (zero singular values) get zero half-width via the
// pseudo-inverse.
Eigen::VectorXd ci_halfwidths(const EvalFn& eval, const Eigen::VectorXd& p,
                              double ssr, int n) {
  const int k = static_cast<int>(p.size());
  Eigen::VectorXd ci = Eigen::VectorXd::Zero(k);
  const int dof = n - k;
  if (dof < 1) return ci;
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  if (!eval(p, r, J)) return ci;
  Eigen::MatrixXd a = J.transpose() * J;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  const Eigen::MatrixXd cov = cod.pseudoInverse() * (ssr / dof);
  const double tf = student_t_975(dof);
  for (int i = 0; i < k; ++i) ci[i] = tf * std::sqrt(std::max(cov(i, i), 0.0));
  return ci;
}

// Least-squares solve of X b = y for small column counts.
Eigen::VectorXd linear_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           double* ssr) {
  Eigen::VectorXd b = x.colPivHouseholderQr().solve(y);
  if (ssr) *ssr = (x * b - y).squaredNorm();
  return b;
}

std::vector<double> log_grid(double span, double lo_exp, double hi_exp,
                             int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) {
    const double u = lo_exp + (hi_exp - lo_exp) * i / (n - 1);
    g[i] = span * std::pow(10.0, u);
  }
  return g;
}

EvalFn exp_model(const std::vector<double>& t, const std::vector<double>& y) {
  return [&t, &y](const Eigen::VectorXd& p, Eigen::VectorXd& r,
                  Eigen::MatrixXd& J) {
    const double a = p[0], T = p[1], c = p[2];
    if (!(T > 0.0) || !std::isfinite(T) || !std::isfinite(a) ||
        !std::isfinite(c))
      return false;
    const auto n = static_cast<Eigen::Index>(t.size());
    r.resize(n);
    J.resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = std::exp(-t[i] / T);
      r[i] = a * e + c - y[i];
      J(i, 0) = e;
      J(i, 1) = a * e * t[i] / (T * T);
      J(i, 2) = 1.0;
    }
    return true;
  };
}

EvalFn osc_model(const std::vector<double>& t, const std::vector<double>& y) {
  return [&t, &y](const Eigen::VectorXd& p, Eigen::VectorXd& r,
                  Eigen::MatrixXd& J) {
    const double a = p[0], T = p[1], w = p[2], ph = p[3], c = p[4];
    if (!(T > 0.0) || !p.allFinite()) return false;
    const auto n = static_cast<Eigen::Index>(t.size());
    r.resize(n);
    J.resize(n, 5);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = std::exp(-t[i] / T);
      const double cs = std::cos(w * t[i] + ph);
      const double sn = std::sin(w * t[i] + ph);
      r[i] = a * e * cs + c - y[i];
      J(i, 0) = e * cs;
      J(i, 1) = a * e * cs * t[i] / (T * T);
      J(i, 2) = -a * e * sn * t[i];
      J(i, 3) = -a * e * sn;
      J(i, 4) = 1.0;
    }
    return true;
  };
}

// Best candidates by SSR, earliest index winning ties, keeping at most k.
struct Candidate {
  Eigen::VectorXd p;
  double ssr;
};

void keep_best(std::vector<Candidate>& cands, Eigen::VectorXd p, double ssr,
               std::size_t k) {
  cands.push_back({std::move(p), ssr});
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.ssr < b.ssr;
                   });
  if (cands.size() > k) cands.resize(k);
}

double yscale_of(const std::vector<double>& y) {
  double m = 0.0;
  for (double v : y) m = std::max(m, std::fabs(v));
  return m + 1.0;
}

}  // namespace

double student_t_975(int dof) {
  if (dof < 1) throw std::invalid_argument("dof must be positive");
  const double nu = dof;
  const auto two_sided_tail = [nu](double t) {
    return ibeta(nu / 2.0, 0.5, nu / (nu + t * t));
  };
  double lo = 0.0, hi = 16.0;
  while (two_sided_tail(hi) > 0.05) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (two_sided_tail(mid) > 0.05)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

FitResult fit_exponential(const std::vector<double>& t_us,
                          const std::vector<double>& y) {
  check_series(t_us, y, 4);
  const double span = span_of(t_us);
  const auto n = static_cast<Eigen::Index>(t_us.size());
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);

  std::vector<Candidate> starts;
  for (double T : log_grid(span, -2.5, 1.5, 100)) {
    Eigen::MatrixXd x(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, 0) = std::exp(-t_us[i] / T);
      x(i, 1) = 1.0;
    }
    double ssr = 0.0;
    const Eigen::VectorXd b = linear_fit(x, yv, &ssr);
    Eigen::VectorXd p(3);
    p << b[0], T, b[1];
    keep_best(starts, std::move(p), ssr, 8);
  }

  const EvalFn model = exp_model(t_us, y);
  NlsOutcome best;
  bool any_converged = false;
  for (const Candidate& s : starts) {
    NlsOutcome out = levenberg(model, s.p);
    const bool better = out.converged
                            ? (!any_converged || out.ssr < best.ssr)
                            : (!any_converged && out.ssr < best.ssr);
    if (better) {
      any_converged = any_converged || out.converged;
      best = std::move(out);
    }
  }

  FitResult r;
  r.model = "exp";
  r.amplitude = best.p[0];
  r.t_decay = best.p[1];
  r.offset = best.p[2];
  r.converged = best.converged;
  if (std::fabs(r.amplitude) <= 1e-8 * yscale_of(y)) r.converged = false;
  if (r.t_decay > 1e4 * span) r.converged = false;
  const int dof = static_cast<int>(n) - 3;
  r.mse = dof > 0 ? best.ssr / dof : best.ssr;
  const Eigen::VectorXd ci =
      ci_halfwidths(model, best.p, best.ssr, static_cast<int>(n));
  r.ci_amplitude = ci[0];
  r.ci_t_decay = ci[1];
  r.ci_offset = ci[2];
  return r;
}

FitResult fit_osc_exponential(const std::vector<double>& t_us,
                              const std::vector<double>& y) {
  check_series(t_us, y, 8);
  const double span = span_of(t_us);
  const auto n = static_cast<Eigen::Index>(t_us.size());
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);

  // Spectral seed for omega from the mean-detrended periodogram.
  const double mean = yv.mean();
  const double wmax = pi * (n - 1) / span;
  const int nbins = static_cast<int>(4 * n);
  std::vector<double> power(nbins + 1, 0.0);
  for (int k = 1; k <= nbins; ++k) {
    const double w = wmax * k / nbins;
    std::complex<double> acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      acc += (y[i] - mean) *
             std::complex<double>(std::cos(w * t_us[i]), -std::sin(w * t_us[i]));
    power[k] = std::norm(acc);
  }
  int kpeak = 1;
  for (int k = 2; k <= nbins; ++k)
    if (power[k] > power[kpeak]) kpeak = k;
  bool ambiguous = false;
  for (int k = 2; k < nbins; ++k) {
    if (std::abs(k - kpeak) < 3) continue;
    if (power[k] > power[k - 1] && power[k] >= power[k + 1] &&
        power[k] >= 0.5 * power[kpeak])
      ambiguous = true;
  }
  const double w0 = wmax * kpeak / nbins;

  std::vector<Candidate> starts;
  for (double T : log_grid(span, -2.0, 1.2, 16)) {
    for (double w : {0.9 * w0, w0, 1.1 * w0}) {
      Eigen::MatrixXd x(n, 3);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double e = std::exp(-t_us[i] / T);
        x(i, 0) = e * std::cos(w * t_us[i]);
        x(i, 1) = e * std::sin(w * t_us[i]);
        x(i, 2) = 1.0;
      }
      double ssr = 0.0;
      const Eigen::VectorXd b = linear_fit(x, yv, &ssr);
      Eigen::VectorXd p(5);
      p << std::hypot(b[0], b[1]), T, w, std::atan2(-b[1], b[0]), b[2];
      keep_best(starts, std::move(p), ssr, 6);
    }
  }

  const EvalFn model = osc_model(t_us, y);
  NlsOutcome best;
  bool any_converged = false;
  for (const Candidate& s : starts) {
    NlsOutcome out = levenberg(model, s.p);
    const bool better = out.converged
                            ? (!any_converged || out.ssr < best.ssr)
                            : (!any_converged && out.ssr < best.ssr);
    if (better) {
      any_converged = any_converged || out.converged;
      best = std::move(out);
    }
  }

  // Zero-frequency candidate: a plain exponential, ranked by the same
  // converged-first rule as the multi-starts so a degenerate wander in the
  // omega = 0 valley never beats a clean exponential optimum.
  const FitResult plain = fit_exponential(t_us, y);
  {
    Eigen::VectorXd p(5);
    p << plain.amplitude, plain.t_decay, 0.0, 0.0, plain.offset;
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    if (model(p, r, J)) {
      const double ssr = r.squaredNorm();
      const bool better = plain.converged
                              ? (!any_converged || ssr < best.ssr)
                              : (!any_converged && ssr < best.ssr);
      if (better) best = {std::move(p), ssr, plain.converged};
    }
  }

  // Normalize: omega >= 0, amplitude >= 0, phase in (-pi, pi].
  if (best.p[2] < 0.0) {
    best.p[2] = -best.p[2];
    best.p[3] = -best.p[3];
  }
  if (best.p[0] < 0.0) {
    best.p[0] = -best.p[0];
    best.p[3] += pi;
  }
  best.p[3] = std::remainder(best.p[3], two_pi);
  if (best.p[3] <= -pi) best.p[3] += two_pi;

  FitResult r;
  r.model = "osc_exp";
  r.amplitude = best.p[0];
  r.t_decay = best.p[1];
  r.omega = best.p[2];
  r.phase = best.p[3];
  r.offset = best.p[4];
  r.converged = best.converged;
  r.ambiguous_omega = ambiguous;
  if (std::fabs(r.amplitude) <= 1e-8 * yscale_of(y)) r.converged = false;
  if (r.t_decay > 1e4 * span) r.converged = false;
  const int dof = static_cast<int>(n) - 5;
  r.mse = dof > 0 ? best.ssr / dof : best.ssr;
  const Eigen::VectorXd ci =
      ci_halfwidths(model, best.p, best.ssr, static_cast<int>(n));
  r.ci_amplitude = ci[0];
  r.ci_t_decay = ci[1];
  r.ci_omega = ci[2];
  r.ci_phase = ci[3];
  r.ci_offset = ci[4];
  return r;
}

CrossingResult one_over_e_time(const std::vector<double>& t_us,
                               const std::vector<double>& y) {
  check_series(t_us, y, 2);
  for (std::size_t i = 1; i < t_us.size(); ++i)
    if (!(t_us[i] > t_us[i - 1]))
      throw std::invalid_argument("times must be strictly increasing");
  const double th = std::exp(-1.0);
  if (!(y[0] > th))
    throw std::invalid_argument("first sample must exceed 1/e");
  for (std::size_t i = 1; i < y.size(); ++i) {
    if (y[i] > th) continue;
    const double t0 = t_us[i - 1], t1 = t_us[i];
    const double y0 = y[i - 1], y1 = y[i];
    double frac;
    if (y1 > 0.0)
      frac = (std::log(y0) - std::log(th)) / (std::log(y0) - std::log(y1));
    else
      frac = (y0 - th) / (y0 - y1);
    return {true, t0 + (t1 - t0) * frac};
  }
  return {false, 0.0};
}

std::vector<std::optional<double>> default_ratio_models() {
  return {1.5, 2.0, 1.0, std::nullopt};
}

namespace {

EvalFn joint_model(const std::vector<double>& t1, const std::vector<double>& y1,
                   const std::vector<double>& t2, const std::vector<double>& y2,
                   std::optional<double> fixed_ratio) {
  return [&t1, &y1, &t2, &y2, fixed_ratio](const Eigen::VectorXd& p,
                                           Eigen::VectorXd& r,
                                           Eigen::MatrixXd& J) {
    const bool free_r = !fixed_ratio.has_value();
    const double T1 = p[0];
    const double R = free_r ? p[1] : *fixed_ratio;
    const int off = free_r ? 2 : 1;
    const double a1 = p[off], c1 = p[off + 1];
    const double a2 = p[off + 2], c2 = p[off + 3];
    if (!(T1 > 0.0) || !(R > 0.0) || !p.allFinite()) return false;
    const auto n1 = static_cast<Eigen::Index>(t1.size());
    const auto n2 = static_cast<Eigen::Index>(t2.size());
    r.resize(n1 + n2);
    J.setZero(n1 + n2, p.size());
    for (Eigen::Index i = 0; i < n1; ++i) {
      const double e = std::exp(-t1[i] / T1);
      r[i] = a1 * e + c1 - y1[i];
      J(i, 0) = a1 * e * t1[i] / (T1 * T1);
      J(i, off) = e;
      J(i, off + 1) = 1.0;
    }
    const double T2 = R * T1;
    for (Eigen::Index i = 0; i < n2; ++i) {
      const double e = std::exp(-t2[i] / T2);
      const Eigen::Index row = n1 + i;
      r[row] = a2 * e + c2 - y2[i];
      J(row, 0) = a2 * e * t2[i] / (T2 * T2) * R;
      if (free_r) J(row, 1) = a2 * e * t2[i] / (T2 * T2) * T1;
      J(row, off + 2) = e;
      J(row, off + 3) = 1.0;
    }
    return true;
  };
}

}  // namespace

std::vector<ModelRow> joint_model_compare(
    const std::vector<double>& t1_times, const std::vector<double>& t1_values,
    const std::vector<double>& t2_times, const std::vector<double>& t2_values,
    const std::vector<std::optional<double>>& ratios) {
  check_series(t1_times, t1_values, 4);
  check_series(t2_times, t2_values, 4);
  if (ratios.empty()) throw std::invalid_argument("no models given");
  const double span1 = span_of(t1_times);
  const double span2 = span_of(t2_times);
  const auto n1 = static_cast<Eigen::Index>(t1_times.size());
  const auto n2 = static_cast<Eigen::Index>(t2_times.size());
  const int n = static_cast<int>(n1 + n2);
  const Eigen::VectorXd y1 =
      Eigen::Map<const Eigen::VectorXd>(t1_values.data(), n1);
  const Eigen::VectorXd y2 =
      Eigen::Map<const Eigen::VectorXd>(t2_values.data(), n2);

  // Shared seeding: linear amplitude/offset solves on both datasets given
  // (T1, R); used for every model with its own ratio candidates.
  const auto seed_for = [&](double T1, double R, Eigen::VectorXd& amps) {
    Eigen::MatrixXd x1(n1, 2), x2(n2, 2);
    for (Eigen::Index i = 0; i < n1; ++i) {
      x1(i, 0) = std::exp(-t1_times[i] / T1);
      x1(i, 1) = 1.0;
    }
    for (Eigen::Index i = 0; i < n2; ++i) {
      x2(i, 0) = std::exp(-t2_times[i] / (R * T1));
      x2(i, 1) = 1.0;
    }
    double s1 = 0.0, s2 = 0.0;
    const Eigen::VectorXd b1 = linear_fit(x1, y1, &s1);
    const Eigen::VectorXd b2 = linear_fit(x2, y2, &s2);
    amps.resize(4);
    amps << b1[0], b1[1], b2[0], b2[1];
    return s1 + s2;
  };

  std::vector<double> t1_grid = log_grid(span1, -2.0, 1.2, 30);
  {
    const std::vector<double> more = log_grid(span2, -2.0, 1.2, 30);
    t1_grid.insert(t1_grid.end(), more.begin(), more.end());
  }

  std::vector<ModelRow> rows;
  for (const auto& ratio : ratios) {
    const bool free_r = !ratio.has_value();
    if (!free_r && !(*ratio > 0.0))
      throw std::invalid_argument("fixed ratio must be positive");

    std::vector<double> r_cands;
    if (free_r)
      r_cands = {0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 3.0};
    else
      r_cands = {*ratio};

    std::vector<Candidate> starts;
    for (double T1 : t1_grid) {
      for (double R : r_cands) {
        Eigen::VectorXd amps;
        const double ssr = seed_for(T1, R, amps);
        Eigen::VectorXd p(free_r ? 6 : 5);
        if (free_r)
          p << T1, R, amps[0], amps[1], amps[2], amps[3];
        else
          p << T1, amps[0], amps[1], amps[2], amps[3];
        keep_best(starts, std::move(p), ssr, 6);
      }
    }

    const EvalFn model =
        joint_model(t1_times, t1_values, t2_times, t2_values, ratio);
    NlsOutcome best;
    bool any_converged = false;
    for (const Candidate& s : starts) {
      NlsOutcome out = levenberg(model, s.p);
      const bool better = out.converged
                              ? (!any_converged || out.ssr < best.ssr)
                              : (!any_converged && out.ssr < best.ssr);
      if (better) {
        any_converged = any_converged || out.converged;
        best = std::move(out);
      }
    }

    ModelRow row;
    row.ratio_free = free_r;
    if (free_r) {
      row.name = "free";
      row.ratio = best.p[1];
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "ratio=%g", *ratio);
      row.name = buf;
      row.ratio = *ratio;
    }
    row.t1 = best.p[0];
    row.converged = best.converged;
    const int k = static_cast<int>(best.p.size());
    const int dof = n - k;
    row.mse = dof > 0 ? best.ssr / dof : best.ssr;
    const Eigen::VectorXd ci = ci_halfwidths(model, best.p, best.ssr, n);
    row.sigma_t1 = ci[0];
    if (free_r) row.ratio_ci = ci[1];
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string fmt10(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string fit_report_text(const FitResult& r) {
  std::string s;
  s += "model=" + r.model + "\n";
  s += "converged=" + std::string(r.converged ? "1" : "0") + "\n";
  s += "ambiguous_omega=" + std::string(r.ambiguous_omega ? "1" : "0") + "\n";
  s += "amplitude=" + fmt10(r.amplitude) + " ci95=" + fmt10(r.ci_amplitude) +
       "\n";
  s += "t_decay=" + fmt10(r.t_decay) + " ci95=" + fmt10(r.ci_t_decay) + "\n";
  s += "omega=" + fmt10(r.omega) + " ci95=" + fmt10(r.ci_omega) + "\n";
  s += "phase=" + fmt10(r.phase) + " ci95=" + fmt10(r.ci_phase) + "\n";
  s += "offset=" + fmt10(r.offset) + " ci95=" + fmt10(r.ci_offset) + "\n";
  s += "mse=" + fmt10(r.mse) + "\n";
  return s;
}

std::string model_table_text(const std::vector<ModelRow>& rows) {
  std::string s = "# model ratio ratio_ci95 t1 sigma_t1 mse converged\n";
  for (const ModelRow& r : rows) {
    s += r.name + " " + fmt10(r.ratio) + " " + fmt10(r.ratio_ci) + " " +
         fmt10(r.t1) + " " + fmt10(r.sigma_t1) + " " + fmt10(r.mse) + " " +
         (r.converged ? "1" : "0") + "\n";
  }
  return s;
}

}  // namespace telspin
