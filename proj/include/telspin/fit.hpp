#pragma once

#include <optional>
#include <string>
#include <vector>

#include "telspin/analytic.hpp"

// Nonlinear least squares for decay curves: plain and oscillating
// exponentials, 1/e extraction from sampled envelopes, and the joint
// two-dataset model comparison that ranks fixed T2*/T1 ratios against a
// free-ratio fit.  The optimizer is a damped Gauss-Newton (Levenberg) with
// multi-start grids over the decay time; the sum of squared residuals never
// increases across accepted iterations.

namespace telspin {

// Fit report.  Parameters a model does not use stay zero (omega and phase
// for the plain exponential).  Confidence half-widths are two-sided 95%
// Student-t intervals from the Jacobian at the optimum; directions the data
// cannot constrain (an exactly degenerate Jacobian column) report zero.
// mse is the residual sum of squares divided by the residual degrees of
// freedom (n minus the parameter count), so nested models pay for their
// extra parameters.
struct FitResult {
  std::string model;  // "exp" or "osc_exp"
  bool converged = false;
  double amplitude = 0.0;
  double t_decay = 0.0;  // us
  double omega = 0.0;    // rad/us, >= 0 after normalization
  double phase = 0.0;    // rad, in (-pi, pi]
  double offset = 0.0;
  double ci_amplitude = 0.0;
  double ci_t_decay = 0.0;
  double ci_omega = 0.0;
  double ci_phase = 0.0;
  double ci_offset = 0.0;
  double mse = 0.0;
  bool ambiguous_omega = false;  // second spectral peak within 3 dB
};

// a e^{-t/T} + c.  Multi-start over a log grid of T, linear solve for the
// amplitude and offset at each start, damped Gauss-Newton refinement from
// the best starts.  Not-converged is reported when no start converges or
// when the amplitude is indistinguishable from zero (constant data), in
// which case T carries no information.
FitResult fit_exponential(const std::vector<double>& t_us,
                          const std::vector<double>& y);

// a e^{-t/T} cos(omega t + phi) + c.  omega is seeded from the spectral
// peak of the mean-detrended data; a plain-exponential candidate keeps the
// zero-frequency limit well behaved (the fit degrades to omega = 0 instead
// of chasing a phantom oscillation).
FitResult fit_osc_exponential(const std::vector<double>& t_us,
                              const std::vector<double>& y);

// First 1/e crossing of a sampled envelope, log-linearly interpolated
// between the bracketing samples (exact on pure exponentials).  The first
// sample must lie above 1/e; not-found is reported when no sample crosses.
CrossingResult one_over_e_time(const std::vector<double>& t_us,
                               const std::vector<double>& y);

// One row of the joint model comparison: the relaxation dataset (fit to
// a1 e^{-t/T1} + c1) and the coherence dataset (a2 e^{-t/(R T1)} + c2) are
// fit together sharing T1, with the ratio R fixed per model or left free.
// sigma_t1 and ratio_ci are 95% half-widths (the uncertainty convention
// used for every fitted value); mse is the joint SSR over its degrees of
// freedom, so the free-ratio model pays for its extra parameter.
struct ModelRow {
  std::string name;
  bool ratio_free = false;
  double ratio = 0.0;
  double ratio_ci = 0.0;
  double t1 = 0.0;
  double sigma_t1 = 0.0;
  double mse = 0.0;
  bool converged = false;
};

// Fixed ratios 1.5, 2, 1, then the free-ratio variant (nullopt = free).
std::vector<std::optional<double>> default_ratio_models();

std::vector<ModelRow> joint_model_compare(
    const std::vector<double>& t1_times, const std::vector<double>& t1_values,
    const std::vector<double>& t2_times, const std::vector<double>& t2_values,
    const std::vector<std::optional<double>>& ratios = default_ratio_models());

// Structured text with a fixed field order, stable for golden files.
std::string fit_report_text(const FitResult& r);
std::string model_table_text(const std::vector<ModelRow>& rows);

// Two-sided 95% Student-t quantile (the 97.5% point), exposed for tests.
double student_t_975(int dof);

}  // namespace telspin
