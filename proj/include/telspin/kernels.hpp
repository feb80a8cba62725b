#pragma once

#include <cstddef>

// Trigonometric reduction kernels for the Monte Carlo hot loop: batched
// sin/cos first and second moments of a phase array.  A scalar reference
// implementation and an AVX2+FMA variant share the same fma-based
// Cody-Waite algorithm and the same 4-lane accumulation order, so the two
// backends produce bit-identical moments; the active backend is selected at
// runtime (override with TELSPIN_KERNEL=scalar|avx2|auto).
//
// Domain: finite phases with |x| <= ~1e6 (three-term pi/2 reduction).

namespace telspin::kernels {

struct TrigMoments {
  double sum_cos = 0.0;
  double sum_sin = 0.0;
  double sum_cos2 = 0.0;
  double sum_sin2 = 0.0;
  std::size_t count = 0;
};

using TrigMomentsFn = TrigMoments (*)(const double*, std::size_t);

// Single-element reference path, exposed for accuracy tests.
void sincos_one(double x, double& s, double& c);

TrigMoments trig_moments_scalar(const double* phases, std::size_t n);

#if defined(__x86_64__) || defined(_M_X64)
TrigMoments trig_moments_avx2(const double* phases, std::size_t n);
#endif

// True when the AVX2+FMA variant can run on this machine.
bool avx2_available();

// Backend chosen from CPU features and the TELSPIN_KERNEL override.
TrigMomentsFn select_trig_moments();

// Cached dispatch through select_trig_moments().
TrigMoments trig_moments(const double* phases, std::size_t n);
const char* trig_moments_backend();

}  // namespace telspin::kernels
