#pragma once

#include <cmath>
#include <cstdint>

// Shared sin/cos algorithm for the trig kernels.  Every operation is a
// single-rounded IEEE add/mul/fma in a fixed order, so the scalar form here
// and the AVX2 form below compute bit-identical results lane for lane.
//
// Reduction: k = nearbyint(x * 2/pi), r = x - k * (three-double pi/2),
// valid to |x| ~ 1e6 with the residual k * 8.5e-32 far below double
// roundoff.  Polynomials are the standard kernel approximations on
// |r| <= pi/4.

namespace telspin::kernels::detail {

inline constexpr double kInvPio2 = 6.36619772367581382433e-01;
inline constexpr double kPio2_1 = 1.57079632673412561417e+00;
inline constexpr double kPio2_2 = 6.07710050630396597660e-11;
inline constexpr double kPio2_3 = 2.02226624871116645580e-21;

inline constexpr double kS1 = -1.66666666666666324348e-01;
inline constexpr double kS2 = 8.33333333332248946124e-03;
inline constexpr double kS3 = -1.98412698298579493134e-04;
inline constexpr double kS4 = 2.75573137070700676789e-06;
inline constexpr double kS5 = -2.50507602534068634195e-08;
inline constexpr double kS6 = 1.58969099521155010221e-10;

inline constexpr double kC1 = 4.16666666666666019037e-02;
inline constexpr double kC2 = -1.38888888888741095749e-03;
inline constexpr double kC3 = 2.48015872894767294178e-05;
inline constexpr double kC4 = -2.75573143513906633035e-07;
inline constexpr double kC5 = 2.08757232129817482790e-09;
inline constexpr double kC6 = -1.13596475577881948265e-11;

inline void sincos_scalar(double x, double& s_out, double& c_out) {
  const double k = std::nearbyint(x * kInvPio2);
  double r = std::fma(k, -kPio2_1, x);
  r = std::fma(k, -kPio2_2, r);
  r = std::fma(k, -kPio2_3, r);

  const double z = r * r;
  double ps = std::fma(z, kS6, kS5);
  ps = std::fma(z, ps, kS4);
  ps = std::fma(z, ps, kS3);
  ps = std::fma(z, ps, kS2);
  ps = std::fma(z, ps, kS1);
  const double s = std::fma(z * r, ps, r);

  double pc = std::fma(z, kC6, kC5);
  pc = std::fma(z, pc, kC4);
  pc = std::fma(z, pc, kC3);
  pc = std::fma(z, pc, kC2);
  pc = std::fma(z, pc, kC1);
  const double c = std::fma(z * z, pc, std::fma(z, -0.5, 1.0));

  const std::int64_t q = static_cast<std::int64_t>(k) & 3;
  switch (q) {
    case 0: s_out = s;  c_out = c;  break;
    case 1: s_out = c;  c_out = -s; break;
    case 2: s_out = -s; c_out = -c; break;
    default: s_out = -c; c_out = s; break;
  }
}

}  // namespace telspin::kernels::detail

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace telspin::kernels::detail {

inline void sincos_avx2(__m256d x, __m256d& s_out, __m256d& c_out) {
  const __m256d k =
      _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kInvPio2)),
                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kPio2_1), x);
  r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kPio2_2), r);
  r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kPio2_3), r);

  const __m256d z = _mm256_mul_pd(r, r);
  __m256d ps = _mm256_fmadd_pd(z, _mm256_set1_pd(kS6), _mm256_set1_pd(kS5));
  ps = _mm256_fmadd_pd(z, ps, _mm256_set1_pd(kS4));
  ps = _mm256_fmadd_pd(z, ps, _mm256_set1_pd(kS3));
  ps = _mm256_fmadd_pd(z, ps, _mm256_set1_pd(kS2));
  ps = _mm256_fmadd_pd(z, ps, _mm256_set1_pd(kS1));
  const __m256d s = _mm256_fmadd_pd(_mm256_mul_pd(z, r), ps, r);

  __m256d pc = _mm256_fmadd_pd(z, _mm256_set1_pd(kC6), _mm256_set1_pd(kC5));
  pc = _mm256_fmadd_pd(z, pc, _mm256_set1_pd(kC4));
  pc = _mm256_fmadd_pd(z, pc, _mm256_set1_pd(kC3));
  pc = _mm256_fmadd_pd(z, pc, _mm256_set1_pd(kC2));
  pc = _mm256_fmadd_pd(z, pc, _mm256_set1_pd(kC1));
  const __m256d c = _mm256_fmadd_pd(
      _mm256_mul_pd(z, z), pc,
      _mm256_fmadd_pd(z, _mm256_set1_pd(-0.5), _mm256_set1_pd(1.0)));

  const __m128i q32 = _mm256_cvtpd_epi32(k);
  const __m128i one32 = _mm_set1_epi32(1);
  const __m128i two32 = _mm_set1_epi32(2);
  const __m128i swap32 = _mm_cmpeq_epi32(_mm_and_si128(q32, one32), one32);
  const __m128i sneg32 = _mm_cmpeq_epi32(_mm_and_si128(q32, two32), two32);
  const __m128i cneg32 = _mm_cmpeq_epi32(
      _mm_and_si128(_mm_add_epi32(q32, one32), two32), two32);
  const __m256d swapm = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(swap32));
  const __m256d snegm = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(sneg32));
  const __m256d cnegm = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(cneg32));

  const __m256d signbit = _mm256_set1_pd(-0.0);
  __m256d sv = _mm256_blendv_pd(s, c, swapm);
  __m256d cv = _mm256_blendv_pd(c, s, swapm);
  sv = _mm256_xor_pd(sv, _mm256_and_pd(signbit, snegm));
  cv = _mm256_xor_pd(cv, _mm256_and_pd(signbit, cnegm));
  s_out = sv;
  c_out = cv;
}

}  // namespace telspin::kernels::detail

#endif  // __AVX2__ && __FMA__
