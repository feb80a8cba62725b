#include "telspin/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include "sincos_core.hpp"

// AVX2+FMA backend.  The vector accumulators are exactly the four lanes of
// the scalar reference, and the tail reuses the scalar per-element code
// (compiled here with FMA contraction ruled out by explicit std::fma), so
// the reduced moments match the scalar backend bit for bit.

namespace telspin::kernels {

TrigMoments trig_moments_avx2(const double* phases, std::size_t n) {
  __m256d acc_c = _mm256_setzero_pd();
  __m256d acc_s = _mm256_setzero_pd();
  __m256d acc_c2 = _mm256_setzero_pd();
  __m256d acc_s2 = _mm256_setzero_pd();

  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d x = _mm256_loadu_pd(phases + i);
    __m256d s, c;
    detail::sincos_avx2(x, s, c);
    acc_c = _mm256_add_pd(acc_c, c);
    acc_s = _mm256_add_pd(acc_s, s);
    acc_c2 = _mm256_fmadd_pd(c, c, acc_c2);
    acc_s2 = _mm256_fmadd_pd(s, s, acc_s2);
  }

  alignas(32) double lc[4], ls[4], lc2[4], ls2[4];
  _mm256_store_pd(lc, acc_c);
  _mm256_store_pd(ls, acc_s);
  _mm256_store_pd(lc2, acc_c2);
  _mm256_store_pd(ls2, acc_s2);

  for (std::size_t i = n4; i < n; ++i) {
    const int lane = static_cast<int>(i - n4);
    double s, c;
    detail::sincos_scalar(phases[i], s, c);
    lc[lane] += c;
    ls[lane] += s;
    lc2[lane] = std::fma(c, c, lc2[lane]);
    ls2[lane] = std::fma(s, s, ls2[lane]);
  }

  TrigMoments m;
  m.sum_cos = (lc[0] + lc[1]) + (lc[2] + lc[3]);
  m.sum_sin = (ls[0] + ls[1]) + (ls[2] + ls[3]);
  m.sum_cos2 = (lc2[0] + lc2[1]) + (lc2[2] + lc2[3]);
  m.sum_sin2 = (ls2[0] + ls2[1]) + (ls2[2] + ls2[3]);
  m.count = n;
  return m;
}

}  // namespace telspin::kernels

#endif  // __AVX2__ && __FMA__
