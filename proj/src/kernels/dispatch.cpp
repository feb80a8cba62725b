#include "telspin/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace telspin::kernels {

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

TrigMomentsFn select_trig_moments() {
  const char* env = std::getenv("TELSPIN_KERNEL");
#if defined(__x86_64__) || defined(_M_X64)
  if (env && std::strcmp(env, "scalar") == 0) return trig_moments_scalar;
  if (avx2_available()) return trig_moments_avx2;
#else
  (void)env;
#endif
  return trig_moments_scalar;
}

namespace {
TrigMomentsFn cached_fn() {
  static const TrigMomentsFn fn = select_trig_moments();
  return fn;
}
}  // namespace

TrigMoments trig_moments(const double* phases, std::size_t n) {
  return cached_fn()(phases, n);
}

const char* trig_moments_backend() {
#if defined(__x86_64__) || defined(_M_X64)
  if (cached_fn() == trig_moments_avx2) return "avx2";
#endif
  return "scalar";
}

}  // namespace telspin::kernels
