#include "telspin/kernels.hpp"

#include "sincos_core.hpp"

// Reference backend.  Accumulates into four independent lanes in the same
// order as the AVX2 variant (vector lane j holds elements with index % 4
// == j), then reduces (l0+l1)+(l2+l3), so the two backends agree bitwise.

namespace telspin::kernels {

namespace {

struct Lanes {
  double c[4] = {0, 0, 0, 0};
  double s[4] = {0, 0, 0, 0};
  double c2[4] = {0, 0, 0, 0};
  double s2[4] = {0, 0, 0, 0};
};

inline void accumulate_one(Lanes& acc, int lane, double x) {
  double s, c;
  detail::sincos_scalar(x, s, c);
  acc.c[lane] += c;
  acc.s[lane] += s;
  acc.c2[lane] = std::fma(c, c, acc.c2[lane]);
  acc.s2[lane] = std::fma(s, s, acc.s2[lane]);
}

inline TrigMoments reduce(const Lanes& acc, std::size_t n) {
  TrigMoments m;
  m.sum_cos = (acc.c[0] + acc.c[1]) + (acc.c[2] + acc.c[3]);
  m.sum_sin = (acc.s[0] + acc.s[1]) + (acc.s[2] + acc.s[3]);
  m.sum_cos2 = (acc.c2[0] + acc.c2[1]) + (acc.c2[2] + acc.c2[3]);
  m.sum_sin2 = (acc.s2[0] + acc.s2[1]) + (acc.s2[2] + acc.s2[3]);
  m.count = n;
  return m;
}

}  // namespace

void sincos_one(double x, double& s, double& c) {
  detail::sincos_scalar(x, s, c);
}

TrigMoments trig_moments_scalar(const double* phases, std::size_t n) {
  Lanes acc;
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4)
    for (int lane = 0; lane < 4; ++lane)
      accumulate_one(acc, lane, phases[i + lane]);
  for (std::size_t i = n4; i < n; ++i)
    accumulate_one(acc, static_cast<int>(i - n4), phases[i]);
  return reduce(acc, n);
}

}  // namespace telspin::kernels
