#include <complex>
#include <random>

#include "doctest.h"
#include "telspin/params.hpp"

using namespace telspin;
using std::complex;

TEST_CASE("unit conventions: engineered 2LF and natural 3LF") {
  // T1 = 10 us, A = 2.16 MHz.
  const auto p2 = make_params(Levels::two, 10.0, 2.16);
  CHECK(p2.gamma() == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(p2.v() == doctest::Approx(6.785840131753953).epsilon(1e-15));

  const auto p3 = make_params(Levels::three, 10.0, 2.16);
  CHECK(p3.gamma() == doctest::Approx(1.0 / 30.0).epsilon(1e-15));
  CHECK(p3.v() == doctest::Approx(13.571680263507906).epsilon(1e-15));
}

TEST_CASE("make_params validation") {
  CHECK_THROWS_AS(make_params(Levels::two, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_params(Levels::two, -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_params(Levels::three, 1.0, -0.5), std::invalid_argument);
}

TEST_CASE("generator entries are exact for random parameter draws") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(0.05, 5.0);
  for (int k = 0; k < 20; ++k) {
    const double t1 = u(rng), a = u(rng);

    const auto p2 = make_params(Levels::two, t1, a);
    const auto m2 = generator(p2);
    const complex<double> iv2(0.0, p2.v());
    CHECK(m2(0, 0) == complex<double>(0.0));
    CHECK(m2(0, 1) == iv2);
    CHECK(m2(1, 0) == iv2);
    CHECK(m2(1, 1) == complex<double>(-2.0 * p2.gamma()));

    const auto p3 = make_params(Levels::three, t1, a);
    const auto m3 = generator(p3);
    const complex<double> iv3(0.0, p3.v());
    const double g = p3.gamma();
    CHECK(m3(0, 0) == complex<double>(0.0));
    CHECK(m3(0, 1) == complex<double>(0.0));
    CHECK(m3(0, 2) == iv3);
    CHECK(m3(1, 0) == complex<double>(2.0 * g));
    CHECK(m3(1, 1) == complex<double>(-3.0 * g));
    CHECK(m3(1, 2) == iv3);
    CHECK(m3(2, 0) == complex<double>(0.0));
    CHECK(m3(2, 1) == iv3);
    CHECK(m3(2, 2) == complex<double>(-3.0 * g));
  }
}

TEST_CASE("worked 3LF generator at gamma = v = 1") {
  // t1 = 1/3, A = 1/(2 pi) gives gamma = 1 and v = 1.
  const auto p = make_params(Levels::three, 1.0 / 3.0, 1.0 / two_pi);
  CHECK(p.gamma() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p.v() == doctest::Approx(1.0).epsilon(1e-15));
  const auto m = generator(p);
  CHECK(m(1, 0).real() == doctest::Approx(2.0));
  CHECK(m(1, 1).real() == doctest::Approx(-3.0));
  CHECK(m(2, 2).real() == doctest::Approx(-3.0));
  CHECK(m(0, 2).imag() == doctest::Approx(1.0));
}

TEST_CASE("occupancy rate matrix conserves population exactly") {
  for (auto levels : {Levels::two, Levels::three}) {
    const auto p = make_params(levels, 7.3, 1.9);
    const auto r = occupancy_rate_matrix(p);
    for (int j = 0; j < r.cols(); ++j) {
      CHECK(r.col(j).sum() == 0.0);  // exact: identical magnitudes cancel
    }
    for (int i = 0; i < r.rows(); ++i)
      for (int j = 0; j < r.cols(); ++j)
        if (i != j) CHECK(r(i, j) == p.gamma());
  }
}

TEST_CASE("initial vectors") {
  const auto p2 = make_params(Levels::two, 1.0, 1.0);
  CHECK(initial_vector(p2, Init::level_p1)(1) == complex<double>(1.0));
  CHECK(initial_vector(p2, Init::level_m1)(1) == complex<double>(-1.0));
  CHECK(initial_vector(p2, Init::equilibrium)(1) == complex<double>(0.0));
  CHECK_THROWS_AS(initial_vector(p2, Init::level_0), std::invalid_argument);

  const auto p3 = make_params(Levels::three, 1.0, 1.0);
  const auto x0 = initial_vector(p3, Init::level_0);
  CHECK(x0(0) == complex<double>(1.0));
  CHECK(x0(1) == complex<double>(0.0));
  CHECK(x0(2) == complex<double>(0.0));
  const auto xm = initial_vector(p3, Init::level_m1);
  CHECK(xm(1) == complex<double>(1.0));
  CHECK(xm(2) == complex<double>(-1.0));
  const auto xe = initial_vector(p3, Init::equilibrium);
  CHECK(xe(1).real() == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(xe(2) == complex<double>(0.0));
}
