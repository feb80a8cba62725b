#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "telspin/sequence.hpp"

using namespace telspin;

namespace {

int error_column(const std::string& text) {
  try {
    parse_sequence(text);
  } catch (const ParseError& e) {
    return e.column;
  }
  return -1;
}

double deg2rad(double deg) { return deg * (pi / 180.0); }

std::vector<double> delay_list(const PulseSchedule& s) {
  std::vector<double> d;
  for (const auto& e : s.events)
    if (e.type == EventType::delay) d.push_back(e.duration_us);
  return d;
}

}  // namespace

TEST_CASE("parse echoes a plain echo sequence") {
  const auto ast = parse_sequence("tau/2-(pi)_x-tau/2");
  REQUIRE(ast.items.size() == 3);
  CHECK(ast.items[0].kind == ItemKind::tau_half);
  CHECK(ast.items[1].kind == ItemKind::pulse);
  CHECK(ast.items[1].value == 0.0);
  CHECK(ast.items[2].kind == ItemKind::tau_half);
  CHECK(ast.items[0].begin == 1);
  CHECK(ast.items[1].begin == 7);
  CHECK(ast.items[1].end == 13);
}

TEST_CASE("phases parse as axes, degrees and radians") {
  auto phase_of = [](const std::string& text) {
    return parse_sequence(text).items.at(0).value;
  };
  CHECK(phase_of("(pi)_x") == 0.0);
  CHECK(phase_of("(pi)_y") == 90.0);
  CHECK(phase_of("(pi)_-x") == 180.0);
  CHECK(phase_of("(pi)_-y") == 270.0);
  CHECK(phase_of("(pi)_135") == 135.0);
  CHECK(phase_of("(pi)_-30") == 330.0);
  CHECK(phase_of("(pi)_405") == 45.0);
  CHECK(phase_of("(pi)_1.5707963267948966rad") == doctest::Approx(90.0).epsilon(1e-13));
}

TEST_CASE("durations accept the four units") {
  auto us_of = [](const std::string& text) {
    return parse_sequence(text).items.at(0).value;
  };
  CHECK(us_of("200ns") == 200.0 * 1e-3);
  CHECK(us_of("1.5us") == 1.5);
  CHECK(us_of("2ms") == 2000.0);
  CHECK(us_of("1s") == 1e6);
}

TEST_CASE("parse errors carry the offending column") {
  CHECK(error_column("(pi)_q") == 6);
  CHECK(error_column("tau/3") == 5);
  CHECK(error_column("FOO(3)") == 1);
  CHECK(error_column("tau--tau") == 5);
  CHECK(error_column("") == 1);
  CHECK(error_column("tau tau") == 5);
  CHECK(error_column("(pi)_30deg") == 8);
  CHECK(error_column("CPMG(4") == 7);
  CHECK(error_column("CPMG()") == 1);
  CHECK(error_column("CPMG(0)") == 1);
  CHECK(error_column("KDD(30,40)") == 8);
  CHECK(error_column("3.5") == 4);
  CHECK(error_column("0.1kg") == 4);
}

TEST_CASE("CPMG expansion is definitional") {
  const auto s = expand(parse_sequence("CPMG(4,1us)"), 0.3, 0.0, Drive::qubit);
  CHECK(s.pulse_count() == 4);
  const auto d = delay_list(s);
  REQUIRE(d.size() == 5);
  CHECK(d[0] == 0.5);
  CHECK(d[1] == 1.0);
  CHECK(d[2] == 1.0);
  CHECK(d[3] == 1.0);
  CHECK(d[4] == 0.5);
  CHECK(s.total_us == doctest::Approx(4.0).epsilon(1e-15));
  for (double ph : s.pulse_phases()) CHECK(ph == deg2rad(90.0));
  const auto c = s.pulse_centers();
  REQUIRE(c.size() == 4);
  CHECK(c[0] == doctest::Approx(0.5));
  CHECK(c[3] == doctest::Approx(3.5));
}

TEST_CASE("KDD expands to the five-pulse composite block") {
  const auto s = expand(parse_sequence("KDD(30)"), 1.0, 0.0, Drive::qubit);
  CHECK(s.pulse_count() == 5);
  CHECK(s.events.size() == 11);
  const double expect[5] = {60.0, 30.0, 120.0, 30.0, 60.0};
  const auto ph = s.pulse_phases();
  REQUIRE(ph.size() == 5);
  for (int k = 0; k < 5; ++k) CHECK(ph[k] == deg2rad(expect[k]));
  const auto d = delay_list(s);
  REQUIRE(d.size() == 6);
  CHECK(d.front() == 0.5);
  CHECK(d.back() == 0.5);
  for (size_t k = 1; k + 1 < d.size(); ++k) CHECK(d[k] == 1.0);
  CHECK(s.total_us == doctest::Approx(5.0));
}

TEST_CASE("KDDXY16 emits the 80-pulse supercycle with uniform spacing") {
  const double tau = 0.2;
  const auto s = expand(parse_sequence("KDDXY16(1)"), tau, 0.0, Drive::qubit);
  CHECK(s.pulse_count() == 80);

  // Phase table from the definition: blocks at offsets x y x y y x y x and
  // the same again shifted by 180 degrees; each block is {30, 0, 90, 0, 30}
  // plus the offset.
  const double offsets[16] = {0,   90,  0,   90,  90,  0,   90,  0,
                              180, 270, 180, 270, 270, 180, 270, 180};
  const double block[5] = {30.0, 0.0, 90.0, 0.0, 30.0};
  std::vector<double> expect;
  for (double off : offsets)
    for (double b : block) expect.push_back(std::fmod(b + off, 360.0));
  const auto ph = s.pulse_phases();
  REQUIRE(ph.size() == expect.size());
  for (size_t k = 0; k < expect.size(); ++k)
    CHECK(ph[k] == deg2rad(expect[k]));

  // Boundary tau/2 + tau/2 merge back to exactly tau.
  const auto d = delay_list(s);
  REQUIRE(d.size() == 81);
  CHECK(d.front() == tau * 0.5);
  CHECK(d.back() == tau * 0.5);
  for (size_t k = 1; k + 1 < d.size(); ++k) CHECK(d[k] == tau);
}

TEST_CASE("eight milliseconds at 200 ns spacing is forty thousand pulses") {
  const auto s =
      expand(parse_sequence("KDDXY16(500)"), 0.2, 0.0, Drive::qubit);
  CHECK(s.pulse_count() == 40000);
  CHECK(s.events.size() == 80001);
  CHECK(s.total_us == doctest::Approx(8000.0).epsilon(1e-9));

  const auto c = expand(parse_sequence("CPMG(40000)"), 0.2, 0.0, Drive::qubit);
  CHECK(c.pulse_count() == 40000);
  CHECK(c.total_us == doctest::Approx(8000.0).epsilon(1e-9));
}

TEST_CASE("repeats concatenate with boundary delays merged") {
  const auto s =
      expand(parse_sequence("tau/2-(pi)_x-tau/2"), 0.3, 0.0, Drive::qubit, 10);
  CHECK(s.pulse_count() == 10);
  CHECK(s.events.size() == 21);
  CHECK(s.cycle_events == 3);
  const auto d = delay_list(s);
  CHECK(d.front() == 0.15);
  CHECK(d.back() == 0.15);
  for (size_t k = 1; k + 1 < d.size(); ++k) CHECK(d[k] == 0.3);
}

TEST_CASE("finite pulse width shrinks the gaps but not the grid") {
  const double w = 0.1;
  const auto s = expand(parse_sequence("CPMG(2)"), 1.0, w, Drive::qubit);
  const auto d = delay_list(s);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == 0.5 - w * 0.5);
  CHECK(d[2] == 0.5 - w * 0.5);
  CHECK(d[1] == 1.0 - w * 0.5 - w * 0.5);
  const auto c = s.pulse_centers();
  CHECK(c[0] == 0.5);
  CHECK(c[1] == 1.5);
  CHECK(s.total_us == 2.0);
  double acc = 0.0;
  for (const auto& e : s.events) acc += e.duration_us;
  CHECK(acc == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("infeasible timing is rejected") {
  CHECK_THROWS_AS(
      expand(parse_sequence("CPMG(2)"), 0.1, 0.2, Drive::qubit),
      std::invalid_argument);
  CHECK_THROWS_AS(
      expand(parse_sequence("(pi)_x-(pi)_y"), 1.0, 0.0, Drive::qubit),
      std::runtime_error);
  CHECK_THROWS_AS(
      expand(parse_sequence("(pi)_x-tau"), 1.0, 0.1, Drive::qubit),
      std::runtime_error);
  CHECK_THROWS_AS(
      expand(parse_sequence("CPMG(2,0.1us)"), 1.0, 0.15, Drive::qubit),
      std::runtime_error);
  CHECK_THROWS_AS(
      expand(parse_sequence("tau"), -1.0, 0.0, Drive::qubit),
      std::invalid_argument);
  CHECK_THROWS_AS(
      expand(parse_sequence("tau"), 1.0, 0.0, Drive::qubit, 0),
      std::invalid_argument);
}

TEST_CASE("print then parse is the identity on canonical text") {
  const std::vector<std::string> canonical = {
      "tau/2-(pi)_x-tau-(pi)_y-tau/2",
      "KDD(30)",
      "CPMG(4,1us)",
      "CPMG(4)",
      "KDDXY16(500)",
      "0.25us-(pi)_45-tau",
      "(pi)_-x-(pi)_-y",
  };
  for (const auto& text : canonical)
    CHECK(print_sequence(parse_sequence(text)) == text);
}

TEST_CASE("parse then print is idempotent on messy input") {
  const std::vector<std::string> messy = {
      " tau/2 - (pi)_90- tau/2",
      "kdd(30)",
      "KDD(y)",
      "(pi)_1.5707963267948966rad",
      "CPMG( 4 , 1us )",
      "(pi)_405",
      "200ns",
      "KDD()",
      "KDDXY16()",
  };
  for (const auto& text : messy) {
    const std::string once = print_sequence(parse_sequence(text));
    CHECK(print_sequence(parse_sequence(once)) == once);
  }
  CHECK(print_sequence(parse_sequence("kdd(30)")) == "KDD(30)");
  CHECK(print_sequence(parse_sequence(" tau/2 - (pi)_90- tau/2")) ==
        "tau/2-(pi)_y-tau/2");
}

TEST_CASE("schedule text round-trips bit-exactly") {
  const auto s = expand(parse_sequence("KDD(13.7)-tau-(pi)_22.5-tau/2"),
                        0.37777, 0.013, Drive::sq_minus);
  const std::string text = schedule_to_text(s);
  const auto back = schedule_from_text(text);
  CHECK(schedule_to_text(back) == text);
  REQUIRE(back.events.size() == s.events.size());
  for (size_t k = 0; k < s.events.size(); ++k) {
    CHECK(back.events[k].type == s.events[k].type);
    CHECK(back.events[k].duration_us == s.events[k].duration_us);
    CHECK(back.events[k].phase_rad == s.events[k].phase_rad);
    CHECK(back.events[k].target == s.events[k].target);
    if (s.events[k].type == EventType::pulse)
      CHECK(back.events[k].center_us ==
            doctest::Approx(s.events[k].center_us).epsilon(1e-12));
  }
  CHECK(back.total_us == doctest::Approx(s.total_us).epsilon(1e-12));
}

TEST_CASE("schedule text import rejects malformed lines") {
  CHECK_THROWS_AS(schedule_from_text("Q 1.0\n"), std::runtime_error);
  CHECK_THROWS_AS(schedule_from_text("D\n"), std::runtime_error);
  CHECK_THROWS_AS(schedule_from_text("P 0.5 pluto 0.1\n"), std::runtime_error);
  CHECK_THROWS_AS(schedule_from_text("D 1.0 junk\n"), std::runtime_error);
}

TEST_CASE("validate grades the pulse spacing against the coupling") {
  const double a_mhz = 2.16;
  auto report_for = [&](double tau) {
    const auto s = expand(parse_sequence("CPMG(8)"), tau, 0.0, Drive::qubit);
    return validate(s, a_mhz);
  };

  const auto fine = report_for(0.05);  // 2 pi A tau ~ 0.68
  CHECK(fine.ok);
  CHECK(fine.findings.empty());

  const auto marginal = report_for(0.2);  // 2 pi A tau ~ 2.71
  CHECK(marginal.ok);
  REQUIRE(marginal.findings.size() == 1);
  CHECK(marginal.findings[0].severity == Severity::info);
  CHECK(marginal.findings[0].message.find("marginal") != std::string::npos);

  const auto bad = report_for(1.0);  // 2 pi A tau ~ 13.6
  CHECK(bad.ok);  // a warning, not a structural error
  REQUIRE(bad.findings.size() == 1);
  CHECK(bad.findings[0].severity == Severity::warning);
  CHECK(bad.findings[0].message.find("ineffective") != std::string::npos);

  const auto silent = validate(
      expand(parse_sequence("CPMG(8)"), 1.0, 0.0, Drive::qubit), 0.0);
  CHECK(silent.findings.empty());
}

TEST_CASE("validate flags structural defects") {
  PulseSchedule s;
  s.events.push_back({EventType::pulse, 0.2, 0.0, 0.5, Drive::qubit});
  s.events.push_back({EventType::pulse, 0.2, 0.0, 0.6, Drive::qubit});
  s.total_us = 1.0;
  const auto r = validate(s, 0.0);
  CHECK_FALSE(r.ok);
  REQUIRE(r.findings.size() == 1);
  CHECK(r.findings[0].severity == Severity::error);
  CHECK(r.findings[0].message.find("overlap") != std::string::npos);

  PulseSchedule n;
  n.events.push_back({EventType::delay, -0.5, 0.0, 0.0, Drive::qubit});
  CHECK_FALSE(validate(n, 0.0).ok);

  PulseSchedule m;
  m.events.push_back({EventType::pulse, 0.0, 0.0, 0.5, Drive::qubit});
  m.events.push_back({EventType::pulse, 0.0, 0.0, 0.5, Drive::qubit});
  CHECK_FALSE(validate(m, 0.0).ok);
}

TEST_CASE("pulse phases never change the scalar dynamics") {
  const auto p = make_params(Levels::three, 10.0, 2.16);
  const double tau = 0.2;
  const auto cpmg = expand(parse_sequence("CPMG(80)"), tau, 0.0, Drive::qubit);
  const auto kdd = expand(parse_sequence("KDDXY16(1)"), tau, 0.0, Drive::qubit);
  REQUIRE(cpmg.pulse_count() == kdd.pulse_count());

  for (Init init : {Init::equilibrium, Init::level_m1, Init::level_0}) {
    const auto a = coherence_schedule(p, init, cpmg);
    const auto b = coherence_schedule(p, init, kdd);
    CHECK(std::abs(a - b) < 1e-12);
    const auto c = coherence_dd(p, init, Drive::qubit, tau, 80);
    CHECK(std::abs(a - c) < 1e-9);
  }
}

TEST_CASE("a bare delay reproduces free evolution") {
  const auto p = make_params(Levels::two, 7.0, 1.3);
  const auto s = expand(parse_sequence("tau"), 3.7, 0.0, Drive::qubit);
  const auto got = coherence_schedule(p, Init::equilibrium, s);
  const auto ref = coherence_free(p, Init::equilibrium, 3.7);
  CHECK(std::abs(got - ref) < 1e-14);
}

TEST_CASE("expanded schedules satisfy the structural invariants") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> utau(0.05, 1.0);
  std::uniform_real_distribution<double> ufrac(0.0, 0.8);
  std::uniform_int_distribution<int> urep(1, 3);
  const std::vector<std::string> pool = {
      "CPMG(7)",
      "KDD(15)-KDD(75)",
      "KDDXY16(2)",
      "tau/2-(pi)_x-tau-(pi)_y-tau/2",
      "0.5us-(pi)_12-tau-(pi)_200-tau/2",
  };
  for (int draw = 0; draw < 40; ++draw) {
    const double tau = utau(rng);
    const double w = tau * ufrac(rng);
    const auto& text = pool[static_cast<size_t>(draw) % pool.size()];
    const auto s =
        expand(parse_sequence(text), tau, w, Drive::qubit, urep(rng));

    double acc = 0.0;
    for (const auto& e : s.events) {
      CHECK(e.duration_us >= 0.0);
      acc += e.duration_us;
    }
    CHECK(acc == doctest::Approx(s.total_us).epsilon(1e-10));

    const auto centers = s.pulse_centers();
    for (size_t k = 1; k < centers.size(); ++k) {
      CHECK(centers[k] > centers[k - 1]);
      CHECK(centers[k] - centers[k - 1] >= w - 1e-12);
    }
    CHECK(validate(s, 0.0).ok);
  }
}
