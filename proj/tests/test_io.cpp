#include "telspin/io.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"

using namespace telspin;

namespace {

Table sample_table() {
  Table t;
  t.version = kToolVersion;
  t.config = {{"engine", "analytic"},
              {"levels", "2"},
              {"t1_us", g17(10.0)},
              {"seq", "tau-(pi)_x-tau"},
              {"note_free", ""}};
  t.columns = {"t_us", "re", "im"};
  t.rows = {{0.0, 1.0, 0.0},
            {0.1, 1.0 / 3.0, -2.5e-17},
            {0.2, std::nan(""), 1e300}};
  t.notes = {"max_dev 3.2e-11", "fit model exp"};
  return t;
}

bool same_cell(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return a == b;
}

void check_same(const Table& a, const Table& b) {
  CHECK(a.version == b.version);
  REQUIRE(a.config.size() == b.config.size());
  for (std::size_t k = 0; k < a.config.size(); ++k) {
    CHECK(a.config[k].first == b.config[k].first);
    CHECK(a.config[k].second == b.config[k].second);
  }
  CHECK(a.columns == b.columns);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    REQUIRE(a.rows[r].size() == b.rows[r].size());
    for (std::size_t c = 0; c < a.rows[r].size(); ++c)
      CHECK(same_cell(a.rows[r][c], b.rows[r][c]));
  }
  CHECK(a.notes == b.notes);
}

}  // namespace

TEST_CASE("seventeen-digit formatting round-trips doubles exactly") {
  for (double x : {0.0, -0.0, 1.0 / 3.0, 0.1, 6.785840131753953, 1e-300,
                   -9.87e300, 71.450649}) {
    const std::string s = g17(x);
    char* end = nullptr;
    const double back = std::strtod(s.c_str(), &end);
    CHECK(*end == '\0');
    CHECK(back == x);
  }
  CHECK(g17(1.0) == "1");
  CHECK(std::isnan(std::strtod(g17(std::nan("")).c_str(), nullptr)));
}

TEST_CASE("fnv-1a matches the published test vectors") {
  CHECK(fnv1a64("") == 14695981039346656037ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
  CHECK(fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(fnv1a64_hex("foobar") == "85944171f73967e8");
  CHECK(fnv1a64("ab") != fnv1a64("ba"));
}

TEST_CASE("csv tables round-trip content and bytes") {
  const Table t = sample_table();
  const std::string text = table_csv(t);
  const Table back = table_from_csv(text);
  check_same(t, back);
  CHECK(table_csv(back) == text);

  // header first, then config, data, footer notes
  CHECK(text.rfind("# telspin", 0) == 0);
  CHECK(text.find("# engine analytic\n") != std::string::npos);
  CHECK(text.find("t_us,re,im\n") != std::string::npos);
  CHECK(text.find("nan") != std::string::npos);
  CHECK(text.find("# max_dev 3.2e-11\n") != std::string::npos);

  CHECK_THROWS_AS(table_from_csv(""), std::runtime_error);
  CHECK_THROWS_AS(table_from_csv("# telspin 0.1.0\n"), std::runtime_error);
  CHECK_THROWS_AS(table_from_csv("a,b\n1,2,3\n"), std::runtime_error);
  CHECK_THROWS_AS(table_from_csv("a,b\n1,x\n"), std::runtime_error);
  CHECK_THROWS_AS(table_from_csv("a,b\n1,\n"), std::runtime_error);

  Table ragged = t;
  ragged.rows[1].pop_back();
  CHECK_THROWS_AS(table_csv(ragged), std::runtime_error);
}

TEST_CASE("json tables round-trip content and bytes") {
  const Table t = sample_table();
  const std::string text = table_json(t);
  const Table back = table_from_json(text);
  check_same(t, back);
  CHECK(table_json(back) == text);

  // missing values serialize as null
  CHECK(text.find("null") != std::string::npos);
  CHECK(text.find("\"version\"") != std::string::npos);

  CHECK_THROWS_AS(table_from_json("{"), std::runtime_error);
  CHECK_THROWS_AS(table_from_json("{}"), std::runtime_error);
  CHECK_THROWS_AS(table_from_json("[1,2,3]"), std::runtime_error);
  CHECK_THROWS_AS(
      table_from_json(
          R"({"version":"x","config":{},"columns":["a"],"rows":[[1,2]]})"),
      std::runtime_error);
}

TEST_CASE("curve tables carry the error column only when present") {
  DecayCurve c;
  c.engine = "mc";
  c.times_us = {0.0, 1.0};
  c.values = {{1.0, 0.0}, {0.5, -0.25}};
  c.std_error = {0.0, 0.01};
  const Table t = curve_table(c, {{"engine", "mc"}});
  CHECK(t.columns == std::vector<std::string>{"t_us", "re", "im", "abs",
                                              "se"});
  CHECK(t.rows[1][3] == doctest::Approx(std::abs(c.values[1])));
  CHECK(t.rows[1][4] == 0.01);

  DecayCurve a = c;
  a.engine = "analytic";
  a.std_error.clear();
  const Table ta = curve_table(a, {});
  CHECK(ta.columns == std::vector<std::string>{"t_us", "re", "im", "abs"});
  CHECK(ta.rows.size() == 2);
}

TEST_CASE("grid specs expand to strictly increasing point sets") {
  const std::vector<double> r = parse_grid("0:0.5:2");
  REQUIRE(r.size() == 5);
  CHECK(r.front() == 0.0);
  CHECK(r.back() == 2.0);
  CHECK(parse_grid("1,2,3.5") == std::vector<double>{1.0, 2.0, 3.5});
  CHECK(parse_grid("0:1:0") == std::vector<double>{0.0});
  // stop short of a full step keeps the last in-range point
  CHECK(parse_grid("0:0.4:1").size() == 3);

  CHECK_THROWS_AS(parse_grid(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("0:0:1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("2:1:0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("0:1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("3,2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("1,1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("1,x"), std::invalid_argument);
}

TEST_CASE("file helpers write and read bytes verbatim") {
  const std::string path = "/tmp/telspin_io_test.txt";
  const std::string body = "# telspin\nline two\n\x01\x02 binary-ish\n";
  write_file(path, body);
  CHECK(read_file(path) == body);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_file("/tmp/telspin_io_missing_file.txt"),
                  std::runtime_error);
  CHECK_THROWS_AS(write_file("/tmp/no_such_dir_xyz/out.txt", "x"),
                  std::runtime_error);
}
