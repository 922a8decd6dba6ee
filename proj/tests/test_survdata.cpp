#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "survdr/dataset.hpp"
#include "survdr/errors.hpp"
#include "survdr/step_function.hpp"
#include "testing.hpp"

using namespace survdr;

namespace {
const ColumnMap kMap{"time", "status", "treat", {"age", "size"}};
}

TEST_CASE("csv parsing handles quoting, crlf, and column order") {
  std::istringstream in(
      "size,treat,time,status,comment\r\n"
      "1.5,1,10,1,\"says \"\"hi, there\"\"\"\r\n"
      "-2,0,3.25,0,\"multi\nline\"\r\n");
  ColumnMap map = kMap;
  map.covariates = {"size"};
  const Dataset d = parse_csv(in, map);
  REQUIRE(d.size() == 2);
  CHECK(d.records[0].time == 10.0);
  CHECK(d.records[0].event);
  CHECK(d.records[0].exposure == 1);
  CHECK(d.records[0].covariates[0] == 1.5);
  CHECK(d.records[1].time == 3.25);
  CHECK_FALSE(d.records[1].event);
  CHECK(d.records[1].covariates[0] == -2.0);
  CHECK(d.covariate_names == std::vector<std::string>{"size"});
}

TEST_CASE("csv errors are typed and carry locations") {
  SUBCASE("missing column") {
    std::istringstream in("time,status\n1,1\n");
    CHECK_THROWS_AS(parse_csv(in, kMap), MissingColumn);
  }
  SUBCASE("non-numeric cell names row and column") {
    std::istringstream in("time,status,treat,age,size\n2,1,0,5,1\n3,1,0,oops,1\n");
    try {
      parse_csv(in, kMap);
      FAIL("expected NonNumericCell");
    } catch (const NonNumericCell& e) {
      CHECK(e.row == 2);
      CHECK(e.column == "age");
    }
  }
  SUBCASE("non-positive time") {
    std::istringstream in("time,status,treat,age,size\n0,1,0,5,1\n");
    CHECK_THROWS_AS(parse_csv(in, kMap), NonPositiveTime);
  }
  SUBCASE("indicator must be exactly 0 or 1") {
    std::istringstream in("time,status,treat,age,size\n2,0.5,0,5,1\n");
    CHECK_THROWS_AS(parse_csv(in, kMap), InvalidIndicator);
    std::istringstream in2("time,status,treat,age,size\n2,1,2,5,1\n");
    CHECK_THROWS_AS(parse_csv(in2, kMap), InvalidIndicator);
  }
  SUBCASE("ragged row") {
    std::istringstream in("time,status,treat,age,size\n2,1,0,5\n");
    CHECK_THROWS_AS(parse_csv(in, kMap), CsvParseError);
  }
  SUBCASE("empty file") {
    std::istringstream in("");
    CHECK_THROWS_AS(parse_csv(in, kMap), CsvParseError);
  }
}

TEST_CASE("csv round trip preserves values") {
  RngStream g(7);
  const auto rc = testing::random_censored(g, 60);
  ColumnMap map{"time", "status", "treat", {"z"}};
  std::ostringstream out;
  write_csv(out, rc.data, map);
  std::istringstream in(out.str());
  const Dataset back = parse_csv(in, map);
  REQUIRE(back.size() == rc.data.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back.records[i].time == rc.data.records[i].time);
    CHECK(back.records[i].event == rc.data.records[i].event);
    CHECK(back.records[i].exposure == rc.data.records[i].exposure);
    CHECK(back.records[i].covariates[0] == rc.data.records[i].covariates[0]);
  }
}

TEST_CASE("columnar views and index lookups") {
  const Dataset d = testing::make_data({1, 2, 3}, {1, 0, 1}, {0, 1, 1}, {0.5, -1.0, 2.0});
  CHECK(d.n_events() == 2);
  CHECK(d.has_both_exposure_levels());
  CHECK(d.times()[2] == 3.0);
  CHECK(d.events()[1] == 0.0);
  CHECK(d.exposures()[1] == 1.0);
  CHECK(d.covariate_matrix()(2, 0) == 2.0);
  CHECK(d.covariate_index("z") == 0);
  CHECK_THROWS_AS(d.covariate_index("nope"), MissingColumn);

  CHECK(risk_set(d, 2.0) == std::vector<std::size_t>{1, 2});
  CHECK(event_indices(d) == std::vector<std::size_t>{0, 2});
}

TEST_CASE("step functions evaluate right-continuously with left limits") {
  const StepFunction f({1.0, 3.0}, {0.5, 0.2}, 1.0);
  CHECK(f(0.5) == 1.0);
  CHECK(f(1.0) == 0.5);
  CHECK(f(2.9) == 0.5);
  CHECK(f(3.0) == 0.2);
  CHECK(f(100.0) == 0.2);
  CHECK(f.left_limit(1.0) == 1.0);
  CHECK(f.left_limit(3.0) == 0.5);
  CHECK(f.left_limit(3.1) == 0.2);
}
