#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cmath>
#include <vector>

#include "survdr/errors.hpp"
#include "survdr/rng.hpp"
#include "survdr/threading.hpp"

using namespace survdr;

TEST_CASE("derived streams are deterministic and key-sensitive") {
  RngStream a = RngStream::derive(42, 3, 7);
  RngStream b = RngStream::derive(42, 3, 7);
  RngStream c = RngStream::derive(42, 3, 8);
  bool all_equal = true, any_differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto ua = a.next_u64();
    all_equal = all_equal && ua == b.next_u64();
    any_differs = any_differs || ua != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_differs);
}

TEST_CASE("sampler moments land near their targets") {
  RngStream g(2024);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0, se = 0, sg = 0;
  for (int i = 0; i < n; ++i) {
    const double u = g.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    su += u;
    su2 += u * u;
    const double z = g.normal();
    sn += z;
    sn2 += z * z;
    se += g.exponential(2.0);
    sg += g.gamma(2.0, 0.5);
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(su2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));
  CHECK(sn / n == doctest::Approx(0.0).scale(1).epsilon(0.01));
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(se / n == doctest::Approx(0.5).epsilon(0.02));   // mean 1/rate
  CHECK(sg / n == doctest::Approx(1.0).epsilon(0.02));   // mean shape*scale
}

TEST_CASE("uniform_int stays in range and covers it") {
  RngStream g(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = g.uniform_int(7);
    REQUIRE(v < 7);
    ++counts[static_cast<int>(v)];
  }
  for (const int c : counts) CHECK(c > 700);  // near-uniform: expected 1000
}

TEST_CASE("parallel_for covers every index exactly once") {
  const std::size_t n = 1000;
  std::vector<std::atomic<int>> hits(n);
  parallel_for(n, 4, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) CHECK(h.load() == 1);
}

TEST_CASE("parallel_for rethrows the first worker exception") {
  CHECK_THROWS_AS(
      parallel_for(64, 4,
                   [](std::size_t i) {
                     if (i == 13) throw EstimatorFailed("boom");
                   }),
      EstimatorFailed);
}

TEST_CASE("thread resolution honors explicit requests") {
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(1) == 1);
  CHECK(resolve_threads(0) >= 1);
}
