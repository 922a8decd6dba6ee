#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "survdr/selftest.hpp"

using namespace survdr::selftest;

namespace {

void report(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    INFO(r.name, ": ", r.detail);
    CHECK(r.pass);
  }
}

}  // namespace

TEST_CASE("analytic scores match finite differences") {
  report(score_gradient_suite(2026));
}

TEST_CASE("fits agree with brute-force and hand-evaluated oracles") {
  report(oracle_equivalence_suite(2026));
}

TEST_CASE("exact identities hold") {
  report(identity_suite());
}
