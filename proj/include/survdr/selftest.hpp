#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace survdr::selftest {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // worst observed error or a short explanation
};

// Analytic scores of the four likelihoods against central finite differences
// at random points (relative error < 1e-6).
std::vector<CheckResult> score_gradient_suite(std::uint64_t seed);

// Estimators against independent brute-force oracles: golden-section Cox
// maximization on random small datasets; direct transcription of the three
// doubly robust formulas on fixed 6-row data (1e-12).
std::vector<CheckResult> oracle_equivalence_suite(std::uint64_t seed);

// Exact identities: hand-computed Kaplan-Meier/Breslow/logistic/cloglog
// values, pseudo-observations without censoring, weight-scaling invariance,
// zero estimates at t = 0 and under a zero fitted exposure effect.
std::vector<CheckResult> identity_suite();

// True when every check passed.
bool all_passed(const std::vector<CheckResult>& results);

}  // namespace survdr::selftest
