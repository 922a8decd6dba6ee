#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "survdr/errors.hpp"
#include "survdr/rng.hpp"
#include "survdr/simulation.hpp"

using namespace survdr;
using namespace survdr::sim;

TEST_CASE("truth is exact under the null") {
  Scenario s;
  s.nonnull = false;
  const Truth truth = scenario_truth(s, 1000);
  CHECK(truth.psi == 0.0);
  CHECK(truth.zeta == 0.0);
  CHECK(truth.mcse == 0.0);
}

TEST_CASE("truth under the alternative is negative and thread-invariant") {
  Scenario s;
  s.nonnull = true;
  const Truth a = scenario_truth(s, 200000, 1);
  const Truth b = scenario_truth(s, 200000, 2);
  CHECK(a.psi == dgp::kBetaNonnull);
  CHECK(a.zeta == b.zeta);
  CHECK(a.mcse == b.mcse);
  CHECK(a.zeta < -0.03);
  CHECK(a.zeta > -0.25);
  CHECK(a.mcse > 0.0);
  CHECK(a.mcse < 0.01);
}

TEST_CASE("generated samples are deterministic and internally consistent") {
  Scenario s;
  s.n = 400;
  RngStream g1 = RngStream::derive(s.seed, 1, 0, 0);
  RngStream g2 = RngStream::derive(s.seed, 1, 0, 0);
  const SimulatedSample a = generate(s, g1);
  const SimulatedSample b = generate(s, g2);
  REQUIRE(a.data.size() == 400);
  CHECK(a.data.covariate_names == std::vector<std::string>{"z1", "z2"});

  int censored = 0, treated = 0;
  for (int i = 0; i < 400; ++i) {
    const auto& rec = a.data.records[i];
    CHECK(rec.time == b.data.records[i].time);
    CHECK(rec.event == b.data.records[i].event);
    const double potential = rec.exposure ? a.t_treated[i] : a.t_untreated[i];
    CHECK(rec.time == doctest::Approx(std::min(potential, a.censor_time[i])).epsilon(1e-15));
    CHECK(rec.event == (potential <= a.censor_time[i]));
    censored += rec.event ? 0 : 1;
    treated += rec.exposure;
    CHECK(rec.time > 0.0);
  }
  CHECK(censored > 40);       // some censoring...
  CHECK(censored < 240);      // ...but events dominate
  CHECK(treated > 100);
  CHECK(treated < 300);
}

TEST_CASE("covariate-dependent censoring is additive on the rate scale") {
  // The first covariate-dependent family adds a constant to the censoring
  // rate under treatment, so per-cell censoring rates (censored count over
  // person-time, within |z1| quartile cells) differ by that constant in
  // every cell. This pins the generator to its intended hazard form.
  Scenario s;
  s.censoring = CensoringFamily::type_a;
  s.n = 300000;
  RngStream g = RngStream::derive(7, 1, 0, 0);
  const SimulatedSample sample = generate(s, g);

  std::vector<double> absz(s.n);
  for (int i = 0; i < s.n; ++i) absz[i] = std::abs(sample.data.records[i].covariates[0]);
  std::vector<double> sorted = absz;
  std::sort(sorted.begin(), sorted.end());
  const double q1 = sorted[s.n / 4], q2 = sorted[s.n / 2], q3 = sorted[3 * s.n / 4];

  double person_time[2][4] = {};
  double n_censored[2][4] = {};
  for (int i = 0; i < s.n; ++i) {
    const auto& rec = sample.data.records[i];
    const int bin = absz[i] < q1 ? 0 : absz[i] < q2 ? 1 : absz[i] < q3 ? 2 : 3;
    person_time[rec.exposure][bin] += rec.time;
    n_censored[rec.exposure][bin] += rec.event ? 0.0 : 1.0;
  }
  double diff[4], se[4];
  for (int b = 0; b < 4; ++b) {
    const double r1 = n_censored[1][b] / person_time[1][b];
    const double r0 = n_censored[0][b] / person_time[0][b];
    diff[b] = r1 - r0;
    se[b] = std::sqrt(n_censored[1][b] / (person_time[1][b] * person_time[1][b]) +
                      n_censored[0][b] / (person_time[0][b] * person_time[0][b]));
    CHECK(std::abs(diff[b] - dgp::kTypeA1) < 4 * se[b]);
  }
  for (int b = 0; b < 4; ++b)
    for (int c = b + 1; c < 4; ++c)
      CHECK(std::abs(diff[b] - diff[c]) < 4 * std::sqrt(se[b] * se[b] + se[c] * se[c]));
  // Negative control: the rates themselves do climb with |z1|, so constancy
  // of the differences is not vacuous.
  const double r0_low = n_censored[0][0] / person_time[0][0];
  const double r0_high = n_censored[0][3] / person_time[0][3];
  CHECK(r0_high - r0_low > 6 * std::sqrt(se[0] * se[0] + se[3] * se[3]));
}

TEST_CASE("estimators recover the generating effect on a large sample") {
  ModelSpec right;
  right.weights = SpecChoice::right;
  right.outcome = SpecChoice::right;
  right.censoring_model = SpecChoice::right;

  Scenario null_s;
  null_s.n = 10000;
  RngStream g0 = RngStream::derive(11, 1, 0, 0);
  const SimulatedSample null_sample = generate(null_s, g0);
  const double t = null_s.resolved_eval_time();
  const double beta_null = evaluate_estimator(EstimatorKind::iptw_cox, right,
                                              null_s.censoring, null_sample.data, t);
  CHECK(std::abs(beta_null) < 0.08);

  Scenario alt_s;
  alt_s.n = 10000;
  alt_s.nonnull = true;
  RngStream g1 = RngStream::derive(12, 1, 0, 0);
  const SimulatedSample alt_sample = generate(alt_s, g1);
  const double ta = alt_s.resolved_eval_time();
  const double beta_alt = evaluate_estimator(EstimatorKind::iptw_cox, right,
                                             alt_s.censoring, alt_sample.data, ta);
  CHECK(beta_alt > dgp::kBetaNonnull - 0.12);
  CHECK(beta_alt < dgp::kBetaNonnull + 0.12);

  const Truth truth = scenario_truth(alt_s, 400000);
  for (const EstimatorKind kind :
       {EstimatorKind::dr_binomial, EstimatorKind::dr_survival, EstimatorKind::dr_pseudo}) {
    const double zeta = evaluate_estimator(kind, right, alt_s.censoring, alt_sample.data, ta);
    CHECK(std::abs(zeta - truth.zeta) < 0.04);
  }
}

TEST_CASE("simulation summaries are reproducible across thread counts") {
  Scenario s;
  s.n = 150;
  s.reps = 4;
  s.n_boot = 40;
  s.seed = 3;
  ModelSpec spec;  // defaults: right weights, wrong outcome, right censoring
  const std::vector<EstimatorKind> kinds = {EstimatorKind::iptw_cox, EstimatorKind::dr_binomial};
  const auto rows1 = run_simulation(s, {spec}, kinds, 1);
  const auto rows2 = run_simulation(s, {spec}, kinds, 2);
  REQUIRE(rows1.size() == 2);
  REQUIRE(rows2.size() == 2);
  for (std::size_t i = 0; i < rows1.size(); ++i) {
    CHECK(rows1[i].estimator == rows2[i].estimator);
    CHECK(rows1[i].bias == rows2[i].bias);
    CHECK(rows1[i].sd == rows2[i].sd);
    CHECK(rows1[i].t1e == rows2[i].t1e);
    CHECK(rows1[i].mcse == rows2[i].mcse);
    CHECK(rows1[i].reps == 4);
    CHECK(rows1[i].t1e >= 0.0);
    CHECK(rows1[i].t1e <= 1.0);
    CHECK(std::isfinite(rows1[i].bias));
  }

  std::ostringstream csv1, csv2;
  write_summary_csv(csv1, rows1, "check");
  write_summary_csv(csv2, rows2, "check");
  CHECK(csv1.str() == csv2.str());
  CHECK(csv1.str().rfind("# ", 0) == 0);
}

TEST_CASE("configuration parsing round-trips the documented keys") {
  std::istringstream in(
      "# comment line\n"
      "scenario = type_b\n"
      "effect = nonnull\n"
      "n = 800\n"
      "reps = 12\n"
      "boot = 30\n"
      "seed = 99\n"
      "eval_time = 5.5\n"
      "specs = right:wrong:right, wrong:right:none\n"
      "estimators = iptwcox, drbin\n"
      "threads = 2\n");
  const SimulationConfig config = parse_simulation_config(in);
  CHECK(config.scenario.censoring == CensoringFamily::type_b);
  CHECK(config.scenario.nonnull);
  CHECK(config.scenario.n == 800);
  CHECK(config.scenario.reps == 12);
  CHECK(config.scenario.n_boot == 30);
  CHECK(config.scenario.seed == 99);
  CHECK(config.scenario.eval_time == 5.5);
  REQUIRE(config.specs.size() == 2);
  CHECK(config.specs[0].id() == "w=right,o=wrong,c=right");
  CHECK(config.specs[1].id() == "w=wrong,o=right,c=none");
  REQUIRE(config.estimators.size() == 2);
  CHECK(config.estimators[0] == EstimatorKind::iptw_cox);
  CHECK(config.estimators[1] == EstimatorKind::dr_binomial);
  CHECK(config.threads == 2);
}

TEST_CASE("configuration errors carry the line number") {
  std::istringstream bad_key("n = 100\nbogus = 1\n");
  CHECK_THROWS_WITH_AS(parse_simulation_config(bad_key),
                       doctest::Contains("line 2"), ConfigError);
  std::istringstream bad_value("reps = soon\n");
  CHECK_THROWS_WITH_AS(parse_simulation_config(bad_value),
                       doctest::Contains("line 1"), ConfigError);
  std::istringstream small_n("n = 10\n");
  CHECK_THROWS_AS(parse_simulation_config(small_n), ConfigError);
}

TEST_CASE("profiles set defaults that explicit keys override") {
  std::istringstream full("profile = full\n");
  const SimulationConfig c_full = parse_simulation_config(full);
  CHECK(c_full.scenario.n == 2000);
  CHECK(c_full.scenario.reps == 1000);
  CHECK(c_full.scenario.n_boot == 500);
  std::istringstream mixed("n = 777\nprofile = full\n");
  const SimulationConfig c_mixed = parse_simulation_config(mixed);
  CHECK(c_mixed.scenario.n == 777);
  CHECK(c_mixed.scenario.reps == 1000);
}

TEST_CASE("canonical configuration ignores parallelism") {
  std::istringstream a("scenario = independent\nn = 500\nthreads = 1\n");
  std::istringstream b("scenario = independent\nn = 500\nthreads = 8\n");
  const std::string ca = canonical_config(parse_simulation_config(a));
  const std::string cb = canonical_config(parse_simulation_config(b));
  CHECK(ca == cb);
  CHECK(fnv1a64(ca) == fnv1a64(cb));
  std::istringstream c("scenario = independent\nn = 501\n");
  CHECK(fnv1a64(canonical_config(parse_simulation_config(c))) != fnv1a64(ca));
}
