#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "survdr/errors.hpp"
#include "survdr/estimators.hpp"
#include "survdr/glm.hpp"
#include "survdr/hazards.hpp"
#include "survdr/nonparam.hpp"
#include "survdr/rng.hpp"
#include "testing.hpp"

using namespace survdr;
using survdr::testing::make_data;
using survdr::testing::random_censored;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("augmented event probability reduces to hand sums") {
  const VectorXd x_match = vec({1, 0, 1, 0});
  const VectorXd gbar = vec({0.5, 0.5, 0.25, 0.25});
  const VectorXd ipcw = vec({1, 0, 2, 1});
  const VectorXd event = vec({1, 0, 0, 1});
  // Silent outcome model: pure weighted mean of the observed events.
  CHECK(aipw_event_probability(x_match, gbar, ipcw, event, VectorXd::Zero(4)) ==
        doctest::Approx(0.5).epsilon(1e-14));
  // With predictions the augmentation recenters each term.
  const VectorXd q = vec({0.1, 0.2, 0.3, 0.4});
  CHECK(aipw_event_probability(x_match, gbar, ipcw, event, q) ==
        doctest::Approx(0.1).epsilon(1e-13));
}

TEST_CASE("pseudo-observation contrast reduces to the ipw contrast") {
  const VectorXd x = vec({1, 0, 1, 0});
  const VectorXd g = vec({0.5, 0.5, 0.25, 0.2});
  const VectorXd s = vec({1.0, 0.5, -0.2, 0.3});
  const VectorXd zero = VectorXd::Zero(4);
  const double expected = (1.0 / 0.5 - 0.5 / 0.5 - 0.2 / 0.25 - 0.3 / 0.8) / 4.0;
  CHECK(dr_pseudo_contrast(x, g, s, zero, zero) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("generic and specialized dr survival curves agree") {
  RngStream rng(73);
  const auto rc = random_censored(rng, 150);
  const VectorXd w = VectorXd::Ones(150);
  const PropensityFit prop = fit_propensity(rc.data, rc.zdesign);
  const PhModel cox = fit_weighted_cox(rc.data, rc.zdesign, w);
  const PhModel weib =
      fit_weighted_parametric_ph(rc.data, rc.zdesign, w, BaselineFamily::weibull);
  const double t = 3.0;
  const std::vector<CensoringModel> models = {
      fit_censoring_model(rc.data, CensoringKind::pooled_km),
      fit_censoring_model(rc.data, CensoringKind::km_by_exposure),
      fit_censoring_model(rc.data, CensoringKind::cox)};
  for (const auto& cens : models) {
    for (const PhModel* outcome : {&cox, &weib}) {
      const DrSurvivalEstimate fast =
          dr_survival_curve(rc.data, t, prop, cens, *outcome, rc.zdesign);
      const CondSurvFn fn = [outcome](double u, double x, const VectorXd& z) {
        return conditional_survival(*outcome, u, x, z);
      };
      const DrSurvivalEstimate ref =
          dr_survival_curve_generic(rc.data, t, prop, cens, fn, rc.zdesign);
      CHECK(fast.s1 == doctest::Approx(ref.s1).epsilon(1e-12));
      CHECK(fast.s0 == doctest::Approx(ref.s0).epsilon(1e-12));
      CHECK(fast.zeta == doctest::Approx(ref.zeta).epsilon(1e-12));
    }
  }
}

TEST_CASE("silent outcome model reduces the dr curve to weighted arm shares") {
  // With no censoring and H identically zero, only the inverse-probability
  // term survives: S_x(t) = mean_i 1{X_i = x, T_i > t} / gbar_i.
  const Dataset data = make_data({1, 2, 3, 4, 5, 6}, {1, 1, 1, 1, 1, 1}, {1, 0, 1, 0, 1, 0},
                                 {0.5, -0.2, 0.1, 0.9, -0.7, 0.3});
  const MatrixXd zdesign = data.covariate_matrix();
  const PropensityFit prop = fit_propensity_marginal(data);
  const CensoringModel cens = CensoringModel::constant_one();
  const CondSurvFn zero = [](double, double, const VectorXd&) { return 0.0; };
  const double t = 3.5;
  const DrSurvivalEstimate est = dr_survival_curve_generic(data, t, prop, cens, zero, zdesign);
  // Exposed survivors past 3.5: one of six (time 5), marginal score 1/2.
  CHECK(est.s1 == doctest::Approx((1.0 / 0.5) / 6.0).epsilon(1e-13));
  CHECK(est.s0 == doctest::Approx((2.0 / 0.5) / 6.0).epsilon(1e-13));
  CHECK(est.zeta == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("dr binomial equals plug-in standardization without censoring") {
  // With every subject fully observed and a marginal propensity, the
  // correction terms are score equations of the logistic fit and vanish.
  RngStream rng(74);
  const int n = 120;
  std::vector<double> times(n), z(n);
  std::vector<int> events(n, 1), arm(n);
  for (int i = 0; i < n; ++i) {
    z[i] = rng.normal();
    arm[i] = rng.bernoulli(expit(0.4 * z[i])) ? 1 : 0;
    times[i] = rng.exponential(0.3 * std::exp(0.5 * arm[i] - 0.4 * z[i]));
  }
  const Dataset data = make_data(times, events, arm, z);
  const MatrixXd zdesign = data.covariate_matrix();
  const PropensityFit prop = fit_propensity_marginal(data);
  const CensoringModel cens = CensoringModel::constant_one();
  const double t = 2.0;
  const double zeta = dr_binomial_survdiff(data, t, prop, cens, zdesign);

  MatrixXd design(n, 4);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = arm[i];
    design(i, 2) = z[i];
    design(i, 3) = arm[i] * z[i];
    y[i] = times[i] <= t ? 1.0 : 0.0;
  }
  const GlmFit fit = fit_weighted_logistic(design, y, VectorXd::Ones(n));
  double f1 = 0, f0 = 0;
  for (int i = 0; i < n; ++i) {
    VectorXd row = design.row(i).transpose();
    row[1] = 1.0;
    row[3] = z[i];
    f1 += predict_probability(fit, row);
    row[1] = 0.0;
    row[3] = 0.0;
    f0 += predict_probability(fit, row);
  }
  const double plug_in = (1.0 - f1 / n) - (1.0 - f0 / n);
  CHECK(zeta == doctest::Approx(plug_in).epsilon(1e-6));
}

TEST_CASE("pseudo-observation estimator accepts precomputed pseudo values") {
  RngStream rng(75);
  const auto rc = random_censored(rng, 90);
  const PropensityFit prop = fit_propensity(rc.data, rc.zdesign);
  const double t = 3.0;
  const VectorXd pseudo = jackknife_pseudo(rc.data, t);
  const double a = dr_pseudo_survdiff(rc.data, t, prop, rc.zdesign);
  const double b = dr_pseudo_survdiff(rc.data, t, prop, rc.zdesign, pseudo);
  CHECK(a == b);
}

TEST_CASE("standardized difference matches the exponential closed form") {
  const Dataset data = make_data({2, 4, 1, 3, 1, 5, 2}, {1, 0, 1, 1, 1, 0, 0},
                                 {0, 0, 0, 0, 1, 1, 1});
  const MatrixXd zdesign(7, 0);
  const PhModel fit = fit_weighted_parametric_ph(data, zdesign, VectorXd::Ones(7),
                                                 BaselineFamily::exponential);
  const auto& exp_fit = std::get<ParametricPHFit>(fit);
  const double t = 2.5;
  const double manual = std::exp(-exp_fit.rate * t * std::exp(exp_fit.beta)) -
                        std::exp(-exp_fit.rate * t);
  CHECK(standardized_survdiff(fit, zdesign, t) == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("propensity scores outside the positivity window are rejected") {
  std::vector<double> z;
  std::vector<int> arm;
  for (int i = 0; i < 10; ++i) {
    z.push_back(1.0);
    arm.push_back(1);
    z.push_back(-1.0);
    arm.push_back(0);
  }
  for (int i = 0; i < 2; ++i) {
    z.push_back(1.0);
    arm.push_back(0);
    z.push_back(-1.0);
    arm.push_back(1);
  }
  // A far-out covariate value on the majority side forces a fitted score
  // indistinguishable from one.
  z.push_back(12.0);
  arm.push_back(1);
  const int n = static_cast<int>(z.size());
  std::vector<double> times(n, 1.0);
  std::vector<int> events(n, 1);
  const Dataset data = make_data(times, events, arm, z);
  CHECK_THROWS_AS(fit_propensity(data, data.covariate_matrix()), PositivityViolation);
}

TEST_CASE("marginal propensity weights are inverse arm shares") {
  const Dataset data = make_data({1, 2, 3, 4, 5}, {1, 1, 1, 1, 1}, {1, 1, 1, 0, 0});
  const PropensityFit prop = fit_propensity_marginal(data);
  for (int i = 0; i < 5; ++i) CHECK(prop.scores[i] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(prop.weights[0] == doctest::Approx(1.0 / 0.6).epsilon(1e-12));
  CHECK(prop.weights[4] == doctest::Approx(1.0 / 0.4).epsilon(1e-12));
}

TEST_CASE("row resampling is deterministic and shape-preserving") {
  RngStream rng(76);
  const auto rc = random_censored(rng, 40);
  RngStream s1 = RngStream::derive(9, 3, 0, 0);
  RngStream s2 = RngStream::derive(9, 3, 0, 0);
  const Dataset a = resample_rows(rc.data, s1);
  const Dataset b = resample_rows(rc.data, s2);
  REQUIRE(a.size() == rc.data.size());
  CHECK(a.covariate_names == rc.data.covariate_names);
  bool identical = true;
  bool same_as_original = true;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    identical = identical && a.records[i].time == b.records[i].time &&
                a.records[i].event == b.records[i].event;
    same_as_original = same_as_original && a.records[i].time == rc.data.records[i].time;
  }
  CHECK(identical);
  CHECK_FALSE(same_as_original);
}

TEST_CASE("bootstrap se of a sample mean is near the classical value") {
  RngStream rng(77);
  const int n = 100;
  std::vector<double> times(n);
  std::vector<int> events(n, 1), arm(n);
  for (int i = 0; i < n; ++i) {
    times[i] = 10.0 + rng.normal();
    arm[i] = i % 2;
  }
  const Dataset data = make_data(times, events, arm);
  const auto mean_time = [](const Dataset& d) {
    double s = 0;
    for (const auto& rec : d.records) s += rec.time;
    return s / static_cast<double>(d.size());
  };
  const BootstrapResult r = bootstrap(mean_time, data, 2000, 123, mean_time(data));
  CHECK(r.n_draws == 2000);
  CHECK(r.n_failed == 0);
  CHECK(r.se > 0.085);
  CHECK(r.se < 0.115);
  CHECK(r.normal_upper - r.normal_lower == doctest::Approx(2 * 1.959963984540054 * r.se));
  CHECK(r.percentile_lower < r.percentile_upper);
}

TEST_CASE("bootstrap output does not depend on the thread count") {
  RngStream rng(78);
  const auto rc = random_censored(rng, 60);
  const auto estimator = [](const Dataset& d) {
    const StepFunction km = kaplan_meier(d);
    return km(2.0);
  };
  const double point = estimator(rc.data);
  const BootstrapResult one = bootstrap(estimator, rc.data, 400, 5, point, 1);
  const BootstrapResult four = bootstrap(estimator, rc.data, 400, 5, point, 4);
  CHECK(one.se == four.se);
  CHECK(one.percentile_lower == four.percentile_lower);
  CHECK(one.percentile_upper == four.percentile_upper);
  CHECK(one.n_failed == four.n_failed);
}

TEST_CASE("bootstrap failure accounting") {
  RngStream rng(79);
  const auto rc = random_censored(rng, 30);
  const auto broken = [](const Dataset&) -> double {
    throw NoConvergence("synthetic failure");
  };
  CHECK_THROWS_AS(bootstrap(broken, rc.data, 50, 7, 0.0), EstimatorFailed);
}
