#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "survdr/errors.hpp"
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

MatrixXd no_covariates(int n) { return MatrixXd(n, 0); }

VectorXd pack_exponential(double beta, double rate) {
  VectorXd theta(2);
  theta << beta, std::log(rate);
  return theta;
}

}  // namespace

TEST_CASE("exponential fit matches closed-form two-arm estimates") {
  // Exposure-only exponential PH: the score equations give rate = d0/T0 in
  // the reference arm and exp(beta) = (d1/T1)/(d0/T0).
  const Dataset data = make_data({2, 4, 1, 3, 1, 5, 2}, {1, 0, 1, 1, 1, 0, 0},
                                 {0, 0, 0, 0, 1, 1, 1});
  const VectorXd w = VectorXd::Ones(7);
  const ParametricPHFit fit =
      fit_weighted_parametric_ph(data, no_covariates(7), w, BaselineFamily::exponential);
  const double rate0 = 3.0 / 10.0;  // arm-0 events over arm-0 person-time
  const double beta = std::log((1.0 / 8.0) / rate0);
  CHECK(fit.converged);
  CHECK(fit.shape == 1.0);
  CHECK(fit.rate == doctest::Approx(rate0).epsilon(1e-7));
  CHECK(fit.beta == doctest::Approx(beta).epsilon(1e-7));
  CHECK(fit.baseline_cumhaz(2.5) == doctest::Approx(2.5 * fit.rate).epsilon(1e-12));
  const double ll = parametric_loglik(data, no_covariates(7), w, BaselineFamily::exponential, {},
                                      pack_exponential(fit.beta, fit.rate));
  CHECK(fit.loglik == doctest::Approx(ll).epsilon(1e-10));
}

TEST_CASE("weibull fit zeroes the full-likelihood score") {
  RngStream g(41);
  const auto rc = random_censored(g, 300);
  const ParametricPHFit fit =
      fit_weighted_parametric_ph(rc.data, rc.zdesign, VectorXd::Ones(300),
                                 BaselineFamily::weibull);
  CHECK(fit.converged);
  VectorXd theta(1 + rc.zdesign.cols() + 2);
  theta[0] = fit.beta;
  theta.segment(1, rc.zdesign.cols()) = fit.gamma;
  theta[theta.size() - 2] = std::log(fit.shape);
  theta[theta.size() - 1] = std::log(fit.rate);
  const VectorXd score = parametric_score(rc.data, rc.zdesign, VectorXd::Ones(300),
                                          BaselineFamily::weibull, {}, theta);
  CHECK(score.lpNorm<Eigen::Infinity>() < 1e-5);
  const double ll = parametric_loglik(rc.data, rc.zdesign, VectorXd::Ones(300),
                                      BaselineFamily::weibull, {}, theta);
  CHECK(fit.loglik == doctest::Approx(ll).epsilon(1e-10));
  // The generator's event times are exponential given (x, z), so the fitted
  // shape should sit near 1.
  CHECK(fit.shape > 0.85);
  CHECK(fit.shape < 1.15);
}

TEST_CASE("piecewise fit satisfies the hand-derived score equations") {
  // One interior cutpoint at 2. With exposure only, the stationarity
  // conditions are: level_k * (E_k0 + exp(beta) E_k1) = D_k per interval and
  // exp(beta) * sum_k level_k E_k1 = D(arm 1).
  const std::vector<double> times = {1.0, 1.5, 3.0, 4.0, 0.5, 2.5, 5.0};
  const std::vector<int> events = {1, 1, 1, 0, 1, 1, 0};
  const std::vector<int> arm = {0, 0, 0, 0, 1, 1, 1};
  const Dataset data = make_data(times, events, arm);
  const ParametricPHFit fit = fit_weighted_parametric_ph(
      data, no_covariates(7), VectorXd::Ones(7), BaselineFamily::piecewise_exponential, {2.0});
  CHECK(fit.converged);
  REQUIRE(fit.hazard_levels.size() == 2);

  double d[2] = {0, 0}, d1 = 0, e0[2] = {0, 0}, e1[2] = {0, 0};
  for (int i = 0; i < 7; ++i) {
    const double lo = std::min(times[i], 2.0), hi = std::max(times[i] - 2.0, 0.0);
    (arm[i] ? e1 : e0)[0] += lo;
    (arm[i] ? e1 : e0)[1] += hi;
    if (events[i]) {
      ++d[times[i] < 2.0 ? 0 : 1];
      if (arm[i]) ++d1;
    }
  }
  const double ebeta = std::exp(fit.beta);
  for (int k = 0; k < 2; ++k)
    CHECK(fit.hazard_levels[k] * (e0[k] + ebeta * e1[k]) == doctest::Approx(d[k]).epsilon(1e-7));
  CHECK(ebeta * (fit.hazard_levels[0] * e1[0] + fit.hazard_levels[1] * e1[1]) ==
        doctest::Approx(d1).epsilon(1e-7));
  CHECK(fit.baseline_cumhaz(3.0) ==
        doctest::Approx(2.0 * fit.hazard_levels[0] + 1.0 * fit.hazard_levels[1]).epsilon(1e-12));
}

TEST_CASE("piecewise default cutpoints are event-time quintiles") {
  RngStream g(42);
  const auto rc = random_censored(g, 200);
  const ParametricPHFit fit = fit_weighted_parametric_ph(
      rc.data, rc.zdesign, VectorXd::Ones(200), BaselineFamily::piecewise_exponential);
  CHECK(fit.converged);
  REQUIRE(fit.cutpoints.size() == 4);
  REQUIRE(fit.hazard_levels.size() == 5);
  for (std::size_t k = 1; k < fit.cutpoints.size(); ++k)
    CHECK(fit.cutpoints[k - 1] < fit.cutpoints[k]);
  for (int k = 0; k < fit.hazard_levels.size(); ++k) CHECK(fit.hazard_levels[k] > 0.0);
}

TEST_CASE("degenerate inputs are reported as typed errors") {
  const Dataset data = make_data({1, 2, 3, 4}, {1, 1, 0, 1}, {0, 1, 0, 1});
  CHECK_THROWS_AS(fit_weighted_parametric_ph(data, no_covariates(4), VectorXd::Ones(4),
                                             BaselineFamily::piecewise_exponential, {100.0}),
                  EmptyInterval);
  const Dataset censored_only = make_data({1, 2, 3, 4}, {0, 0, 0, 0}, {0, 1, 0, 1});
  CHECK_THROWS_AS(fit_weighted_parametric_ph(censored_only, no_covariates(4), VectorXd::Ones(4),
                                             BaselineFamily::weibull),
                  NoEvents);
  CHECK_THROWS_AS(fit_weighted_cox(censored_only, no_covariates(4), VectorXd::Ones(4)), NoEvents);
}

TEST_CASE("breslow at zero coefficients equals the nelson-aalen estimator") {
  const Dataset data = make_data({1, 2, 2, 3}, {1, 1, 1, 0}, {0, 1, 0, 1});
  const StepFunction breslow =
      weighted_breslow(data, no_covariates(4), 0.0, VectorXd(0), VectorXd::Ones(4));
  const StepFunction na = nelson_aalen(data);
  for (double t : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 9.0})
    CHECK(breslow(t) == doctest::Approx(na(t)).epsilon(1e-14));
  CHECK(breslow(1.0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(breslow(2.0) == doctest::Approx(0.25 + 2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("conditional survival matches the explicit formula") {
  RngStream g(43);
  const auto rc = random_censored(g, 120);
  const VectorXd w = VectorXd::Ones(120);
  const CoxFit cox = fit_weighted_cox(rc.data, rc.zdesign, w);
  const ParametricPHFit weib =
      fit_weighted_parametric_ph(rc.data, rc.zdesign, w, BaselineFamily::weibull);
  VectorXd z(1);
  z << 0.6;
  for (double t : {0.8, 2.0, 4.5}) {
    for (double x : {0.0, 1.0}) {
      const double lp_cox = cox.beta * x + cox.gamma.dot(z);
      CHECK(conditional_survival(cox, t, x, z) ==
            doctest::Approx(std::exp(-cox.baseline_cumhaz(t) * std::exp(lp_cox))).epsilon(1e-13));
      const double lp_w = weib.beta * x + weib.gamma.dot(z);
      const double manual = std::exp(-weib.rate * std::pow(t, weib.shape) * std::exp(lp_w));
      CHECK(conditional_survival(weib, t, x, z) == doctest::Approx(manual).epsilon(1e-13));
    }
  }
  const PhModel as_cox = cox;
  const PhModel as_weib = weib;
  CHECK(conditional_survival(as_cox, 2.0, 1.0, z) == conditional_survival(cox, 2.0, 1.0, z));
  CHECK(conditional_survival(as_weib, 2.0, 1.0, z) == conditional_survival(weib, 2.0, 1.0, z));
}

TEST_CASE("cox is rank-based but parametric fits are not") {
  // Cubing the times preserves every ordering and tie, so the partial
  // likelihood (hence beta) is unchanged; the Weibull likelihood is not.
  RngStream g(44);
  const auto rc = random_censored(g, 50);
  std::vector<double> t3(50), z(50);
  std::vector<int> events(50), arm(50);
  for (int i = 0; i < 50; ++i) {
    const auto& rec = rc.data.records[i];
    t3[i] = rec.time * rec.time * rec.time;
    events[i] = rec.event ? 1 : 0;
    arm[i] = rec.exposure;
    z[i] = rec.covariates[0];
  }
  const Dataset cubed = make_data(t3, events, arm, z);
  const VectorXd w = VectorXd::Ones(50);
  const CoxFit c1 = fit_weighted_cox(rc.data, rc.zdesign, w);
  const CoxFit c2 = fit_weighted_cox(cubed, cubed.covariate_matrix(), w);
  CHECK(c1.beta == doctest::Approx(c2.beta).epsilon(1e-12));
  CHECK(c1.gamma[0] == doctest::Approx(c2.gamma[0]).epsilon(1e-12));
  const ParametricPHFit w1 =
      fit_weighted_parametric_ph(rc.data, rc.zdesign, w, BaselineFamily::weibull);
  const ParametricPHFit w2 =
      fit_weighted_parametric_ph(cubed, cubed.covariate_matrix(), w, BaselineFamily::weibull);
  CHECK(std::abs(w1.shape - w2.shape) > 0.05);
}

TEST_CASE("integer case weights equal row duplication for survival fits") {
  const std::vector<double> times = {1, 2.5, 2.5, 4, 5, 6};
  const std::vector<int> events = {1, 1, 0, 1, 1, 0};
  const std::vector<int> arm = {0, 1, 0, 1, 0, 1};
  const std::vector<double> z = {0.2, -0.5, 1.1, 0.0, -0.3, 0.8};
  const std::vector<double> wint = {2, 1, 3, 1, 2, 1};

  const Dataset data = make_data(times, events, arm, z);
  VectorXd w(6);
  std::vector<double> dt, dz;
  std::vector<int> de, da;
  for (int i = 0; i < 6; ++i) {
    w[i] = wint[i];
    for (int k = 0; k < wint[i]; ++k) {
      dt.push_back(times[i]);
      de.push_back(events[i]);
      da.push_back(arm[i]);
      dz.push_back(z[i]);
    }
  }
  const Dataset dup = make_data(dt, de, da, dz);
  const int m = dup.size();

  const CoxFit cw = fit_weighted_cox(data, data.covariate_matrix(), w);
  const CoxFit cd = fit_weighted_cox(dup, dup.covariate_matrix(), VectorXd::Ones(m));
  CHECK(cw.beta == doctest::Approx(cd.beta).epsilon(1e-8));
  CHECK(cw.gamma[0] == doctest::Approx(cd.gamma[0]).epsilon(1e-8));
  for (double t : {1.0, 2.5, 5.0})
    CHECK(cw.baseline_cumhaz(t) == doctest::Approx(cd.baseline_cumhaz(t)).epsilon(1e-8));

  const ParametricPHFit pw = fit_weighted_parametric_ph(data, data.covariate_matrix(), w,
                                                        BaselineFamily::weibull);
  const ParametricPHFit pd = fit_weighted_parametric_ph(dup, dup.covariate_matrix(),
                                                        VectorXd::Ones(m),
                                                        BaselineFamily::weibull);
  CHECK(pw.beta == doctest::Approx(pd.beta).epsilon(1e-8));
  CHECK(pw.shape == doctest::Approx(pd.shape).epsilon(1e-8));
  CHECK(pw.rate == doctest::Approx(pd.rate).epsilon(1e-8));
}
