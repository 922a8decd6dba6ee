#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "survdr/errors.hpp"
#include "survdr/nonparam.hpp"
#include "survdr/rng.hpp"
#include "testing.hpp"

using namespace survdr;
using survdr::testing::make_data;
using survdr::testing::random_censored;
using Eigen::VectorXd;

namespace {

// Independent product-limit estimate for the leave-one-out cross-check.
double naive_km_at(const std::vector<double>& times, const std::vector<int>& events, double t) {
  std::vector<double> distinct;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (events[i] && times[i] <= t) distinct.push_back(times[i]);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  double s = 1.0;
  for (double tau : distinct) {
    double at_risk = 0, d = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (times[i] >= tau) ++at_risk;
      if (times[i] == tau && events[i]) ++d;
    }
    s *= 1.0 - d / at_risk;
  }
  return s;
}

}  // namespace

TEST_CASE("pseudo-observations match a censored hand computation") {
  const Dataset data = make_data({1, 2, 3}, {1, 0, 1}, {0, 1, 0});
  const VectorXd pseudo = jackknife_pseudo(data, 2.5);
  CHECK(pseudo[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pseudo[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pseudo[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pseudo-observations equal the brute-force leave-one-out values") {
  RngStream g(57);
  const auto rc = random_censored(g, 80);
  const double t = 4.0;
  const VectorXd pseudo = jackknife_pseudo(rc.data, t);
  std::vector<double> times(80);
  std::vector<int> events(80);
  for (int i = 0; i < 80; ++i) {
    times[i] = rc.data.records[i].time;
    events[i] = rc.data.records[i].event ? 1 : 0;
  }
  const double s_full = naive_km_at(times, events, t);
  const int n = 80;
  for (int i = 0; i < n; ++i) {
    std::vector<double> t_loo;
    std::vector<int> e_loo;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      t_loo.push_back(times[j]);
      e_loo.push_back(events[j]);
    }
    const double expected = n * s_full - (n - 1) * naive_km_at(t_loo, e_loo, t);
    CHECK(pseudo[i] == doctest::Approx(expected).epsilon(1e-11));
  }
}

TEST_CASE("ipcw weights match the hand computation") {
  const Dataset data = make_data({1, 2, 3}, {1, 0, 1}, {0, 1, 0});
  const CensoringModel model = fit_censoring_model(data, CensoringKind::pooled_km);
  const VectorXd u = ipcw_weights(data, model, 2.5);
  CHECK(u[0] == doctest::Approx(1.0).epsilon(1e-12));  // event before the censoring jump
  CHECK(u[1] == 0.0);                                  // censored: exact zero, no denominator
  CHECK(u[2] == doctest::Approx(2.0).epsilon(1e-12));  // survivor past t, G(2.5) = 1/2
}

TEST_CASE("ipcw never evaluates the censoring curve for censored subjects") {
  // The terminal subject is censored, so G reaches exactly zero at its time;
  // the weight must still come back as zero without touching 1/G.
  const Dataset data = make_data({1, 2}, {1, 0}, {0, 1});
  const CensoringModel model = fit_censoring_model(data, CensoringKind::pooled_km);
  CHECK(model.survival(2.0, 0, VectorXd(0)) == 0.0);
  const VectorXd u = ipcw_weights(data, model, 3.0);
  CHECK(u[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(u[1] == 0.0);
}

TEST_CASE("per-arm censoring model keeps the arms independent") {
  const Dataset data = make_data({1, 2, 3, 1, 2, 3}, {1, 0, 1, 1, 1, 0}, {0, 0, 0, 1, 1, 1});
  const CensoringModel model = fit_censoring_model(data, CensoringKind::km_by_exposure);
  const VectorXd z(0);
  // Arm 0 censors at 2 (two at risk), arm 1 censors at 3 (one at risk).
  CHECK(model.survival(2.0, 0, z) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(model.survival(2.5, 1, z) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(model.survival(3.0, 1, z) == 0.0);
  CHECK(model.survival_left(2.0, 0, z) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(model.jump_times(0) == std::vector<double>{2.0});
  CHECK(model.jump_times(1) == std::vector<double>{3.0});
}

TEST_CASE("proportional-hazards censoring model handles a tied event correctly") {
  // At the censoring time there is also an outcome event; that subject no
  // longer belongs to the censoring risk set, so the baseline increment is
  // 2/4, not 2/5.
  const Dataset data = make_data({1, 1, 1, 2, 2}, {0, 0, 1, 1, 1}, {0, 1, 0, 1, 0});
  const CensoringModel model = fit_censoring_model(
      data, CensoringKind::cox, [](int x, const VectorXd&) {
        VectorXd row(1);
        row << x;
        return row;
      });
  // The censored subjects sit symmetrically across arms, so the coefficient
  // is exactly zero and both arms share the baseline.
  CHECK(model.cox_coef.size() == 1);
  CHECK(model.cox_coef[0] == 0.0);
  const VectorXd z(0);
  const double g = std::exp(-0.5);
  CHECK(model.survival(1.0, 0, z) == doctest::Approx(g).epsilon(1e-12));
  CHECK(model.survival(1.0, 1, z) == doctest::Approx(g).epsilon(1e-12));
  CHECK(model.survival_left(1.0, 0, z) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(model.survival(1.9, 1, z) == doctest::Approx(g).epsilon(1e-12));
  CHECK(model.jump_times(0) == std::vector<double>{1.0});
}

TEST_CASE("constant-one censoring model never down-weights") {
  const CensoringModel model = CensoringModel::constant_one();
  const VectorXd z(0);
  CHECK(model.survival(7.0, 1, z) == 1.0);
  CHECK(model.survival_left(3.0, 0, z) == 1.0);
  CHECK(model.jump_times(0).empty());
  const Dataset data = make_data({1, 2, 3}, {1, 0, 1}, {0, 1, 0});
  const VectorXd u = ipcw_weights(data, model, 2.5);
  CHECK(u[0] == 1.0);
  CHECK(u[1] == 0.0);
  CHECK(u[2] == 1.0);
}

TEST_CASE("fitting a censoring model without censorings is an error") {
  const Dataset data = make_data({1, 2, 3}, {1, 1, 1}, {0, 1, 0});
  CHECK_THROWS_AS(fit_censoring_model(data, CensoringKind::pooled_km), NoCensoringEvents);
}

TEST_CASE("integer case weights equal row duplication for product-limit curves") {
  const std::vector<double> times = {1, 2, 2, 3, 5};
  const std::vector<int> events = {1, 0, 1, 1, 0};
  const std::vector<int> arm = {0, 1, 0, 1, 0};
  const std::vector<double> wint = {2, 1, 3, 1, 2};
  const Dataset data = make_data(times, events, arm);
  VectorXd w(5);
  std::vector<double> dt;
  std::vector<int> de, da;
  for (int i = 0; i < 5; ++i) {
    w[i] = wint[i];
    for (int k = 0; k < wint[i]; ++k) {
      dt.push_back(times[i]);
      de.push_back(events[i]);
      da.push_back(arm[i]);
    }
  }
  const Dataset dup = make_data(dt, de, da);
  const StepFunction km_w = kaplan_meier(data, w);
  const StepFunction km_d = kaplan_meier(dup);
  const StepFunction rk_w = reverse_kaplan_meier(data, w);
  const StepFunction rk_d = reverse_kaplan_meier(dup);
  for (double t : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0}) {
    CHECK(km_w(t) == doctest::Approx(km_d(t)).epsilon(1e-12));
    CHECK(rk_w(t) == doctest::Approx(rk_d(t)).epsilon(1e-12));
  }
}
