#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "survdr/errors.hpp"
#include "survdr/glm.hpp"
#include "survdr/rng.hpp"

using namespace survdr;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("integer case weights equal row duplication") {
  // Weighted fit on 4 distinct rows vs unweighted fit on the duplicated data.
  MatrixXd design(4, 2);
  design << 1, -1.0, 1, 0.0, 1, 0.5, 1, 2.0;
  VectorXd y(4);
  y << 0, 1, 0, 1;
  VectorXd w(4);
  w << 2, 3, 1, 2;

  MatrixXd big(8, 2);
  VectorXd ybig(8);
  int r = 0;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < w[i]; ++k, ++r) {
      big.row(r) = design.row(i);
      ybig[r] = y[i];
    }
  const GlmFit weighted = fit_weighted_logistic(design, y, w);
  const GlmFit duplicated = fit_weighted_logistic(big, ybig, VectorXd::Ones(8));
  CHECK((weighted.coefficients - duplicated.coefficients).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("two-cell logistic fit matches closed-form cell means") {
  // Saturated [1, x] model: fitted probabilities are weighted cell means.
  MatrixXd design(6, 2);
  design << 1, 0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1;
  VectorXd y(6), w(6);
  y << 1, 0, 0, 1, 1, 0;
  w << 1.0, 2.0, 1.5, 1.0, 3.0, 0.5;
  const GlmFit fit = fit_weighted_logistic(design, y, w);
  const double p0 = 1.0 / 4.5;  // weighted mean of y where x = 0
  const double p1 = 4.0 / 4.5;
  const double b0 = std::log(p0 / (1 - p0));
  const double b1 = std::log(p1 / (1 - p1)) - b0;
  CHECK(fit.coefficients[0] == doctest::Approx(b0).epsilon(1e-7));
  CHECK(fit.coefficients[1] == doctest::Approx(b1).epsilon(1e-7));
  CHECK(predict_probability(fit, design.row(0).transpose()) ==
        doctest::Approx(p0).epsilon(1e-7));
}

TEST_CASE("complete separation and rank deficiency are reported") {
  MatrixXd design(6, 2);
  design << 1, -3, 1, -2, 1, -1, 1, 1, 1, 2, 1, 3;
  VectorXd y(6);
  y << 0, 0, 0, 1, 1, 1;
  CHECK_THROWS_AS(fit_weighted_logistic(design, y, VectorXd::Ones(6)), Separation);

  MatrixXd dup(6, 3);
  dup.col(0).setOnes();
  dup.col(1) = design.col(1);
  dup.col(2) = 2.0 * design.col(1);
  VectorXd ymix(6);
  ymix << 0, 1, 0, 1, 0, 1;
  CHECK_THROWS_AS(fit_weighted_logistic(dup, ymix, VectorXd::Ones(6)), RankDeficient);
}

TEST_CASE("cloglog fit recovers exact generating coefficients") {
  // With outcomes exactly on the model surface the residual objective has a
  // perfect root, so the fit must land on the generating coefficients.
  RngStream g(99);
  const int n = 50;
  MatrixXd design(n, 3);
  VectorXd truth(3);
  truth << -0.4, 0.7, 0.25;
  VectorXd s(n);
  for (int i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = g.bernoulli(0.5) ? 1.0 : 0.0;
    design(i, 2) = g.normal();
    s[i] = std::exp(-std::exp(design.row(i).dot(truth)));
  }
  const GlmFit fit = fit_cloglog_pseudo(design, s);
  CHECK((fit.coefficients - truth).lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(predict_probability(fit, design.row(0).transpose()) ==
        doctest::Approx(s[0]).epsilon(1e-6));
}

TEST_CASE("cloglog fit accepts a warm start") {
  VectorXd s(4);
  s << 0.9, 0.7, 0.55, 0.2;
  MatrixXd design(4, 2);
  design << 1, -1, 1, 0, 1, 1, 1, 2;
  const GlmFit cold = fit_cloglog_pseudo(design, s);
  const GlmFit warm = fit_cloglog_pseudo(design, s, cold.coefficients);
  CHECK((cold.coefficients - warm.coefficients).lpNorm<Eigen::Infinity>() < 1e-7);
  CHECK(warm.iterations <= cold.iterations);
}
