#pragma once

// Binary-outcome regression: weighted logistic maximum likelihood and a
// complementary-log-log estimating-equation fit for survival-type outcomes
// that may fall outside [0,1] (jackknife pseudo-values).

#include <Eigen/Dense>
#include <optional>

namespace survdr {

enum class Link { logit, cloglog_survival };

struct GlmFit {
  Eigen::VectorXd coefficients;  // design order (intercept first by convention)
  bool converged = false;
  int iterations = 0;
  double max_abs_score = 0.0;
  Link link = Link::logit;
};

// Weighted logistic regression by Newton-Raphson with step halving.
// design: n x p (caller supplies the intercept column), response: 0/1,
// weights: nonnegative case weights, not all zero.
// Throws RankDeficient, Separation, NoConvergence.
GlmFit fit_weighted_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                             const Eigen::VectorXd& weights);

// Gauss-Newton fit of E[s_i] = exp(-exp(x_i' b)) with identity working
// variance: solves sum_i (dmu_i/db) (s_i - mu_i) = 0. Outcomes may lie
// outside [0,1]. Throws RankDeficient, NoConvergence.
GlmFit fit_cloglog_pseudo(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcomes,
                          const std::optional<Eigen::VectorXd>& start = std::nullopt);

// Mean response for one design row: expit for the logit link, exp(-exp(.))
// (a survival probability) for the cloglog_survival link.
double predict_probability(const GlmFit& fit, const Eigen::VectorXd& row);

// Objective/score evaluators at arbitrary coefficients, for derivative checks
// and the fitting loops. The logistic objective is the weighted log
// likelihood; the cloglog objective is -(1/2) sum_i (s_i - mu_i)^2, whose
// gradient is exactly the estimating function above.
double logistic_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                       const Eigen::VectorXd& weights, const Eigen::VectorXd& beta);
Eigen::VectorXd logistic_score(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                               const Eigen::VectorXd& weights, const Eigen::VectorXd& beta);
double cloglog_pseudo_objective(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcomes,
                                const Eigen::VectorXd& beta);
Eigen::VectorXd cloglog_pseudo_score(const Eigen::MatrixXd& design,
                                     const Eigen::VectorXd& outcomes,
                                     const Eigen::VectorXd& beta);

// Numerically stable expit.
inline double expit(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace survdr
