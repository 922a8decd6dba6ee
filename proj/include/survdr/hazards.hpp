#pragma once

// Proportional-hazards fitting with case weights.
//
// Cox fits maximize the weighted partial likelihood with Breslow tie
// handling; the baseline cumulative hazard is the weighted Breslow estimator.
// Parametric fits maximize the weighted full likelihood
//   sum_i w_i [ d_i log lambda(t_i | x_i, z_i) - Lambda(t_i | x_i, z_i) ]
// over exponential, Weibull, or piecewise-exponential baselines, with the
// hazard factored as lambda_0(t) exp(beta x + gamma' z).

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "survdr/dataset.hpp"
#include "survdr/step_function.hpp"

namespace survdr {

struct CoxFit {
  double beta = 0.0;             // exposure log hazard ratio
  Eigen::VectorXd gamma;         // covariate coefficients (zdesign order)
  StepFunction baseline_cumhaz;  // weighted Breslow at the fitted coefficients
  bool converged = false;
  int iterations = 0;
  double max_abs_score = 0.0;
  double loglik = 0.0;
};

// zdesign: n x q covariate design for m(z; gamma) (no intercept; the baseline
// hazard absorbs it). weights: positive finite case weights. Throws NoEvents,
// NoConvergence, NonfiniteEstimate.
CoxFit fit_weighted_cox(const Dataset& data, const Eigen::MatrixXd& zdesign,
                        const Eigen::VectorXd& weights);

// Weighted Breslow baseline cumulative hazard at given coefficients.
StepFunction weighted_breslow(const Dataset& data, const Eigen::MatrixXd& zdesign, double beta,
                              const Eigen::VectorXd& gamma, const Eigen::VectorXd& weights);

// Weighted log partial likelihood and its gradient at (beta, gamma), for
// derivative checks and brute-force verification.
double cox_partial_loglik(const Dataset& data, const Eigen::MatrixXd& zdesign,
                          const Eigen::VectorXd& weights, double beta,
                          const Eigen::VectorXd& gamma);
Eigen::VectorXd cox_partial_score(const Dataset& data, const Eigen::MatrixXd& zdesign,
                                  const Eigen::VectorXd& weights, double beta,
                                  const Eigen::VectorXd& gamma);

enum class BaselineFamily { exponential, weibull, piecewise_exponential };

struct ParametricPHFit {
  BaselineFamily family = BaselineFamily::exponential;
  double beta = 0.0;
  Eigen::VectorXd gamma;
  double shape = 1.0;  // Weibull shape (1 for exponential)
  double rate = 1.0;   // Weibull/exponential rate: Lambda_0(t) = rate * t^shape
  std::vector<double> cutpoints;     // piecewise: interior boundaries, increasing
  Eigen::VectorXd hazard_levels;     // piecewise: level per interval
  bool converged = false;
  int iterations = 0;
  double max_abs_score = 0.0;
  double loglik = 0.0;

  double baseline_cumhaz(double t) const;
};

// Fit a parametric PH model. For the piecewise family, empty cutpoints select
// weighted event-time quintiles. Throws NoEvents, NoConvergence,
// NonfiniteEstimate, EmptyInterval.
ParametricPHFit fit_weighted_parametric_ph(const Dataset& data, const Eigen::MatrixXd& zdesign,
                                           const Eigen::VectorXd& weights, BaselineFamily family,
                                           std::vector<double> cutpoints = {});

// Packed-parameter evaluators for derivative checks. Layout: [beta, gamma,
// nu] with nu = (log rate) for exponential, (log shape, log rate) for
// Weibull, per-interval log levels for piecewise.
double parametric_loglik(const Dataset& data, const Eigen::MatrixXd& zdesign,
                         const Eigen::VectorXd& weights, BaselineFamily family,
                         const std::vector<double>& cutpoints, const Eigen::VectorXd& theta);
Eigen::VectorXd parametric_score(const Dataset& data, const Eigen::MatrixXd& zdesign,
                                 const Eigen::VectorXd& weights, BaselineFamily family,
                                 const std::vector<double>& cutpoints,
                                 const Eigen::VectorXd& theta);

// Model-based conditional survival S(t | x, z) = exp(-Lambda_0(t) e^{beta x + gamma'z}).
double conditional_survival(const CoxFit& fit, double t, double x, const Eigen::VectorXd& z);
double conditional_survival(const ParametricPHFit& fit, double t, double x,
                            const Eigen::VectorXd& z);

using PhModel = std::variant<CoxFit, ParametricPHFit>;
double conditional_survival(const PhModel& model, double t, double x, const Eigen::VectorXd& z);

}  // namespace survdr
