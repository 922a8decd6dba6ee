#pragma once

// Internal weighted Cox machinery shared by the hazards module (event models)
// and the nonparametric module (censoring models fitted with reversed roles).
// Not part of the public interface.

#include <Eigen/Dense>

#include "survdr/step_function.hpp"

namespace survdr::detail {

struct CoxProblem {
  Eigen::VectorXd time;     // follow-up times, > 0
  Eigen::VectorXd status;   // modeled-event indicator (0/1)
  Eigen::MatrixXd design;   // n x p covariate design
  Eigen::VectorXd weights;  // positive case weights
  // Tie convention. false (event models): subjects whose censoring ties a
  // modeled event time are still in the risk set at that time. true
  // (censoring models): the modeled jumps are censorings and subjects with an
  // event at the tied time have already left the risk set.
  bool reverse_ties = false;
};

struct CoxSolution {
  Eigen::VectorXd theta;
  bool converged = false;
  int iterations = 0;
  double max_abs_score = 0.0;
  double loglik = 0.0;  // at the original weight scale
};

// Weighted log partial likelihood (Breslow ties) and derivatives at theta.
// Any of the output pointers may be null.
void cox_derivs(const CoxProblem& prob, const Eigen::VectorXd& theta, double* loglik,
                Eigen::VectorXd* score, Eigen::MatrixXd* hess);

// Newton-Raphson fit with step halving. Throws NoEvents, NoConvergence,
// NonfiniteEstimate.
CoxSolution cox_fit(const CoxProblem& prob);

// Weighted Breslow baseline cumulative hazard at theta: jumps at the modeled
// event times, increment sum_{l in D_t} w_l / sum_{j in R(t)} w_j e^{eta_j}.
StepFunction cox_breslow(const CoxProblem& prob, const Eigen::VectorXd& theta);

}  // namespace survdr::detail
