#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>

#include "survdr/dataset.hpp"
#include "survdr/glm.hpp"
#include "survdr/hazards.hpp"
#include "survdr/nonparam.hpp"

namespace survdr {

// ---------------------------------------------------------------------------
// Inverse probability of treatment weighting
// ---------------------------------------------------------------------------

struct PropensityFit {
  GlmFit glm;
  Eigen::VectorXd scores;   // fitted P(X=1 | Z_i)
  Eigen::VectorXd weights;  // X_i/score_i + (1-X_i)/(1-score_i)
};

// Logistic propensity model on [1 | zdesign] (intercept added internally).
// Throws PositivityViolation when any fitted score leaves (1e-6, 1-1e-6).
PropensityFit fit_propensity(const Dataset& data, const Eigen::MatrixXd& zdesign);

// Intercept-only propensity: every score is the sample exposure proportion.
PropensityFit fit_propensity_marginal(const Dataset& data);

// ---------------------------------------------------------------------------
// Regression standardization
// ---------------------------------------------------------------------------

// (1/n) sum_i [ S(t | x=1, z_i) - S(t | x=0, z_i) ] under the fitted
// proportional-hazards model; zdesign rows must match the fit's covariates.
// Exactly 0 at t = 0 and whenever the fitted exposure coefficient is 0.
double standardized_survdiff(const PhModel& fit, const Eigen::MatrixXd& zdesign, double t);

// ---------------------------------------------------------------------------
// Doubly robust estimators of zeta(t) = S1(t) - S0(t)
// ---------------------------------------------------------------------------

// Augmented IPW estimate of the event probability F_x(t) for one arm:
//   mean_i[ x_match_i / gbar_i * ipcw_i * (event_by_t_i - qpred_i) ]
// + mean_i[ qpred_i ]
// Exposed separately so tests can force degenerate components.
double aipw_event_probability(const Eigen::VectorXd& x_match, const Eigen::VectorXd& gbar,
                              const Eigen::VectorXd& ipcw, const Eigen::VectorXd& event_by_t,
                              const Eigen::VectorXd& qpred);

// DR estimator via IPCW-weighted logistic outcome regression of the event
// indicator by t on [1 | X | zdesign | X*zdesign] (arm-specific covariate
// effects), fit on subjects who had the event by t or remained under
// observation at t. Returns S1(t) - S0(t), clamped through the arm
// probabilities. Exactly 0 at t <= 0.
double dr_binomial_survdiff(const Dataset& data, double t, const PropensityFit& propensity,
                            const CensoringModel& censoring, const Eigen::MatrixXd& zdesign);

// Mean of the augmented pseudo-observation contrast:
//   mean_i[ (X_i s_i - (X_i - g_i) v1_i)/g_i - ((1-X_i) s_i + (X_i - g_i) v0_i)/(1-g_i) ]
double dr_pseudo_contrast(const Eigen::VectorXd& exposures, const Eigen::VectorXd& scores,
                          const Eigen::VectorXd& pseudo, const Eigen::VectorXd& v1,
                          const Eigen::VectorXd& v0);

// DR estimator via jackknife pseudo-observations and a cloglog-survival
// outcome model on [1 | X | zdesign]. Exactly 0 at t <= 0. The second form
// reuses precomputed pseudo-observations (they do not depend on the models).
double dr_pseudo_survdiff(const Dataset& data, double t, const PropensityFit& propensity,
                          const Eigen::MatrixXd& zdesign);
double dr_pseudo_survdiff(const Dataset& data, double t, const PropensityFit& propensity,
                          const Eigen::MatrixXd& zdesign, const Eigen::VectorXd& pseudo);

struct DrSurvivalEstimate {
  double s1 = 0.0;
  double s0 = 0.0;
  double zeta = 0.0;  // s1 - s0 after clamping each arm into [0, 1]
};

// Conditional survival H(t, z, x) supplied as a callable (reference path used
// by tests and by callers with non-PH outcome models).
using CondSurvFn = std::function<double(double t, double x, const Eigen::VectorXd& z)>;

// DR estimating-equation estimator of the arm survival curves. The censoring
// martingale integral runs over the fitted censoring model's jump times up to
// min(t, follow-up). zdesign rows feed the outcome model's covariates.
DrSurvivalEstimate dr_survival_curve(const Dataset& data, double t,
                                     const PropensityFit& propensity,
                                     const CensoringModel& censoring, const PhModel& outcome,
                                     const Eigen::MatrixXd& zdesign);

// Same estimator with an arbitrary conditional-survival function; slower,
// kept as the reference implementation.
DrSurvivalEstimate dr_survival_curve_generic(const Dataset& data, double t,
                                             const PropensityFit& propensity,
                                             const CensoringModel& censoring,
                                             const CondSurvFn& cond_surv,
                                             const Eigen::MatrixXd& zdesign);

// ---------------------------------------------------------------------------
// Bootstrap inference
// ---------------------------------------------------------------------------

class RngStream;

// One iid resample of the rows (with replacement), consuming n draws.
Dataset resample_rows(const Dataset& data, RngStream& stream);

struct BootstrapResult {
  double se = 0.0;
  double normal_lower = 0.0, normal_upper = 0.0;          // estimate +- 1.96 se
  double percentile_lower = 0.0, percentile_upper = 0.0;  // empirical 2.5/97.5%
  int n_failed = 0;
  int n_draws = 0;
};

// Nonparametric bootstrap: iid row resampling, full-pipeline refit inside the
// estimator closure. Failed draws are dropped and counted; more than 5%
// failures throws EstimatorFailed. Deterministic given (seed, n_boot),
// independent of thread count.
BootstrapResult bootstrap(const std::function<double(const Dataset&)>& estimator,
                          const Dataset& data, int n_boot, std::uint64_t seed,
                          double point_estimate, int threads = 1);

struct EstimateWithCI {
  std::string method;
  double t = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  double ci_lower = 0.0, ci_upper = 0.0;
  int n_boot = 0;
};

}  // namespace survdr
