#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "survdr/dataset.hpp"
#include "survdr/rng.hpp"

namespace survdr::sim {

// ---------------------------------------------------------------------------
// Data-generating process constants. Event times are Weibull proportional
// hazards; the propensity and outcome linear predictors share a quadratic
// confounder term that the "wrong" working models omit. Censoring constants
// are calibrated to roughly 30% censoring; evaluation-time defaults are frozen
// values computed by the truth oracle (see tools and README).
// ---------------------------------------------------------------------------
namespace dgp {

inline constexpr double kWeibullShape = 1.3;
inline constexpr double kWeibullRate = 0.1;
inline constexpr double kBetaNonnull = 0.69;

// logit P(X=1|Z) = z1*kPropZ1 + z1^2*kPropZ1sq + z2*kPropZ2
inline constexpr double kPropZ1 = 0.4;
inline constexpr double kPropZ1sq = 0.6;
inline constexpr double kPropZ2 = -0.4;

// event hazard linear predictor: beta*x + z1*kOutZ1 + z1^2*kOutZ1sq + z2*kOutZ2
inline constexpr double kOutZ1 = 0.5;
inline constexpr double kOutZ1sq = 0.5;
inline constexpr double kOutZ2 = 0.3;

// censoring mechanisms; rates tuned once so each family censors ~30% of
// subjects under the null
inline constexpr double kIndepRate = 0.11;                  // exponential rate
inline constexpr double kTypeA0 = 0.05;                     // + kTypeA1*1{x=1} + kTypeA2*|z1|
inline constexpr double kTypeA1 = 0.05;
inline constexpr double kTypeA2 = 0.05;
inline constexpr double kTypeBRate = 0.05;                  // * exp(b1 x + b2 z1 + b3 x z1)
inline constexpr double kTypeB1 = 0.4;
inline constexpr double kTypeB2 = 0.5;
inline constexpr double kTypeB3 = 2.0;
inline constexpr double kOutcomeDepRate = 0.115;            // * shared frailty
inline constexpr double kFrailtyVariance = 0.5;             // gamma frailty, mean 1

// Frozen default evaluation times: the 40th percentile of each family's
// uncensored null event-time distribution, computed once by quadrature over
// the covariate law (frailty families marginalize the gamma frailty) and
// cross-checked by Monte Carlo. See Scenario::default_eval_time.
inline constexpr double kEvalPlain = 2.0930;    // independent, type A, type B
inline constexpr double kEvalFrailty = 2.3500;  // outcome-dependent (shared frailty)

}  // namespace dgp

enum class CensoringFamily { independent, type_a, type_b, outcome_dependent };

std::string censoring_family_name(CensoringFamily family);
std::optional<CensoringFamily> censoring_family_from_name(const std::string& name);

struct Scenario {
  CensoringFamily censoring = CensoringFamily::independent;
  bool nonnull = false;
  int n = 1000;
  int reps = 500;
  int n_boot = 200;
  std::uint64_t seed = 1;
  double eval_time = 0.0;  // <= 0 selects default_eval_time()

  double beta_true() const { return nonnull ? dgp::kBetaNonnull : 0.0; }
  double default_eval_time() const;
  double resolved_eval_time() const {
    return eval_time > 0.0 ? eval_time : default_eval_time();
  }
  std::string id() const;  // e.g. "null_independent"
};

enum class SpecChoice { right, wrong, none };

// Working-model specification. "wrong" omits the quadratic confounder term;
// "none" means unweighted (weights) or no censoring adjustment.
struct ModelSpec {
  SpecChoice weights = SpecChoice::right;
  SpecChoice outcome = SpecChoice::wrong;          // right|wrong
  SpecChoice censoring_model = SpecChoice::right;  // right|wrong|none
  std::string id() const;                          // "w=right,o=wrong,c=right"
};

enum class EstimatorKind {
  iptw_cox,      // beta-hat from IPTW-weighted Cox with covariate terms
  iptw_weibull,  // beta-hat from IPTW-weighted Weibull PH
  std_cox,       // zeta(t) by standardizing the IPTW-weighted Cox fit
  dr_binomial,   // zeta(t), doubly robust IPCW binomial regression
  dr_survival,   // zeta(t), doubly robust estimating-equation survival curves
  dr_pseudo      // zeta(t), doubly robust pseudo-observation regression
};

std::string estimator_name(EstimatorKind kind);
std::optional<EstimatorKind> estimator_from_name(const std::string& name);
bool estimator_targets_zeta(EstimatorKind kind);  // false for the beta-hat kinds

// One generated replicate with the latent quantities the oracles need.
struct SimulatedSample {
  Dataset data;
  Eigen::VectorXd t_untreated;  // potential event time T(0)
  Eigen::VectorXd t_treated;    // potential event time T(1)
  Eigen::VectorXd censor_time;
};

SimulatedSample generate(const Scenario& scenario, RngStream& stream);

struct Truth {
  double psi = 0.0;   // true conditional log hazard ratio
  double zeta = 0.0;  // true marginal survival difference at eval time
  double mcse = 0.0;  // Monte Carlo se of zeta (0 when exact)
};

// Potential-outcome Monte Carlo truth; exact (0, 0, 0) under the null.
Truth scenario_truth(const Scenario& scenario, std::size_t draws = 2'000'000, int threads = 1);

// Point evaluation of one estimator under one working-model spec.
double evaluate_estimator(EstimatorKind kind, const ModelSpec& spec, CensoringFamily family,
                          const Dataset& data, double t);

struct SummaryRow {
  std::string scenario;
  std::string spec;
  std::string estimator;
  int n = 0;
  int reps = 0;
  double bias = 0.0;
  double sd = 0.0;
  double t1e = 0.0;       // NaN on non-null rows
  double rel_bias = 0.0;  // NaN when the truth is zero
  double mcse = 0.0;      // Monte Carlo se of the bias column
};

// Full replicate loop: per-replicate data generation, point estimates for
// every spec x estimator cell, bootstrap SEs under the null (for type I
// error), aggregation. Deterministic given the scenario seed, independent of
// thread count. Throws ReplicateFailed when any cell loses more than 5% of
// replicates.
std::vector<SummaryRow> run_simulation(const Scenario& scenario,
                                       const std::vector<ModelSpec>& specs,
                                       const std::vector<EstimatorKind>& estimators,
                                       int threads = 1);

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows,
                       const std::string& provenance);
void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows);

// ---------------------------------------------------------------------------
// Plain-text configuration (key = value, '#' comments)
// ---------------------------------------------------------------------------

struct SimulationConfig {
  Scenario scenario;
  std::vector<ModelSpec> specs;
  std::vector<EstimatorKind> estimators;
  int threads = 0;  // 0 = auto
};

// Parses the documented keys; unknown keys and malformed values raise
// ConfigError with the 1-based line number. `profile = desk|full` applies
// n/reps/boot defaults that explicit keys override regardless of order.
SimulationConfig parse_simulation_config(std::istream& in);

// Canonical serialization used for the provenance hash (threads and output
// paths excluded so runs differing only in parallelism hash identically).
std::string canonical_config(const SimulationConfig& config);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace survdr::sim
