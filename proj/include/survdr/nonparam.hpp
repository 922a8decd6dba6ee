#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "survdr/dataset.hpp"
#include "survdr/step_function.hpp"

namespace survdr {

// Weighted Kaplan-Meier survival curve of the event time. Censored subjects
// tied with events at a time are still at risk there (events resolve first).
// Empty weights mean unit weights.
StepSurvival kaplan_meier(const Dataset& data, const Eigen::VectorXd& weights = {});

// Weighted Nelson-Aalen cumulative hazard of the event time.
StepFunction nelson_aalen(const Dataset& data, const Eigen::VectorXd& weights = {});

// Kaplan-Meier of the censoring time (reverse roles). Subjects whose event
// happens at time t leave the censoring risk set before censorings at t are
// resolved, so the risk set at t is {time > t} plus {time == t, censored}.
StepSurvival reverse_kaplan_meier(const Dataset& data, const Eigen::VectorXd& weights = {});

enum class CensoringKind { pooled_km, km_by_exposure, cox };

// Builds the design row of the censoring Cox model from (exposure, covariates).
using CensoringRowBuilder = std::function<Eigen::VectorXd(int, const Eigen::VectorXd&)>;

// Fitted model for the censoring survival G_c(t | x, z).
struct CensoringModel {
  CensoringKind kind = CensoringKind::pooled_km;
  bool trivial = false;  // G_c identically one (uncensored analysis)

  StepSurvival pooled;       // pooled_km
  StepSurvival by_arm[2];    // km_by_exposure

  Eigen::VectorXd cox_coef;  // cox
  StepFunction cox_basecumhaz;
  CensoringRowBuilder row_builder;

  double survival(double t, int x, const Eigen::VectorXd& z) const;
  double survival_left(double t, int x, const Eigen::VectorXd& z) const;
  double cox_linear_predictor(int x, const Eigen::VectorXd& z) const;

  // Times where this subject's censoring survival can jump (shared across
  // subjects within an arm for KM kinds, globally for the cox kind).
  const std::vector<double>& jump_times(int x) const;

  static CensoringModel constant_one();

 private:
  std::vector<double> jumps_[2];
  friend CensoringModel fit_censoring_model(const Dataset&, CensoringKind, CensoringRowBuilder);
};

// Fits the censoring model on reversed roles (censorings are the modeled
// events). Default cox design row is [x, z]. Throws NoCensoringEvents when the
// data contain no censored observations.
CensoringModel fit_censoring_model(const Dataset& data, CensoringKind kind,
                                   CensoringRowBuilder row_builder = nullptr);

// Inverse-probability-of-censoring weighted outcome indicators at time t:
//   U_i(t) = 1{T_i <= t, event} / G_c(T_i- | X_i, Z_i)  +  1{T_i > t} / G_c(t | X_i, Z_i)
// Throws ZeroCensoringSurvival when a needed denominator falls below 1e-6;
// subjects censored by t contribute zero and need no denominator.
Eigen::VectorXd ipcw_weights(const Dataset& data, const CensoringModel& censoring, double t);

// Jackknife pseudo-observations for survival at time t:
//   S_i(t) = n * KM(t) - (n - 1) * KM_without_i(t)
// computed exactly, with identical values for subjects sharing (time, event).
Eigen::VectorXd jackknife_pseudo(const Dataset& data, double t);

}  // namespace survdr
