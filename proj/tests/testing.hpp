#pragma once

// Shared helpers for the unit tests.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "survdr/dataset.hpp"
#include "survdr/rng.hpp"

namespace survdr::testing {

// Build a dataset from parallel vectors; z may be empty (no covariates) or
// hold one column.
inline Dataset make_data(const std::vector<double>& times, const std::vector<int>& events,
                         const std::vector<int>& exposure, const std::vector<double>& z = {}) {
  Dataset d;
  if (!z.empty()) d.covariate_names = {"z"};
  for (std::size_t i = 0; i < times.size(); ++i) {
    SurvivalRecord rec;
    rec.time = times[i];
    rec.event = events[i] == 1;
    rec.exposure = exposure[i];
    rec.covariates = z.empty() ? Eigen::VectorXd() : Eigen::VectorXd::Constant(1, z[i]);
    d.records.push_back(rec);
  }
  return d;
}

struct RandomCensored {
  Dataset data;
  Eigen::MatrixXd zdesign;
};

// Right-censored data with one confounder-ish covariate and ties.
inline RandomCensored random_censored(RngStream& g, int n) {
  RandomCensored rc;
  rc.data.covariate_names = {"z"};
  rc.zdesign.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    SurvivalRecord rec;
    const double z = g.normal();
    rec.exposure = g.bernoulli(1.0 / (1.0 + std::exp(-0.5 * z))) ? 1 : 0;
    const double event_time = g.exponential(0.25 * std::exp(0.4 * rec.exposure + 0.3 * z));
    const double censor_time = g.exponential(0.12);
    rec.time = std::min(event_time, censor_time);
    if (g.uniform() < 0.3) rec.time = 0.25 * std::ceil(rec.time / 0.25);  // grid ties
    rec.event = event_time <= censor_time;
    rec.covariates = Eigen::VectorXd::Constant(1, z);
    rc.zdesign(i, 0) = z;
    rc.data.records.push_back(rec);
  }
  return rc;
}

}  // namespace survdr::testing
