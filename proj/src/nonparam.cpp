#include "survdr/nonparam.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "cox_engine.hpp"
#include "survdr/errors.hpp"

namespace survdr {

namespace {

constexpr double kMinCensoringSurvival = 1e-6;

Eigen::VectorXd resolve_weights(const Dataset& data, const Eigen::VectorXd& weights) {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (weights.size() == 0) return Eigen::VectorXd::Ones(n);
  if (weights.size() != n) throw DimensionMismatch("weights length != dataset size");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw std::invalid_argument("weights must be nonnegative and finite");
  return weights;
}

// Shared product-limit sweep. With reverse=false the modeled events are the
// outcome events and censored subjects tied at a time stay at risk; with
// reverse=true the modeled events are censorings and event subjects tied at a
// time have already left the risk set. With cumhaz=true returns the
// Nelson-Aalen cumulative hazard instead of the survival curve.
StepFunction product_limit(const Dataset& data, const Eigen::VectorXd& weights, bool reverse,
                           bool cumhaz) {
  const Eigen::VectorXd w = resolve_weights(data, weights);
  const auto n = static_cast<Eigen::Index>(data.size());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return data.records[static_cast<std::size_t>(a)].time <
           data.records[static_cast<std::size_t>(b)].time;
  });

  double at_risk = w.sum();
  std::vector<double> knots, values;
  double surv = 1.0, cum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double tau = data.records[static_cast<std::size_t>(order[i])].time;
    std::size_t j = i;
    double d = 0.0, off_risk_first = 0.0, group = 0.0;
    for (; j < order.size() &&
           data.records[static_cast<std::size_t>(order[j])].time == tau;
         ++j) {
      const auto& rec = data.records[static_cast<std::size_t>(order[j])];
      const double wj = w[order[j]];
      const bool modeled = reverse ? !rec.event : rec.event;
      if (modeled)
        d += wj;
      else if (reverse)
        off_risk_first += wj;  // event subjects leave before censorings resolve
      group += wj;
    }
    const double risk = at_risk - off_risk_first;
    if (d > 0.0 && risk > 0.0) {
      surv *= 1.0 - d / risk;
      cum += d / risk;
      knots.push_back(tau);
      values.push_back(cumhaz ? cum : surv);
    }
    at_risk -= group;
    i = j;
  }
  return StepFunction(std::move(knots), std::move(values), cumhaz ? 0.0 : 1.0);
}

}  // namespace

StepSurvival kaplan_meier(const Dataset& data, const Eigen::VectorXd& weights) {
  return product_limit(data, weights, false, false);
}

StepFunction nelson_aalen(const Dataset& data, const Eigen::VectorXd& weights) {
  return product_limit(data, weights, false, true);
}

StepSurvival reverse_kaplan_meier(const Dataset& data, const Eigen::VectorXd& weights) {
  return product_limit(data, weights, true, false);
}

double CensoringModel::cox_linear_predictor(int x, const Eigen::VectorXd& z) const {
  const Eigen::VectorXd row = row_builder(x, z);
  if (row.size() != cox_coef.size())
    throw DimensionMismatch("censoring model: design row length != coefficient length");
  return cox_coef.dot(row);
}

double CensoringModel::survival(double t, int x, const Eigen::VectorXd& z) const {
  if (trivial) return 1.0;
  switch (kind) {
    case CensoringKind::pooled_km:
      return pooled(t);
    case CensoringKind::km_by_exposure:
      return by_arm[x == 1 ? 1 : 0](t);
    case CensoringKind::cox:
      return std::exp(-cox_basecumhaz(t) * std::exp(cox_linear_predictor(x, z)));
  }
  return 1.0;
}

double CensoringModel::survival_left(double t, int x, const Eigen::VectorXd& z) const {
  if (trivial) return 1.0;
  switch (kind) {
    case CensoringKind::pooled_km:
      return pooled.left_limit(t);
    case CensoringKind::km_by_exposure:
      return by_arm[x == 1 ? 1 : 0].left_limit(t);
    case CensoringKind::cox:
      return std::exp(-cox_basecumhaz.left_limit(t) * std::exp(cox_linear_predictor(x, z)));
  }
  return 1.0;
}

const std::vector<double>& CensoringModel::jump_times(int x) const {
  return jumps_[x == 1 ? 1 : 0];
}

CensoringModel CensoringModel::constant_one() {
  CensoringModel m;
  m.trivial = true;
  m.pooled = StepFunction({}, {}, 1.0);
  return m;
}

CensoringModel fit_censoring_model(const Dataset& data, CensoringKind kind,
                                   CensoringRowBuilder row_builder) {
  std::size_t n_censored = 0;
  for (const auto& rec : data.records) n_censored += rec.event ? 0 : 1;
  if (n_censored == 0) throw NoCensoringEvents("no censored observations to model");

  CensoringModel model;
  model.kind = kind;
  switch (kind) {
    case CensoringKind::pooled_km: {
      model.pooled = reverse_kaplan_meier(data);
      model.jumps_[0] = model.pooled.knots();
      model.jumps_[1] = model.jumps_[0];
      break;
    }
    case CensoringKind::km_by_exposure: {
      for (int arm = 0; arm < 2; ++arm) {
        Dataset sub;
        sub.covariate_names = data.covariate_names;
        for (const auto& rec : data.records)
          if (rec.exposure == arm) sub.records.push_back(rec);
        if (sub.records.empty())
          throw InvariantViolation("censoring model: an exposure arm is empty");
        bool any = false;
        for (const auto& rec : sub.records) any = any || !rec.event;
        if (!any)
          throw NoCensoringEvents("no censored observations in exposure arm " +
                                  std::to_string(arm));
        model.by_arm[arm] = reverse_kaplan_meier(sub);
        model.jumps_[arm] = model.by_arm[arm].knots();
      }
      break;
    }
    case CensoringKind::cox: {
      if (!row_builder)
        row_builder = [](int x, const Eigen::VectorXd& z) {
          Eigen::VectorXd row(1 + z.size());
          row[0] = static_cast<double>(x);
          row.tail(z.size()) = z;
          return row;
        };
      const auto n = static_cast<Eigen::Index>(data.size());
      const Eigen::VectorXd row0 =
          row_builder(data.records[0].exposure, data.records[0].covariates);
      detail::CoxProblem prob;
      prob.time = data.times();
      prob.status = Eigen::VectorXd::Ones(n) - data.events();
      prob.design.resize(n, row0.size());
      prob.design.row(0) = row0;
      for (Eigen::Index i = 1; i < n; ++i) {
        const auto& rec = data.records[static_cast<std::size_t>(i)];
        const Eigen::VectorXd row = row_builder(rec.exposure, rec.covariates);
        if (row.size() != row0.size())
          throw DimensionMismatch("censoring model: inconsistent design row lengths");
        prob.design.row(i) = row;
      }
      prob.weights = Eigen::VectorXd::Ones(n);
      prob.reverse_ties = true;
      const detail::CoxSolution sol = detail::cox_fit(prob);
      model.cox_coef = sol.theta;
      model.cox_basecumhaz = detail::cox_breslow(prob, sol.theta);
      model.row_builder = std::move(row_builder);
      model.jumps_[0] = model.cox_basecumhaz.knots();
      model.jumps_[1] = model.jumps_[0];
      break;
    }
  }
  return model;
}

Eigen::VectorXd ipcw_weights(const Dataset& data, const CensoringModel& censoring, double t) {
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = data.records[static_cast<std::size_t>(i)];
    if (rec.time <= t && rec.event) {
      const double g = censoring.survival_left(rec.time, rec.exposure, rec.covariates);
      if (g < kMinCensoringSurvival) throw ZeroCensoringSurvival(i, g);
      u[i] = 1.0 / g;
    } else if (rec.time > t) {
      const double g = censoring.survival(t, rec.exposure, rec.covariates);
      if (g < kMinCensoringSurvival) throw ZeroCensoringSurvival(i, g);
      u[i] = 1.0 / g;
    }
    // censored at or before t: zero weight, denominator never needed
  }
  return u;
}

Eigen::VectorXd jackknife_pseudo(const Dataset& data, double t) {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (n < 2) throw InvariantViolation("pseudo-observations need at least two subjects");

  // Distinct-time table restricted to event times at or before t.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return data.records[static_cast<std::size_t>(a)].time <
           data.records[static_cast<std::size_t>(b)].time;
  });
  std::vector<double> tau;   // distinct event times <= t
  std::vector<double> dk;    // event counts
  std::vector<double> yk;    // at-risk counts
  double at_risk = static_cast<double>(n);
  std::size_t i = 0;
  while (i < order.size()) {
    const double time = data.records[static_cast<std::size_t>(order[i])].time;
    std::size_t j = i;
    double d = 0.0, group = 0.0;
    for (; j < order.size() &&
           data.records[static_cast<std::size_t>(order[j])].time == time;
         ++j) {
      d += data.records[static_cast<std::size_t>(order[j])].event ? 1.0 : 0.0;
      group += 1.0;
    }
    if (time > t) break;
    if (d > 0.0) {
      tau.push_back(time);
      dk.push_back(d);
      yk.push_back(at_risk);
    }
    at_risk -= group;
    i = j;
  }

  double full = 1.0;
  for (std::size_t k = 0; k < tau.size(); ++k) full *= 1.0 - dk[k] / yk[k];

  // Leave-one-out KM evaluated once per distinct (time, event) pair.
  std::map<std::pair<double, bool>, double> loo;
  Eigen::VectorXd pseudo(n);
  const double nn = static_cast<double>(n);
  for (Eigen::Index idx = 0; idx < n; ++idx) {
    const auto& rec = data.records[static_cast<std::size_t>(idx)];
    const auto key = std::make_pair(rec.time, rec.event);
    auto it = loo.find(key);
    if (it == loo.end()) {
      double s = 1.0;
      for (std::size_t k = 0; k < tau.size(); ++k) {
        const double d = dk[k] - ((rec.event && rec.time == tau[k]) ? 1.0 : 0.0);
        const double y = yk[k] - (rec.time >= tau[k] ? 1.0 : 0.0);
        if (d > 0.0) s *= 1.0 - d / y;
      }
      it = loo.emplace(key, s).first;
    }
    pseudo[idx] = nn * full - (nn - 1.0) * it->second;
  }
  return pseudo;
}

}  // namespace survdr
