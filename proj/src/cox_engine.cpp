#include "cox_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "survdr/errors.hpp"

namespace survdr::detail {

namespace {

constexpr double kScoreTol = 1e-8;
// Near the optimum a Newton step can improve the log likelihood by less than
// one ulp, so strict-improvement line search stalls; a microscopic proposed
// step is itself evidence of convergence (its norm estimates the remaining
// distance to the maximizer).
constexpr double kStepTol = 1e-7;
constexpr int kMaxIter = 100;
constexpr int kMaxHalvings = 25;
constexpr double kDivergeBound = 50.0;

// Risk-set accumulator over a descending time sweep, with running max-shift
// rescaling so exp(eta) never overflows: S0 = sum w e^{eta - shift}, and
// S1/S0, S2/S0 are shift-invariant.
struct RiskAccum {
  double shift = 0.0;
  double s0 = 0.0;
  Eigen::VectorXd s1;
  Eigen::MatrixXd s2;
  bool want_derivs;

  RiskAccum(Eigen::Index p, bool derivs) : want_derivs(derivs) {
    s1 = Eigen::VectorXd::Zero(p);
    if (derivs) s2 = Eigen::MatrixXd::Zero(p, p);
  }

  void add(double w, double eta, const Eigen::RowVectorXd& u) {
    if (s0 == 0.0) {
      shift = eta;
    } else if (eta > shift) {
      const double r = std::exp(shift - eta);
      s0 *= r;
      s1 *= r;
      if (want_derivs) s2 *= r;
      shift = eta;
    }
    const double e = w * std::exp(eta - shift);
    s0 += e;
    s1.noalias() += e * u.transpose();
    if (want_derivs) s2.noalias() += e * u.transpose() * u;
  }

  double log_s0() const { return std::log(s0) + shift; }
};

std::vector<Eigen::Index> descending_time_order(const Eigen::VectorXd& time) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(time.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return time[a] > time[b]; });
  return order;
}

void validate(const CoxProblem& prob) {
  const Eigen::Index n = prob.time.size();
  if (prob.status.size() != n || prob.weights.size() != n || prob.design.rows() != n)
    throw DimensionMismatch("cox: input sizes do not match");
  if (n == 0) throw DimensionMismatch("cox: empty data");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(prob.weights[i] > 0.0) || !std::isfinite(prob.weights[i]))
      throw std::invalid_argument("cox: weights must be positive and finite");
  if (prob.status.sum() == 0.0) throw NoEvents("no modeled events in data");
}

// Single sweep computing any of loglik/score/hessian at theta, given the
// descending time order. Weights w are the caller's (normalized when
// fitting).
void sweep(const CoxProblem& prob, const std::vector<Eigen::Index>& order,
           const Eigen::VectorXd& w, const Eigen::VectorXd& theta, double* loglik,
           Eigen::VectorXd* score, Eigen::MatrixXd* hess) {
  const Eigen::Index p = prob.design.cols();
  const Eigen::VectorXd eta = prob.design * theta;

  if (loglik) *loglik = 0.0;
  if (score) score->setZero(p);
  if (hess) hess->setZero(p, p);
  RiskAccum acc(p, hess != nullptr);

  std::size_t g = 0;
  while (g < order.size()) {
    // Tie group [g, h) at time tau.
    std::size_t h = g;
    const double tau = prob.time[order[g]];
    while (h < order.size() && prob.time[order[h]] == tau) ++h;

    // Enter the risk set: with standard ties everyone at tau is at risk for
    // the modeled jumps at tau; with reversed roles only the modeled
    // (status 1) subjects are.
    for (std::size_t k = g; k < h; ++k) {
      const Eigen::Index i = order[k];
      if (!prob.reverse_ties || prob.status[i] == 1.0)
        acc.add(w[i], eta[i], prob.design.row(i));
    }

    // Contributions of the modeled events at tau (Breslow: common risk set).
    double wd = 0.0;
    for (std::size_t k = g; k < h; ++k) {
      const Eigen::Index i = order[k];
      if (prob.status[i] != 1.0) continue;
      wd += w[i];
      if (loglik) *loglik += w[i] * eta[i];
      if (score) *score += w[i] * prob.design.row(i).transpose();
    }
    if (wd > 0.0) {
      if (loglik) *loglik -= wd * acc.log_s0();
      if (score || hess) {
        const Eigen::VectorXd m = acc.s1 / acc.s0;
        if (score) *score -= wd * m;
        if (hess) hess->noalias() += wd * (acc.s2 / acc.s0 - m * m.transpose());
      }
    }

    if (prob.reverse_ties)
      for (std::size_t k = g; k < h; ++k) {
        const Eigen::Index i = order[k];
        if (prob.status[i] != 1.0) acc.add(w[i], eta[i], prob.design.row(i));
      }
    g = h;
  }
}

}  // namespace

void cox_derivs(const CoxProblem& prob, const Eigen::VectorXd& theta, double* loglik,
                Eigen::VectorXd* score, Eigen::MatrixXd* hess) {
  validate(prob);
  if (theta.size() != prob.design.cols())
    throw DimensionMismatch("cox: theta length != design cols");
  const auto order = descending_time_order(prob.time);
  sweep(prob, order, prob.weights, theta, loglik, score, hess);
}

CoxSolution cox_fit(const CoxProblem& prob) {
  validate(prob);
  const Eigen::Index p = prob.design.cols();
  const double wmean = prob.weights.mean();
  const Eigen::VectorXd w = prob.weights / wmean;  // scale-free fitting
  const auto order = descending_time_order(prob.time);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  double ll;
  sweep(prob, order, w, theta, &ll, nullptr, nullptr);

  CoxSolution sol;
  Eigen::VectorXd score(p);
  Eigen::MatrixXd hess(p, p);
  int iter = 0;
  for (; iter < kMaxIter; ++iter) {
    sweep(prob, order, w, theta, nullptr, &score, &hess);
    sol.max_abs_score = score.lpNorm<Eigen::Infinity>();
    if (sol.max_abs_score < kScoreTol) {
      sol.converged = true;
      break;
    }
    const Eigen::VectorXd step = hess.ldlt().solve(score);
    if (!step.allFinite()) break;
    if (step.lpNorm<Eigen::Infinity>() < kStepTol * (1.0 + theta.lpNorm<Eigen::Infinity>())) {
      theta += step;
      sweep(prob, order, w, theta, &ll, &score, nullptr);
      sol.max_abs_score = score.lpNorm<Eigen::Infinity>();
      sol.converged = true;
      break;
    }
    double scale = 1.0;
    bool improved = false;
    for (int hlf = 0; hlf < kMaxHalvings; ++hlf, scale *= 0.5) {
      const Eigen::VectorXd cand = theta + scale * step;
      double cand_ll;
      sweep(prob, order, w, cand, &cand_ll, nullptr, nullptr);
      if (cand_ll > ll) {
        theta = cand;
        ll = cand_ll;
        improved = true;
        break;
      }
    }
    if (theta.lpNorm<Eigen::Infinity>() > kDivergeBound)
      throw NonfiniteEstimate("cox coefficients diverging (monotone partial likelihood)");
    if (!improved) break;
  }
  if (!sol.converged) {
    // The last accepted step may have landed on the solution exactly.
    sweep(prob, order, w, theta, nullptr, &score, nullptr);
    sol.max_abs_score = score.lpNorm<Eigen::Infinity>();
    if (sol.max_abs_score < kScoreTol)
      sol.converged = true;
    else
      throw NoConvergence("cox fit did not converge");
  }
  sol.theta = theta;
  sol.iterations = iter;
  sol.loglik = ll * wmean;
  return sol;
}

StepFunction cox_breslow(const CoxProblem& prob, const Eigen::VectorXd& theta) {
  validate(prob);
  if (theta.size() != prob.design.cols())
    throw DimensionMismatch("cox: theta length != design cols");
  const Eigen::VectorXd eta = prob.design * theta;
  const auto order = descending_time_order(prob.time);
  RiskAccum acc(0, false);
  const Eigen::RowVectorXd empty_row(0);

  // Collect (time, increment) pairs on the descending sweep, then reverse.
  std::vector<double> rev_times, rev_jumps;
  std::size_t g = 0;
  while (g < order.size()) {
    std::size_t h = g;
    const double tau = prob.time[order[g]];
    while (h < order.size() && prob.time[order[h]] == tau) ++h;
    for (std::size_t k = g; k < h; ++k) {
      const Eigen::Index i = order[k];
      if (!prob.reverse_ties || prob.status[i] == 1.0) acc.add(prob.weights[i], eta[i], empty_row);
    }
    double wd = 0.0;
    for (std::size_t k = g; k < h; ++k)
      if (prob.status[order[k]] == 1.0) wd += prob.weights[order[k]];
    if (wd > 0.0) {
      rev_times.push_back(tau);
      rev_jumps.push_back(wd * std::exp(-acc.shift) / acc.s0);
    }
    if (prob.reverse_ties)
      for (std::size_t k = g; k < h; ++k) {
        const Eigen::Index i = order[k];
        if (prob.status[i] != 1.0) acc.add(prob.weights[i], eta[i], empty_row);
      }
    g = h;
  }

  std::vector<double> knots(rev_times.rbegin(), rev_times.rend());
  std::vector<double> values(rev_jumps.rbegin(), rev_jumps.rend());
  double cum = 0.0;
  for (auto& v : values) {
    cum += v;
    v = cum;
  }
  return StepFunction(std::move(knots), std::move(values), 0.0);
}

}  // namespace survdr::detail
