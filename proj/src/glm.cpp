#include "survdr/glm.hpp"

#include <cmath>

#include "survdr/errors.hpp"

namespace survdr {

namespace {

constexpr double kScoreTol = 1e-8;
constexpr double kStepTol = 1e-7;  // stall exit, see the fitting loops
constexpr int kMaxIter = 100;
constexpr int kMaxHalvings = 25;
constexpr double kPinTol = 1e-10;        // fitted probability this close to 0/1 counts as pinned
constexpr double kSeparationCoef = 30.0; // coefficient magnitude signalling divergence

void check_design(const Eigen::MatrixXd& design, const Eigen::VectorXd& response) {
  if (design.rows() != response.size())
    throw DimensionMismatch("glm: design rows != response length");
  if (design.rows() == 0 || design.cols() == 0)
    throw DimensionMismatch("glm: empty design");
}

void check_rank(const Eigen::MatrixXd& m) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  if (qr.rank() < m.cols()) throw RankDeficient("design matrix is rank deficient");
}

// Stable log(mu) and log(1-mu) for eta on either tail.
inline double log_expit(double eta) { return eta >= 0.0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta)); }

}  // namespace

double logistic_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                       const Eigen::VectorXd& weights, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = design * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    ll += weights[i] * (response[i] * log_expit(eta[i]) + (1.0 - response[i]) * log_expit(-eta[i]));
  return ll;
}

Eigen::VectorXd logistic_score(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                               const Eigen::VectorXd& weights, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = design * beta;
  Eigen::VectorXd resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    resid[i] = weights[i] * (response[i] - expit(eta[i]));
  return design.transpose() * resid;
}

GlmFit fit_weighted_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                             const Eigen::VectorXd& weights) {
  check_design(design, response);
  if (weights.size() != response.size())
    throw DimensionMismatch("glm: weights length != response length");
  const Eigen::Index n = design.rows(), p = design.cols();
  double wsum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw std::invalid_argument("glm: weights must be nonnegative and finite");
    if (response[i] != 0.0 && response[i] != 1.0)
      throw std::invalid_argument("glm: response must be 0/1");
    wsum += weights[i];
  }
  if (!(wsum > 0.0)) throw std::invalid_argument("glm: weights sum to zero");

  // Scale-free internal weights: multiplying all case weights by c > 0 must
  // leave the fit bit-identical, so normalize to mean 1.
  const Eigen::VectorXd w = weights * (static_cast<double>(n) / wsum);
  check_rank(w.array().sqrt().matrix().asDiagonal() * design);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double ll = logistic_loglik(design, response, w, beta);
  bool converged = false;
  double max_score = 0.0;
  int iter = 0;
  Eigen::VectorXd mu(n);

  for (; iter < kMaxIter; ++iter) {
    const Eigen::VectorXd eta = design * beta;
    for (Eigen::Index i = 0; i < n; ++i) mu[i] = expit(eta[i]);
    const Eigen::VectorXd score = design.transpose() * (w.array() * (response - mu).array()).matrix();
    max_score = score.lpNorm<Eigen::Infinity>();
    if (max_score < kScoreTol) {
      converged = true;
      break;
    }
    const Eigen::VectorXd hw = (w.array() * mu.array() * (1.0 - mu.array())).matrix();
    const Eigen::MatrixXd hess = design.transpose() * hw.asDiagonal() * design;
    const Eigen::VectorXd step = hess.ldlt().solve(score);
    if (!step.allFinite()) break;
    if (step.lpNorm<Eigen::Infinity>() < kStepTol * (1.0 + beta.lpNorm<Eigen::Infinity>())) {
      // A microscopic Newton step means the optimum is closer than the line
      // search can resolve in the log likelihood's ulps.
      beta += step;
      const Eigen::VectorXd eta2 = design * beta;
      for (Eigen::Index i = 0; i < n; ++i) mu[i] = expit(eta2[i]);
      max_score = (design.transpose() * (w.array() * (response - mu).array()).matrix())
                      .lpNorm<Eigen::Infinity>();
      converged = true;
      break;
    }
    double scale = 1.0;
    bool improved = false;
    for (int h = 0; h < kMaxHalvings; ++h, scale *= 0.5) {
      const Eigen::VectorXd cand = beta + scale * step;
      const double cand_ll = logistic_loglik(design, response, w, cand);
      if (cand_ll >= ll) {
        beta = cand;
        ll = cand_ll;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }

  // Separation: some fitted probability is pinned to 0/1 and either the score
  // never converged or convergence was reached only by divergent coefficients
  // (the weighted log likelihood climbing to its supremum of 0).
  bool pinned = false;
  const Eigen::VectorXd eta = design * beta;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = expit(eta[i]);
    if (w[i] > 0.0 && (m < kPinTol || m > 1.0 - kPinTol)) pinned = true;
  }
  if (pinned && (!converged || beta.lpNorm<Eigen::Infinity>() > kSeparationCoef || ll > -1e-8))
    throw Separation("perfect or quasi-perfect separation in logistic fit");
  if (!converged) throw NoConvergence("logistic fit did not converge");

  GlmFit fit;
  fit.coefficients = beta;
  fit.converged = converged;
  fit.iterations = iter;
  fit.max_abs_score = max_score;
  fit.link = Link::logit;
  return fit;
}

double cloglog_pseudo_objective(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcomes,
                                const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = design * beta;
  double obj = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double r = outcomes[i] - std::exp(-std::exp(eta[i]));
    obj -= 0.5 * r * r;
  }
  return obj;
}

Eigen::VectorXd cloglog_pseudo_score(const Eigen::MatrixXd& design,
                                     const Eigen::VectorXd& outcomes,
                                     const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = design * beta;
  Eigen::VectorXd g(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double mu = std::exp(-std::exp(eta[i]));
    const double dmu = -std::exp(eta[i] - std::exp(eta[i]));  // dmu/deta
    g[i] = dmu * (outcomes[i] - mu);
  }
  return design.transpose() * g;
}

GlmFit fit_cloglog_pseudo(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcomes,
                          const std::optional<Eigen::VectorXd>& start) {
  check_design(design, outcomes);
  const Eigen::Index n = design.rows(), p = design.cols();
  check_rank(design);

  Eigen::VectorXd beta;
  if (start) {
    if (start->size() != p) throw DimensionMismatch("cloglog: start length != design cols");
    beta = *start;
  } else {
    // Anchor the intercept at the mean outcome (clamped into (0,1)).
    double mean = outcomes.mean();
    mean = std::min(0.99, std::max(0.01, mean));
    beta = Eigen::VectorXd::Zero(p);
    beta[0] = std::log(-std::log(mean));
  }

  double obj = cloglog_pseudo_objective(design, outcomes, beta);
  bool converged = false;
  double max_score = 0.0;
  int iter = 0;

  for (; iter < kMaxIter; ++iter) {
    const Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd dmu(n), resid(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = std::exp(-std::exp(eta[i]));
      dmu[i] = -std::exp(eta[i] - std::exp(eta[i]));
      resid[i] = outcomes[i] - mu;
    }
    const Eigen::VectorXd score = design.transpose() * (dmu.array() * resid.array()).matrix();
    max_score = score.lpNorm<Eigen::Infinity>();
    if (max_score < kScoreTol) {
      converged = true;
      break;
    }
    // Gauss-Newton information with identity working variance: D'D.
    const Eigen::MatrixXd info =
        design.transpose() * (dmu.array().square()).matrix().asDiagonal() * design;
    const Eigen::VectorXd step = info.ldlt().solve(score);
    if (!step.allFinite()) break;
    if (step.lpNorm<Eigen::Infinity>() < kStepTol * (1.0 + beta.lpNorm<Eigen::Infinity>())) {
      beta += step;
      max_score = cloglog_pseudo_score(design, outcomes, beta).lpNorm<Eigen::Infinity>();
      converged = true;
      break;
    }
    double scale = 1.0;
    bool improved = false;
    for (int h = 0; h < kMaxHalvings; ++h, scale *= 0.5) {
      const Eigen::VectorXd cand = beta + scale * step;
      const double cand_obj = cloglog_pseudo_objective(design, outcomes, cand);
      if (cand_obj >= obj) {
        beta = cand;
        obj = cand_obj;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (!converged) throw NoConvergence("cloglog pseudo-outcome fit did not converge");

  GlmFit fit;
  fit.coefficients = beta;
  fit.converged = converged;
  fit.iterations = iter;
  fit.max_abs_score = max_score;
  fit.link = Link::cloglog_survival;
  return fit;
}

double predict_probability(const GlmFit& fit, const Eigen::VectorXd& row) {
  if (row.size() != fit.coefficients.size())
    throw DimensionMismatch("predict: row length != coefficient length");
  const double eta = fit.coefficients.dot(row);
  return fit.link == Link::logit ? expit(eta) : std::exp(-std::exp(eta));
}

}  // namespace survdr
