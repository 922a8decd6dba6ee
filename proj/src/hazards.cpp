#include "survdr/hazards.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cox_engine.hpp"
#include "survdr/errors.hpp"

namespace survdr {

namespace {

constexpr double kScoreTol = 1e-8;
constexpr double kStepTol = 1e-7;  // stall exit, see the fitting loop
constexpr int kMaxIter = 100;
constexpr int kMaxHalvings = 25;
constexpr double kDivergeBound = 50.0;

Eigen::MatrixXd exposure_design(const Dataset& data, const Eigen::MatrixXd& zdesign) {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (zdesign.rows() != 0 && zdesign.rows() != n)
    throw DimensionMismatch("hazards: zdesign rows != dataset size");
  const Eigen::Index q = zdesign.rows() == 0 ? 0 : zdesign.cols();
  Eigen::MatrixXd u(n, 1 + q);
  u.col(0) = data.exposures();
  if (q > 0) u.rightCols(q) = zdesign;
  return u;
}

detail::CoxProblem make_problem(const Dataset& data, const Eigen::MatrixXd& zdesign,
                                const Eigen::VectorXd& weights) {
  detail::CoxProblem prob;
  prob.time = data.times();
  prob.status = data.events();
  prob.design = exposure_design(data, zdesign);
  prob.weights = weights;
  prob.reverse_ties = false;
  return prob;
}

// ---- parametric full likelihood ----

struct ParamLayout {
  Eigen::Index q = 0;       // covariate count
  Eigen::Index r = 0;       // baseline parameter count
  BaselineFamily family = BaselineFamily::exponential;
  std::vector<double> cutpoints;  // piecewise interior boundaries

  Eigen::Index dim() const { return 1 + q + r; }
  Eigen::Index nu0() const { return 1 + q; }
  Eigen::Index intervals() const { return static_cast<Eigen::Index>(cutpoints.size()) + 1; }
};

// Overlap of (0, t] with piecewise interval k.
double interval_overlap(const std::vector<double>& cuts, Eigen::Index k, double t) {
  const double lo = k == 0 ? 0.0 : cuts[static_cast<std::size_t>(k - 1)];
  const double hi =
      k == static_cast<Eigen::Index>(cuts.size()) ? std::numeric_limits<double>::infinity()
                                                  : cuts[static_cast<std::size_t>(k)];
  return std::max(0.0, std::min(t, hi) - lo);
}

Eigen::Index interval_of(const std::vector<double>& cuts, double t) {
  // t belongs to [c_{k-1}, c_k); upper_bound gives the first cut > t.
  return static_cast<Eigen::Index>(std::upper_bound(cuts.begin(), cuts.end(), t) - cuts.begin());
}

// Weighted log likelihood with optional gradient and Hessian in the packed
// parameterization [beta, gamma, nu].
void param_derivs(const Dataset& data, const Eigen::MatrixXd& u, const Eigen::VectorXd& w,
                  const ParamLayout& lay, const Eigen::VectorXd& theta, double* loglik,
                  Eigen::VectorXd* score, Eigen::MatrixXd* hess) {
  const Eigen::Index n = u.rows();
  const Eigen::Index pc = 1 + lay.q;  // beta/gamma block
  const Eigen::VectorXd eta = u * theta.head(pc);
  if (loglik) *loglik = 0.0;
  if (score) score->setZero(lay.dim());
  if (hess) hess->setZero(lay.dim(), lay.dim());

  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = data.records[static_cast<std::size_t>(i)].time;
    const double d = data.records[static_cast<std::size_t>(i)].event ? 1.0 : 0.0;
    const double wi = w[i];
    const double ee = std::exp(eta[i]);

    double cumhaz0 = 0.0;     // Lambda_0(t)
    double log_haz0 = 0.0;    // log lambda_0(t)
    switch (lay.family) {
      case BaselineFamily::exponential: {
        const double b = theta[lay.nu0()];
        cumhaz0 = std::exp(b) * t;
        log_haz0 = b;
        break;
      }
      case BaselineFamily::weibull: {
        const double a = theta[lay.nu0()];      // log shape
        const double b = theta[lay.nu0() + 1];  // log rate
        const double logt = std::log(t);
        cumhaz0 = std::exp(b + std::exp(a) * logt);
        log_haz0 = a + b + (std::exp(a) - 1.0) * logt;
        break;
      }
      case BaselineFamily::piecewise_exponential: {
        for (Eigen::Index k = 0; k < lay.intervals(); ++k)
          cumhaz0 += std::exp(theta[lay.nu0() + k]) * interval_overlap(lay.cutpoints, k, t);
        log_haz0 = theta[lay.nu0() + interval_of(lay.cutpoints, t)];
        break;
      }
    }
    const double big_a = cumhaz0 * ee;  // Lambda(t | x, z)
    if (loglik) *loglik += wi * (d * (log_haz0 + eta[i]) - big_a);
    if (!score && !hess) continue;

    const Eigen::VectorXd urow = u.row(i).transpose();
    if (score) score->head(pc) += wi * (d - big_a) * urow;
    if (hess) hess->topLeftCorner(pc, pc) -= wi * big_a * urow * urow.transpose();

    switch (lay.family) {
      case BaselineFamily::exponential: {
        const Eigen::Index ib = lay.nu0();
        if (score) (*score)[ib] += wi * (d - big_a);
        if (hess) {
          (*hess)(ib, ib) -= wi * big_a;
          hess->col(ib).head(pc) -= wi * big_a * urow;
          hess->row(ib).head(pc) -= wi * big_a * urow.transpose();
        }
        break;
      }
      case BaselineFamily::weibull: {
        const Eigen::Index ia = lay.nu0(), ib = lay.nu0() + 1;
        const double el = std::exp(theta[ia]) * std::log(t);  // e^a log t
        if (score) {
          (*score)[ia] += wi * (d * (1.0 + el) - big_a * el);
          (*score)[ib] += wi * (d - big_a);
        }
        if (hess) {
          (*hess)(ia, ia) += wi * (d * el - big_a * (el + el * el));
          (*hess)(ib, ib) -= wi * big_a;
          (*hess)(ia, ib) -= wi * big_a * el;
          (*hess)(ib, ia) -= wi * big_a * el;
          hess->col(ia).head(pc) -= wi * big_a * el * urow;
          hess->row(ia).head(pc) -= wi * big_a * el * urow.transpose();
          hess->col(ib).head(pc) -= wi * big_a * urow;
          hess->row(ib).head(pc) -= wi * big_a * urow.transpose();
        }
        break;
      }
      case BaselineFamily::piecewise_exponential: {
        const Eigen::Index ki = interval_of(lay.cutpoints, t);
        for (Eigen::Index k = 0; k < lay.intervals(); ++k) {
          const double ak = std::exp(theta[lay.nu0() + k]) * interval_overlap(lay.cutpoints, k, t) * ee;
          const Eigen::Index ik = lay.nu0() + k;
          if (score) (*score)[ik] += wi * (d * (k == ki ? 1.0 : 0.0) - ak);
          if (hess) {
            (*hess)(ik, ik) -= wi * ak;
            hess->col(ik).head(pc) -= wi * ak * urow;
            hess->row(ik).head(pc) -= wi * ak * urow.transpose();
          }
        }
        break;
      }
    }
  }
}

ParamLayout make_layout(const Eigen::MatrixXd& zdesign, BaselineFamily family,
                        std::vector<double> cutpoints) {
  ParamLayout lay;
  lay.q = zdesign.rows() == 0 ? 0 : zdesign.cols();
  lay.family = family;
  switch (family) {
    case BaselineFamily::exponential: lay.r = 1; break;
    case BaselineFamily::weibull: lay.r = 2; break;
    case BaselineFamily::piecewise_exponential:
      lay.cutpoints = std::move(cutpoints);
      lay.r = static_cast<Eigen::Index>(lay.cutpoints.size()) + 1;
      break;
  }
  return lay;
}

// Weighted quintiles of the event-time distribution as default cutpoints.
std::vector<double> default_cutpoints(const Dataset& data, const Eigen::VectorXd& weights) {
  std::vector<std::pair<double, double>> ev;  // (time, weight)
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.records[i].event) ev.emplace_back(data.records[i].time, weights[static_cast<Eigen::Index>(i)]);
  if (ev.empty()) throw NoEvents("no events to place piecewise cutpoints");
  std::sort(ev.begin(), ev.end());
  double total = 0.0;
  for (const auto& p : ev) total += p.second;
  std::vector<double> cuts;
  for (const double q : {0.2, 0.4, 0.6, 0.8}) {
    double cum = 0.0;
    double cut = ev.back().first;
    for (const auto& p : ev) {
      cum += p.second;
      if (cum >= q * total) {
        cut = p.first;
        break;
      }
    }
    if (cut < ev.back().first && (cuts.empty() || cut > cuts.back())) cuts.push_back(cut);
  }
  return cuts;
}

}  // namespace

CoxFit fit_weighted_cox(const Dataset& data, const Eigen::MatrixXd& zdesign,
                        const Eigen::VectorXd& weights) {
  const detail::CoxProblem prob = make_problem(data, zdesign, weights);
  const detail::CoxSolution sol = detail::cox_fit(prob);
  CoxFit fit;
  fit.beta = sol.theta[0];
  fit.gamma = sol.theta.tail(sol.theta.size() - 1);
  fit.baseline_cumhaz = detail::cox_breslow(prob, sol.theta);
  fit.converged = sol.converged;
  fit.iterations = sol.iterations;
  fit.max_abs_score = sol.max_abs_score;
  fit.loglik = sol.loglik;
  return fit;
}

StepFunction weighted_breslow(const Dataset& data, const Eigen::MatrixXd& zdesign, double beta,
                              const Eigen::VectorXd& gamma, const Eigen::VectorXd& weights) {
  const detail::CoxProblem prob = make_problem(data, zdesign, weights);
  Eigen::VectorXd theta(prob.design.cols());
  theta[0] = beta;
  if (gamma.size() != theta.size() - 1)
    throw DimensionMismatch("breslow: gamma length != zdesign cols");
  theta.tail(gamma.size()) = gamma;
  return detail::cox_breslow(prob, theta);
}

double cox_partial_loglik(const Dataset& data, const Eigen::MatrixXd& zdesign,
                          const Eigen::VectorXd& weights, double beta,
                          const Eigen::VectorXd& gamma) {
  const detail::CoxProblem prob = make_problem(data, zdesign, weights);
  Eigen::VectorXd theta(prob.design.cols());
  theta[0] = beta;
  if (gamma.size() != theta.size() - 1)
    throw DimensionMismatch("cox: gamma length != zdesign cols");
  theta.tail(gamma.size()) = gamma;
  double ll = 0.0;
  detail::cox_derivs(prob, theta, &ll, nullptr, nullptr);
  return ll;
}

Eigen::VectorXd cox_partial_score(const Dataset& data, const Eigen::MatrixXd& zdesign,
                                  const Eigen::VectorXd& weights, double beta,
                                  const Eigen::VectorXd& gamma) {
  const detail::CoxProblem prob = make_problem(data, zdesign, weights);
  Eigen::VectorXd theta(prob.design.cols());
  theta[0] = beta;
  if (gamma.size() != theta.size() - 1)
    throw DimensionMismatch("cox: gamma length != zdesign cols");
  theta.tail(gamma.size()) = gamma;
  Eigen::VectorXd score;
  detail::cox_derivs(prob, theta, nullptr, &score, nullptr);
  return score;
}

double ParametricPHFit::baseline_cumhaz(double t) const {
  if (!(t > 0.0)) return 0.0;
  switch (family) {
    case BaselineFamily::exponential:
      return rate * t;
    case BaselineFamily::weibull:
      return rate * std::pow(t, shape);
    case BaselineFamily::piecewise_exponential: {
      double cum = 0.0;
      for (Eigen::Index k = 0; k < hazard_levels.size(); ++k)
        cum += hazard_levels[k] * interval_overlap(cutpoints, k, t);
      return cum;
    }
  }
  return 0.0;
}

double parametric_loglik(const Dataset& data, const Eigen::MatrixXd& zdesign,
                         const Eigen::VectorXd& weights, BaselineFamily family,
                         const std::vector<double>& cutpoints, const Eigen::VectorXd& theta) {
  const ParamLayout lay = make_layout(zdesign, family, cutpoints);
  if (theta.size() != lay.dim()) throw DimensionMismatch("parametric: theta length mismatch");
  const Eigen::MatrixXd u = exposure_design(data, zdesign);
  double ll = 0.0;
  param_derivs(data, u, weights, lay, theta, &ll, nullptr, nullptr);
  return ll;
}

Eigen::VectorXd parametric_score(const Dataset& data, const Eigen::MatrixXd& zdesign,
                                 const Eigen::VectorXd& weights, BaselineFamily family,
                                 const std::vector<double>& cutpoints,
                                 const Eigen::VectorXd& theta) {
  const ParamLayout lay = make_layout(zdesign, family, cutpoints);
  if (theta.size() != lay.dim()) throw DimensionMismatch("parametric: theta length mismatch");
  const Eigen::MatrixXd u = exposure_design(data, zdesign);
  Eigen::VectorXd score;
  param_derivs(data, u, weights, lay, theta, nullptr, &score, nullptr);
  return score;
}

ParametricPHFit fit_weighted_parametric_ph(const Dataset& data, const Eigen::MatrixXd& zdesign,
                                           const Eigen::VectorXd& weights, BaselineFamily family,
                                           std::vector<double> cutpoints) {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (weights.size() != n) throw DimensionMismatch("parametric: weights length != dataset size");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
      throw std::invalid_argument("parametric: weights must be positive and finite");
  if (data.n_events() == 0) throw NoEvents("no events in data");

  const double wmean = weights.mean();
  const Eigen::VectorXd w = weights / wmean;

  if (family == BaselineFamily::piecewise_exponential && cutpoints.empty())
    cutpoints = default_cutpoints(data, w);
  for (std::size_t k = 1; k < cutpoints.size(); ++k)
    if (!(cutpoints[k - 1] < cutpoints[k]))
      throw std::invalid_argument("parametric: cutpoints must be strictly increasing");

  const ParamLayout lay = make_layout(zdesign, family, cutpoints);
  const Eigen::MatrixXd u = exposure_design(data, zdesign);

  // Piecewise intervals must carry weighted exposure time.
  if (family == BaselineFamily::piecewise_exponential) {
    for (Eigen::Index k = 0; k < lay.intervals(); ++k) {
      double exposure = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        exposure += w[i] * interval_overlap(lay.cutpoints, k,
                                            data.records[static_cast<std::size_t>(i)].time);
      if (!(exposure > 0.0))
        throw EmptyInterval("piecewise interval " + std::to_string(k) +
                            " has zero weighted exposure time");
    }
  }

  // Start at the pooled exponential solution with zero regression effects.
  double wd = 0.0, wt = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    wd += w[i] * (data.records[static_cast<std::size_t>(i)].event ? 1.0 : 0.0);
    wt += w[i] * data.records[static_cast<std::size_t>(i)].time;
  }
  const double log_rate0 = std::log(wd / wt);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(lay.dim());
  switch (family) {
    case BaselineFamily::exponential: theta[lay.nu0()] = log_rate0; break;
    case BaselineFamily::weibull: theta[lay.nu0() + 1] = log_rate0; break;
    case BaselineFamily::piecewise_exponential:
      theta.tail(lay.r).setConstant(log_rate0);
      break;
  }

  double ll;
  param_derivs(data, u, w, lay, theta, &ll, nullptr, nullptr);
  bool converged = false;
  double max_score = 0.0;
  int iter = 0;
  Eigen::VectorXd score(lay.dim());
  Eigen::MatrixXd hess(lay.dim(), lay.dim());
  for (; iter < kMaxIter; ++iter) {
    param_derivs(data, u, w, lay, theta, nullptr, &score, &hess);
    max_score = score.lpNorm<Eigen::Infinity>();
    if (max_score < kScoreTol) {
      converged = true;
      break;
    }
    const Eigen::VectorXd step = (-hess).ldlt().solve(score);
    if (!step.allFinite()) break;
    if (step.lpNorm<Eigen::Infinity>() < kStepTol * (1.0 + theta.lpNorm<Eigen::Infinity>())) {
      // A microscopic Newton step means the optimum is closer than strict
      // line-search improvement can resolve in the log likelihood's ulps.
      theta += step;
      param_derivs(data, u, w, lay, theta, &ll, &score, nullptr);
      max_score = score.lpNorm<Eigen::Infinity>();
      converged = true;
      break;
    }
    double scale = 1.0;
    bool improved = false;
    for (int hlf = 0; hlf < kMaxHalvings; ++hlf, scale *= 0.5) {
      const Eigen::VectorXd cand = theta + scale * step;
      double cand_ll;
      param_derivs(data, u, w, lay, cand, &cand_ll, nullptr, nullptr);
      if (cand_ll > ll) {
        theta = cand;
        ll = cand_ll;
        improved = true;
        break;
      }
    }
    if (theta.lpNorm<Eigen::Infinity>() > kDivergeBound)
      throw NonfiniteEstimate("parametric coefficients diverging");
    if (!improved) break;
  }
  if (!converged) {
    param_derivs(data, u, w, lay, theta, nullptr, &score, nullptr);
    max_score = score.lpNorm<Eigen::Infinity>();
    if (max_score < kScoreTol)
      converged = true;
    else
      throw NoConvergence("parametric fit did not converge");
  }

  ParametricPHFit fit;
  fit.family = family;
  fit.beta = theta[0];
  fit.gamma = theta.segment(1, lay.q);
  switch (family) {
    case BaselineFamily::exponential:
      fit.shape = 1.0;
      fit.rate = std::exp(theta[lay.nu0()]);
      break;
    case BaselineFamily::weibull:
      fit.shape = std::exp(theta[lay.nu0()]);
      fit.rate = std::exp(theta[lay.nu0() + 1]);
      break;
    case BaselineFamily::piecewise_exponential:
      fit.cutpoints = lay.cutpoints;
      fit.hazard_levels = theta.tail(lay.r).array().exp();
      break;
  }
  fit.converged = converged;
  fit.iterations = iter;
  fit.max_abs_score = max_score;
  fit.loglik = ll * wmean;
  return fit;
}

double conditional_survival(const CoxFit& fit, double t, double x, const Eigen::VectorXd& z) {
  if (z.size() != fit.gamma.size())
    throw DimensionMismatch("conditional_survival: z length != gamma length");
  return std::exp(-fit.baseline_cumhaz(t) * std::exp(fit.beta * x + fit.gamma.dot(z)));
}

double conditional_survival(const ParametricPHFit& fit, double t, double x,
                            const Eigen::VectorXd& z) {
  if (z.size() != fit.gamma.size())
    throw DimensionMismatch("conditional_survival: z length != gamma length");
  return std::exp(-fit.baseline_cumhaz(t) * std::exp(fit.beta * x + fit.gamma.dot(z)));
}

double conditional_survival(const PhModel& model, double t, double x, const Eigen::VectorXd& z) {
  return std::visit([&](const auto& fit) { return conditional_survival(fit, t, x, z); }, model);
}

}  // namespace survdr
