#include "survdr/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "survdr/errors.hpp"

namespace survdr {

namespace {

constexpr double kPositivityEps = 1e-6;
constexpr double kMinCensoringSurvival = 1e-6;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// [1 | zdesign] with dimension checks.
Eigen::MatrixXd intercept_design(const Dataset& data, const Eigen::MatrixXd& zdesign) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index q = zdesign.rows() == 0 ? 0 : zdesign.cols();
  if (q > 0 && zdesign.rows() != n)
    throw DimensionMismatch("estimators: zdesign rows != dataset size");
  Eigen::MatrixXd design(n, 1 + q);
  design.col(0).setOnes();
  if (q > 0) design.rightCols(q) = zdesign;
  return design;
}

// [1 | X | zdesign] for outcome regressions.
Eigen::MatrixXd outcome_design(const Dataset& data, const Eigen::MatrixXd& zdesign) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index q = zdesign.rows() == 0 ? 0 : zdesign.cols();
  if (q > 0 && zdesign.rows() != n)
    throw DimensionMismatch("estimators: zdesign rows != dataset size");
  Eigen::MatrixXd design(n, 2 + q);
  design.col(0).setOnes();
  design.col(1) = data.exposures();
  if (q > 0) design.rightCols(q) = zdesign;
  return design;
}

// [1 | X | z | X*z]: the binomial outcome model lets the covariate effects
// differ by arm, which keeps the logistic approximation honest per arm instead
// of forcing parallel logits across arms.
Eigen::MatrixXd interacted_outcome_design(const Dataset& data, const Eigen::MatrixXd& zdesign) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index q = zdesign.rows() == 0 ? 0 : zdesign.cols();
  if (q > 0 && zdesign.rows() != n)
    throw DimensionMismatch("estimators: zdesign rows != dataset size");
  Eigen::MatrixXd design(n, 2 + 2 * q);
  design.col(0).setOnes();
  design.col(1) = data.exposures();
  if (q > 0) {
    design.middleCols(2, q) = zdesign;
    design.rightCols(q) = zdesign.array().colwise() * design.col(1).array();
  }
  return design;
}

PropensityFit propensity_from_glm(const Dataset& data, const Eigen::MatrixXd& design,
                                  GlmFit glm) {
  const auto n = static_cast<Eigen::Index>(data.size());
  PropensityFit fit;
  fit.scores.resize(n);
  fit.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double g = predict_probability(glm, design.row(i).transpose());
    if (!(g > kPositivityEps) || !(g < 1.0 - kPositivityEps)) throw PositivityViolation(i, g);
    fit.scores[i] = g;
    const int x = data.records[static_cast<std::size_t>(i)].exposure;
    fit.weights[i] = x == 1 ? 1.0 / g : 1.0 / (1.0 - g);
  }
  fit.glm = std::move(glm);
  return fit;
}

}  // namespace

PropensityFit fit_propensity(const Dataset& data, const Eigen::MatrixXd& zdesign) {
  if (!data.has_both_exposure_levels())
    throw InvariantViolation("both exposure levels required");
  const Eigen::MatrixXd design = intercept_design(data, zdesign);
  const auto n = static_cast<Eigen::Index>(data.size());
  GlmFit glm = fit_weighted_logistic(design, data.exposures(), Eigen::VectorXd::Ones(n));
  return propensity_from_glm(data, design, std::move(glm));
}

PropensityFit fit_propensity_marginal(const Dataset& data) {
  if (!data.has_both_exposure_levels())
    throw InvariantViolation("both exposure levels required");
  const Eigen::MatrixXd design = intercept_design(data, Eigen::MatrixXd());
  const auto n = static_cast<Eigen::Index>(data.size());
  GlmFit glm = fit_weighted_logistic(design, data.exposures(), Eigen::VectorXd::Ones(n));
  return propensity_from_glm(data, design, std::move(glm));
}

double standardized_survdiff(const PhModel& fit, const Eigen::MatrixXd& zdesign, double t) {
  if (t <= 0.0) return 0.0;
  const Eigen::Index n = zdesign.rows();
  if (n == 0) throw DimensionMismatch("standardized_survdiff: empty covariate design");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd z = zdesign.row(i).transpose();
    acc += conditional_survival(fit, t, 1.0, z) - conditional_survival(fit, t, 0.0, z);
  }
  return acc / static_cast<double>(n);
}

double aipw_event_probability(const Eigen::VectorXd& x_match, const Eigen::VectorXd& gbar,
                              const Eigen::VectorXd& ipcw, const Eigen::VectorXd& event_by_t,
                              const Eigen::VectorXd& qpred) {
  const Eigen::Index n = x_match.size();
  if (gbar.size() != n || ipcw.size() != n || event_by_t.size() != n || qpred.size() != n)
    throw DimensionMismatch("aipw_event_probability: component length mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    acc += x_match[i] / gbar[i] * ipcw[i] * (event_by_t[i] - qpred[i]) + qpred[i];
  return acc / static_cast<double>(n);
}

double dr_binomial_survdiff(const Dataset& data, double t, const PropensityFit& propensity,
                            const CensoringModel& censoring, const Eigen::MatrixXd& zdesign) {
  if (t <= 0.0) return 0.0;
  if (!data.has_both_exposure_levels())
    throw InvariantViolation("both exposure levels required");
  const auto n = static_cast<Eigen::Index>(data.size());
  if (propensity.scores.size() != n)
    throw DimensionMismatch("dr_binomial: propensity length != dataset size");

  const Eigen::VectorXd ipcw = ipcw_weights(data, censoring, t);
  Eigen::VectorXd event_by_t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = data.records[static_cast<std::size_t>(i)];
    event_by_t[i] = (rec.event && rec.time <= t) ? 1.0 : 0.0;
  }

  // Outcome regression on subjects with the event by t or still observed at t,
  // i.e. exactly those with a positive IPCW weight.
  const Eigen::MatrixXd full_design = interacted_outcome_design(data, zdesign);
  std::vector<Eigen::Index> subset;
  for (Eigen::Index i = 0; i < n; ++i)
    if (ipcw[i] > 0.0) subset.push_back(i);
  if (subset.empty()) throw NoEvents("dr_binomial: no usable subjects at time t");
  Eigen::MatrixXd sub_design(static_cast<Eigen::Index>(subset.size()), full_design.cols());
  Eigen::VectorXd sub_response(static_cast<Eigen::Index>(subset.size()));
  Eigen::VectorXd sub_weights(static_cast<Eigen::Index>(subset.size()));
  for (std::size_t k = 0; k < subset.size(); ++k) {
    sub_design.row(static_cast<Eigen::Index>(k)) = full_design.row(subset[k]);
    sub_response[static_cast<Eigen::Index>(k)] = event_by_t[subset[k]];
    sub_weights[static_cast<Eigen::Index>(k)] = ipcw[subset[k]];
  }
  const GlmFit outcome = fit_weighted_logistic(sub_design, sub_response, sub_weights);

  // Counterfactual predictions over the full sample: set the exposure column
  // and the interaction block to the requested arm.
  const Eigen::Index q = zdesign.rows() == 0 ? 0 : zdesign.cols();
  Eigen::VectorXd q1(n), q0(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd row = full_design.row(i).transpose();
    row[1] = 1.0;
    if (q > 0) row.tail(q) = zdesign.row(i).transpose();
    q1[i] = predict_probability(outcome, row);
    row[1] = 0.0;
    if (q > 0) row.tail(q).setZero();
    q0[i] = predict_probability(outcome, row);
  }

  const Eigen::VectorXd x = data.exposures();
  const Eigen::VectorXd match1 = x;
  const Eigen::VectorXd match0 = Eigen::VectorXd::Ones(n) - x;
  const Eigen::VectorXd gbar1 = propensity.scores;
  const Eigen::VectorXd gbar0 = Eigen::VectorXd::Ones(n) - propensity.scores;

  const double f1 = clamp01(aipw_event_probability(match1, gbar1, ipcw, event_by_t, q1));
  const double f0 = clamp01(aipw_event_probability(match0, gbar0, ipcw, event_by_t, q0));
  return (1.0 - f1) - (1.0 - f0);
}

double dr_pseudo_contrast(const Eigen::VectorXd& exposures, const Eigen::VectorXd& scores,
                          const Eigen::VectorXd& pseudo, const Eigen::VectorXd& v1,
                          const Eigen::VectorXd& v0) {
  const Eigen::Index n = exposures.size();
  if (scores.size() != n || pseudo.size() != n || v1.size() != n || v0.size() != n)
    throw DimensionMismatch("dr_pseudo_contrast: component length mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = exposures[i];
    const double g = scores[i];
    acc += (x * pseudo[i] - (x - g) * v1[i]) / g -
           ((1.0 - x) * pseudo[i] + (x - g) * v0[i]) / (1.0 - g);
  }
  return acc / static_cast<double>(n);
}

double dr_pseudo_survdiff(const Dataset& data, double t, const PropensityFit& propensity,
                          const Eigen::MatrixXd& zdesign) {
  if (t <= 0.0) return 0.0;
  return dr_pseudo_survdiff(data, t, propensity, zdesign, jackknife_pseudo(data, t));
}

double dr_pseudo_survdiff(const Dataset& data, double t, const PropensityFit& propensity,
                          const Eigen::MatrixXd& zdesign, const Eigen::VectorXd& pseudo) {
  if (t <= 0.0) return 0.0;
  if (!data.has_both_exposure_levels())
    throw InvariantViolation("both exposure levels required");
  const auto n = static_cast<Eigen::Index>(data.size());
  if (propensity.scores.size() != n || pseudo.size() != n)
    throw DimensionMismatch("dr_pseudo: propensity/pseudo length != dataset size");

  const Eigen::MatrixXd design = outcome_design(data, zdesign);
  const GlmFit vfit = fit_cloglog_pseudo(design, pseudo);

  Eigen::VectorXd v1(n), v0(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd row = design.row(i).transpose();
    row[1] = 1.0;
    v1[i] = predict_probability(vfit, row);
    row[1] = 0.0;
    v0[i] = predict_probability(vfit, row);
  }
  const double zeta =
      dr_pseudo_contrast(data.exposures(), propensity.scores, pseudo, v1, v0);
  return std::clamp(zeta, -1.0, 1.0);
}

namespace {

// Shared skeleton of the DR survival-curve estimator. The per-subject
// censoring-martingale sum
//   mart_i = sum_{u_k <= min(t, T_i)} [dN_i(u_k) - dLam_i(u_k)]
//            / (G_i(u_k-) H(u_k, z_i, X_i))
// uses the subject's own exposure throughout and is therefore shared by both
// target arms. Each arm then averages
//   1{X_i=x} 1{T_i>t} / (gbar_i G_i(t)) - (1{X_i=x} - gbar_i)/gbar_i
//   * H(t, z_i, x) * (1 + mart_i).
struct DrSurvivalParts {
  Eigen::VectorXd mart;     // per-subject martingale sum
  Eigen::VectorXd g_at_t;   // G_c(t | X_i, z_i), only valid where needed
  Eigen::VectorXd h1_at_t;  // H(t, z_i, 1)
  Eigen::VectorXd h0_at_t;  // H(t, z_i, 0)
};

DrSurvivalEstimate assemble_dr_survival(const Dataset& data, double t,
                                        const PropensityFit& propensity,
                                        const DrSurvivalParts& parts) {
  const auto n = static_cast<Eigen::Index>(data.size());
  double s1 = 0.0, s0 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = data.records[static_cast<std::size_t>(i)];
    const double g = propensity.scores[i];
    for (int x = 0; x < 2; ++x) {
      const double gbar = x == 1 ? g : 1.0 - g;
      const double match = rec.exposure == x ? 1.0 : 0.0;
      double ipw = 0.0;
      if (match == 1.0 && rec.time > t) {
        const double gc = parts.g_at_t[i];
        if (gc < kMinCensoringSurvival) throw ZeroCensoringSurvival(i, gc);
        ipw = 1.0 / (gbar * gc);
      }
      const double h = x == 1 ? parts.h1_at_t[i] : parts.h0_at_t[i];
      const double aug = (match - gbar) / gbar * h;
      const double term = ipw - aug * (1.0 + parts.mart[i]);
      (x == 1 ? s1 : s0) += term;
    }
  }
  DrSurvivalEstimate est;
  est.s1 = clamp01(s1 / static_cast<double>(n));
  est.s0 = clamp01(s0 / static_cast<double>(n));
  est.zeta = est.s1 - est.s0;
  return est;
}

void validate_dr_survival_inputs(const Dataset& data, const PropensityFit& propensity,
                                 const Eigen::MatrixXd& zdesign) {
  if (!data.has_both_exposure_levels())
    throw InvariantViolation("both exposure levels required");
  const auto n = static_cast<Eigen::Index>(data.size());
  if (propensity.scores.size() != n)
    throw DimensionMismatch("dr_survival: propensity length != dataset size");
  const Eigen::Index q = zdesign.rows() == 0 ? 0 : zdesign.cols();
  if (q > 0 && zdesign.rows() != n)
    throw DimensionMismatch("dr_survival: zdesign rows != dataset size");
}

Eigen::VectorXd zrow_of(const Eigen::MatrixXd& zdesign, Eigen::Index i) {
  if (zdesign.rows() == 0) return Eigen::VectorXd();
  return zdesign.row(i).transpose();
}

}  // namespace

DrSurvivalEstimate dr_survival_curve_generic(const Dataset& data, double t,
                                             const PropensityFit& propensity,
                                             const CensoringModel& censoring,
                                             const CondSurvFn& cond_surv,
                                             const Eigen::MatrixXd& zdesign) {
  if (t <= 0.0) return DrSurvivalEstimate{1.0, 1.0, 0.0};
  validate_dr_survival_inputs(data, propensity, zdesign);
  const auto n = static_cast<Eigen::Index>(data.size());

  DrSurvivalParts parts;
  parts.mart.setZero(n);
  parts.g_at_t.setZero(n);
  parts.h1_at_t.resize(n);
  parts.h0_at_t.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = data.records[static_cast<std::size_t>(i)];
    const Eigen::VectorXd z = zrow_of(zdesign, i);
    parts.h1_at_t[i] = cond_surv(t, 1.0, z);
    parts.h0_at_t[i] = cond_surv(t, 0.0, z);
    if (rec.time > t) parts.g_at_t[i] = censoring.survival(t, rec.exposure, rec.covariates);

    const double horizon = std::min(t, rec.time);
    double mart = 0.0;
    for (const double u : censoring.jump_times(rec.exposure)) {
      if (u > horizon) break;
      const double gleft = censoring.survival_left(u, rec.exposure, rec.covariates);
      const double gval = censoring.survival(u, rec.exposure, rec.covariates);
      if (gleft < kMinCensoringSurvival) throw ZeroCensoringSurvival(i, gleft);
      const double dlam = (gleft - gval) / gleft;
      const double dn = (!rec.event && rec.time == u) ? 1.0 : 0.0;
      const double h = cond_surv(u, static_cast<double>(rec.exposure), z);
      mart += (dn - dlam) / (gleft * h);
    }
    parts.mart[i] = mart;
  }
  return assemble_dr_survival(data, t, propensity, parts);
}

DrSurvivalEstimate dr_survival_curve(const Dataset& data, double t,
                                     const PropensityFit& propensity,
                                     const CensoringModel& censoring, const PhModel& outcome,
                                     const Eigen::MatrixXd& zdesign) {
  if (t <= 0.0) return DrSurvivalEstimate{1.0, 1.0, 0.0};
  validate_dr_survival_inputs(data, propensity, zdesign);
  const auto n = static_cast<Eigen::Index>(data.size());

  // Outcome-model pieces: eta_i and the baseline cumulative hazard evaluated
  // on each arm's censoring-jump grid (truncated at t).
  double beta = 0.0;
  Eigen::VectorXd gamma;
  std::function<double(double)> cumhaz0;
  if (const auto* cox = std::get_if<CoxFit>(&outcome)) {
    beta = cox->beta;
    gamma = cox->gamma;
    cumhaz0 = [cox](double u) { return cox->baseline_cumhaz(u); };
  } else {
    const auto& par = std::get<ParametricPHFit>(outcome);
    beta = par.beta;
    gamma = par.gamma;
    cumhaz0 = [&par](double u) { return par.baseline_cumhaz(u); };
  }
  const Eigen::Index q = zdesign.rows() == 0 ? 0 : zdesign.cols();
  if (gamma.size() != q) throw DimensionMismatch("dr_survival: zdesign cols != outcome gamma");
  Eigen::VectorXd zeta_lin = Eigen::VectorXd::Zero(n);  // gamma' z_i
  if (q > 0) zeta_lin = zdesign * gamma;

  // Per-arm grids.
  struct ArmGrid {
    std::vector<double> u;       // jump times <= t
    Eigen::VectorXd l0_outcome;  // outcome baseline cumhaz at u
    Eigen::VectorXd inv_gleft;   // KM kinds: 1 / G(u-)
    Eigen::VectorXd dlam;        // KM kinds: (G(u-) - G(u)) / G(u-)
    Eigen::VectorXd lc_left;     // cox kind: censoring baseline cumhaz at u-
    Eigen::VectorXd lc_jump;     // cox kind: increment at u
  };
  ArmGrid grids[2];
  const bool cens_cox = !censoring.trivial && censoring.kind == CensoringKind::cox;
  for (int arm = 0; arm < 2; ++arm) {
    ArmGrid& gr = grids[arm];
    for (const double u : censoring.jump_times(arm)) {
      if (u > t) break;
      gr.u.push_back(u);
    }
    const auto m = static_cast<Eigen::Index>(gr.u.size());
    gr.l0_outcome.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) gr.l0_outcome[k] = cumhaz0(gr.u[k]);
    if (cens_cox) {
      gr.lc_left.resize(m);
      gr.lc_jump.resize(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        const double left = censoring.cox_basecumhaz.left_limit(gr.u[k]);
        gr.lc_left[k] = left;
        gr.lc_jump[k] = censoring.cox_basecumhaz(gr.u[k]) - left;
      }
    } else if (!censoring.trivial) {
      const StepSurvival& curve =
          censoring.kind == CensoringKind::pooled_km ? censoring.pooled : censoring.by_arm[arm];
      gr.inv_gleft.resize(m);
      gr.dlam.resize(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        const double gleft = curve.left_limit(gr.u[k]);
        const double gval = curve(gr.u[k]);
        gr.inv_gleft[k] = 1.0 / gleft;
        gr.dlam[k] = gleft > 0.0 ? (gleft - gval) / gleft : 0.0;
      }
    }
    if (censoring.kind == CensoringKind::pooled_km || censoring.trivial || cens_cox) {
      grids[1] = grids[0];
      break;  // grids identical across arms
    }
  }

  DrSurvivalParts parts;
  parts.mart.setZero(n);
  parts.g_at_t.setZero(n);
  parts.h1_at_t.resize(n);
  parts.h0_at_t.resize(n);
  const double l0_t = cumhaz0(t);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = data.records[static_cast<std::size_t>(i)];
    parts.h1_at_t[i] = std::exp(-l0_t * std::exp(beta + zeta_lin[i]));
    parts.h0_at_t[i] = std::exp(-l0_t * std::exp(zeta_lin[i]));
    if (rec.time > t) parts.g_at_t[i] = censoring.survival(t, rec.exposure, rec.covariates);

    const ArmGrid& gr = grids[rec.exposure == 1 ? 1 : 0];
    const double horizon = std::min(t, rec.time);
    const auto m = static_cast<Eigen::Index>(
        std::upper_bound(gr.u.begin(), gr.u.end(), horizon) - gr.u.begin());
    if (m == 0) continue;

    const double a_event = std::exp(beta * rec.exposure + zeta_lin[i]);
    // 1/H(u_k, z_i, X_i) over the subject's jump grid
    const Eigen::ArrayXd hinv = (gr.l0_outcome.head(m).array() * a_event).exp();
    Eigen::ArrayXd weight;  // 1 / G_i(u_k-)
    Eigen::ArrayXd dlam;
    if (cens_cox) {
      const double a_cens =
          std::exp(censoring.cox_linear_predictor(rec.exposure, rec.covariates));
      weight = (gr.lc_left.head(m).array() * a_cens).exp();
      dlam = 1.0 - (-gr.lc_jump.head(m).array() * a_cens).exp();
    } else if (!censoring.trivial) {
      weight = gr.inv_gleft.head(m);
      dlam = gr.dlam.head(m);
    } else {
      weight = Eigen::ArrayXd::Ones(m);
      dlam = Eigen::ArrayXd::Zero(m);
    }
    // every used 1/G(u-) is a needed denominator
    const double max_weight = weight.maxCoeff();
    if (max_weight > 1.0 / kMinCensoringSurvival)
      throw ZeroCensoringSurvival(static_cast<std::size_t>(i), 1.0 / max_weight);
    double mart = -(dlam * weight * hinv).sum();
    if (!rec.event && rec.time <= t) {
      // dN jump at the subject's own censoring time
      const auto it = std::lower_bound(gr.u.begin(), gr.u.end(), rec.time);
      if (it != gr.u.end() && *it == rec.time) {
        const auto k = static_cast<Eigen::Index>(it - gr.u.begin());
        mart += weight[k] * hinv[k];
      }
    }
    parts.mart[i] = mart;
  }
  return assemble_dr_survival(data, t, propensity, parts);
}

}  // namespace survdr
