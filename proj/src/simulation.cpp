#include "survdr/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>

#include "stream_tags.hpp"
#include "survdr/errors.hpp"
#include "survdr/estimators.hpp"
#include "survdr/glm.hpp"
#include "survdr/threading.hpp"

namespace survdr::sim {

namespace {

constexpr double kZ975 = 1.959963984540054;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_g(double v, int precision = 10) {
  if (std::isnan(v)) return "NA";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// names and ids
// ---------------------------------------------------------------------------

std::string censoring_family_name(CensoringFamily family) {
  switch (family) {
    case CensoringFamily::independent: return "independent";
    case CensoringFamily::type_a: return "type_a";
    case CensoringFamily::type_b: return "type_b";
    case CensoringFamily::outcome_dependent: return "outcome_dependent";
  }
  return "?";
}

std::optional<CensoringFamily> censoring_family_from_name(const std::string& name) {
  if (name == "independent") return CensoringFamily::independent;
  if (name == "type_a") return CensoringFamily::type_a;
  if (name == "type_b") return CensoringFamily::type_b;
  if (name == "outcome_dependent") return CensoringFamily::outcome_dependent;
  return std::nullopt;
}

double Scenario::default_eval_time() const {
  return censoring == CensoringFamily::outcome_dependent ? dgp::kEvalFrailty : dgp::kEvalPlain;
}

std::string Scenario::id() const {
  return std::string(nonnull ? "nonnull" : "null") + "_" + censoring_family_name(censoring);
}

namespace {
std::string choice_name(SpecChoice c) {
  switch (c) {
    case SpecChoice::right: return "right";
    case SpecChoice::wrong: return "wrong";
    case SpecChoice::none: return "none";
  }
  return "?";
}

std::optional<SpecChoice> choice_from_name(const std::string& name) {
  if (name == "right") return SpecChoice::right;
  if (name == "wrong") return SpecChoice::wrong;
  if (name == "none") return SpecChoice::none;
  return std::nullopt;
}
}  // namespace

std::string ModelSpec::id() const {
  return "w=" + choice_name(weights) + ",o=" + choice_name(outcome) +
         ",c=" + choice_name(censoring_model);
}

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::iptw_cox: return "iptwcox";
    case EstimatorKind::iptw_weibull: return "iptwweibull";
    case EstimatorKind::std_cox: return "stdcox";
    case EstimatorKind::dr_binomial: return "drbin";
    case EstimatorKind::dr_survival: return "drsurv";
    case EstimatorKind::dr_pseudo: return "drpseudo";
  }
  return "?";
}

std::optional<EstimatorKind> estimator_from_name(const std::string& name) {
  if (name == "iptwcox") return EstimatorKind::iptw_cox;
  if (name == "iptwweibull") return EstimatorKind::iptw_weibull;
  if (name == "stdcox") return EstimatorKind::std_cox;
  if (name == "drbin") return EstimatorKind::dr_binomial;
  if (name == "drsurv") return EstimatorKind::dr_survival;
  if (name == "drpseudo") return EstimatorKind::dr_pseudo;
  return std::nullopt;
}

bool estimator_targets_zeta(EstimatorKind kind) {
  return kind != EstimatorKind::iptw_cox && kind != EstimatorKind::iptw_weibull;
}

// ---------------------------------------------------------------------------
// data generation
// ---------------------------------------------------------------------------

namespace {

double event_linear_predictor(double z1, double z2) {
  return dgp::kOutZ1 * z1 + dgp::kOutZ1sq * z1 * z1 + dgp::kOutZ2 * z2;
}

double propensity_logit(double z1, double z2) {
  return dgp::kPropZ1 * z1 + dgp::kPropZ1sq * z1 * z1 + dgp::kPropZ2 * z2;
}

// Inverse of the Weibull cumulative hazard: rate * t^shape * exp(lp) * v = e.
double weibull_time(double e, double lp, double v) {
  return std::pow(e / (dgp::kWeibullRate * std::exp(lp) * v), 1.0 / dgp::kWeibullShape);
}

double censoring_rate(CensoringFamily family, int x, double z1, double frailty) {
  switch (family) {
    case CensoringFamily::independent:
      return dgp::kIndepRate;
    case CensoringFamily::type_a:
      return dgp::kTypeA0 + dgp::kTypeA1 * (x == 1 ? 1.0 : 0.0) + dgp::kTypeA2 * std::abs(z1);
    case CensoringFamily::type_b:
      return dgp::kTypeBRate *
             std::exp(dgp::kTypeB1 * x + dgp::kTypeB2 * z1 + dgp::kTypeB3 * x * z1);
    case CensoringFamily::outcome_dependent:
      return dgp::kOutcomeDepRate * frailty;
  }
  return 0.0;
}

}  // namespace

SimulatedSample generate(const Scenario& scenario, RngStream& stream) {
  const double beta = scenario.beta_true();
  const bool frail = scenario.censoring == CensoringFamily::outcome_dependent;
  const double theta = dgp::kFrailtyVariance;

  SimulatedSample out;
  out.data.covariate_names = {"z1", "z2"};
  out.data.records.reserve(static_cast<std::size_t>(scenario.n));
  out.t_untreated.resize(scenario.n);
  out.t_treated.resize(scenario.n);
  out.censor_time.resize(scenario.n);

  for (int i = 0; i < scenario.n; ++i) {
    const double z1 = stream.normal();
    const double z2 = stream.bernoulli(0.5) ? 1.0 : 0.0;
    const int x = stream.bernoulli(expit(propensity_logit(z1, z2))) ? 1 : 0;
    const double v = frail ? stream.gamma(1.0 / theta, theta) : 1.0;
    const double e = stream.exponential(1.0);
    const double lp0 = event_linear_predictor(z1, z2);
    const double t0 = weibull_time(e, lp0, v);
    const double t1 = weibull_time(e, beta + lp0, v);
    const double t_event = x == 1 ? t1 : t0;
    const double c = stream.exponential(censoring_rate(scenario.censoring, x, z1, v));

    SurvivalRecord rec;
    rec.time = std::min(t_event, c);
    rec.event = t_event <= c;
    rec.exposure = x;
    rec.covariates = Eigen::Vector2d(z1, z2);
    out.data.records.push_back(std::move(rec));
    out.t_untreated[i] = t0;
    out.t_treated[i] = t1;
    out.censor_time[i] = c;
  }
  return out;
}

// ---------------------------------------------------------------------------
// truth oracle
// ---------------------------------------------------------------------------

Truth scenario_truth(const Scenario& scenario, std::size_t draws, int threads) {
  Truth truth;
  truth.psi = scenario.beta_true();
  if (!scenario.nonnull) return truth;  // zeta identically zero under the null

  const double t = scenario.resolved_eval_time();
  const double lam0 = dgp::kWeibullRate * std::pow(t, dgp::kWeibullShape);
  const bool frail = scenario.censoring == CensoringFamily::outcome_dependent;
  const double theta = dgp::kFrailtyVariance;
  const double beta = scenario.beta_true();

  constexpr std::size_t kChunks = 32;
  const std::size_t per_chunk = (draws + kChunks - 1) / kChunks;
  std::vector<double> sums(kChunks, 0.0), sumsqs(kChunks, 0.0);
  parallel_for(kChunks, threads, [&](std::size_t chunk) {
    RngStream stream = RngStream::derive(scenario.seed, detail::kStreamTruth, chunk);
    double s = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < per_chunk; ++i) {
      const double z1 = stream.normal();
      const double z2 = stream.bernoulli(0.5) ? 1.0 : 0.0;
      const double lam_base = lam0 * std::exp(event_linear_predictor(z1, z2));
      double s1, s0;
      if (frail) {
        s1 = std::pow(1.0 + theta * lam_base * std::exp(beta), -1.0 / theta);
        s0 = std::pow(1.0 + theta * lam_base, -1.0 / theta);
      } else {
        s1 = std::exp(-lam_base * std::exp(beta));
        s0 = std::exp(-lam_base);
      }
      const double d = s1 - s0;
      s += d;
      ss += d * d;
    }
    sums[chunk] = s;
    sumsqs[chunk] = ss;
  });
  const double n = static_cast<double>(per_chunk * kChunks);
  double total = 0.0, totalsq = 0.0;
  for (std::size_t c = 0; c < kChunks; ++c) {
    total += sums[c];
    totalsq += sumsqs[c];
  }
  truth.zeta = total / n;
  const double var = (totalsq - total * total / n) / (n - 1.0);
  truth.mcse = std::sqrt(var / n);
  return truth;
}

// ---------------------------------------------------------------------------
// estimator evaluation with shared fits
// ---------------------------------------------------------------------------

namespace {

template <class T>
struct Memo {
  std::optional<T> value;
  bool failed = false;

  template <class F>
  const T& get(F&& make) {
    if (failed) throw EstimatorFailed("shared model fit failed");
    if (!value) {
      try {
        value.emplace(make());
      } catch (...) {
        failed = true;
        throw;
      }
    }
    return *value;
  }
};

int choice_index(SpecChoice c) { return static_cast<int>(c); }

struct EvalContext {
  const Dataset& data;
  CensoringFamily family;
  double t;
  Eigen::MatrixXd zright, zwrong;
  Eigen::VectorXd unit_weights;

  Memo<PropensityFit> prop_memo[3];
  Memo<CensoringModel> cens_memo[3];
  Memo<CoxFit> wcox_memo[3][2];
  Memo<ParametricPHFit> wweib_memo[3][2];
  Memo<ParametricPHFit> outcome_weib_memo[2];  // unweighted, for the DR curve
  Memo<Eigen::VectorXd> pseudo_memo;

  EvalContext(const Dataset& d, CensoringFamily fam, double time) : data(d), family(fam), t(time) {
    const auto n = static_cast<Eigen::Index>(data.size());
    const Eigen::Index i1 = data.covariate_index("z1");
    const Eigen::Index i2 = data.covariate_index("z2");
    zright.resize(n, 3);
    zwrong.resize(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& z = data.records[static_cast<std::size_t>(i)].covariates;
      zright(i, 0) = z[i1];
      zright(i, 1) = z[i1] * z[i1];
      zright(i, 2) = z[i2];
      zwrong(i, 0) = z[i1];
      zwrong(i, 1) = z[i2];
    }
    unit_weights = Eigen::VectorXd::Ones(n);
  }

  const Eigen::MatrixXd& zterms(SpecChoice outcome) const {
    return outcome == SpecChoice::right ? zright : zwrong;
  }

  const PropensityFit& propensity(SpecChoice weights) {
    return prop_memo[choice_index(weights)].get([&] {
      switch (weights) {
        case SpecChoice::right: return fit_propensity(data, zright);
        case SpecChoice::wrong: return fit_propensity(data, zwrong);
        default: return fit_propensity_marginal(data);
      }
    });
  }

  const Eigen::VectorXd& fit_weights(SpecChoice weights) {
    if (weights == SpecChoice::none) return unit_weights;
    return propensity(weights).weights;
  }

  const CensoringModel& censoring(SpecChoice choice) {
    return cens_memo[choice_index(choice)].get([&] {
      if (choice == SpecChoice::none) return CensoringModel::constant_one();
      if (choice == SpecChoice::wrong) return fit_censoring_model(data, CensoringKind::pooled_km);
      switch (family) {
        case CensoringFamily::type_a:
          return fit_censoring_model(data, CensoringKind::cox, [](int x, const Eigen::VectorXd& z) {
            return Eigen::Vector2d(static_cast<double>(x), std::abs(z[0]));
          });
        case CensoringFamily::type_b:
          return fit_censoring_model(data, CensoringKind::cox, [](int x, const Eigen::VectorXd& z) {
            return Eigen::Vector3d(static_cast<double>(x), z[0], x * z[0]);
          });
        default:
          // independent or outcome-dependent: pooled KM is the paper's choice
          // (outcome-dependent censoring is noncorrectable).
          return fit_censoring_model(data, CensoringKind::pooled_km);
      }
    });
  }

  const CoxFit& weighted_cox(const ModelSpec& spec) {
    return wcox_memo[choice_index(spec.weights)][choice_index(spec.outcome)].get(
        [&] { return fit_weighted_cox(data, zterms(spec.outcome), fit_weights(spec.weights)); });
  }

  const ParametricPHFit& weighted_weibull(const ModelSpec& spec) {
    return wweib_memo[choice_index(spec.weights)][choice_index(spec.outcome)].get([&] {
      return fit_weighted_parametric_ph(data, zterms(spec.outcome), fit_weights(spec.weights),
                                        BaselineFamily::weibull);
    });
  }

  const ParametricPHFit& outcome_weibull(SpecChoice outcome) {
    return outcome_weib_memo[choice_index(outcome)].get([&] {
      return fit_weighted_parametric_ph(data, zterms(outcome), unit_weights,
                                        BaselineFamily::weibull);
    });
  }

  const Eigen::VectorXd& pseudo() {
    return pseudo_memo.get([&] { return jackknife_pseudo(data, t); });
  }

  double evaluate(EstimatorKind kind, const ModelSpec& spec) {
    switch (kind) {
      case EstimatorKind::iptw_cox:
        return weighted_cox(spec).beta;
      case EstimatorKind::iptw_weibull:
        return weighted_weibull(spec).beta;
      case EstimatorKind::std_cox:
        return standardized_survdiff(PhModel(weighted_cox(spec)), zterms(spec.outcome), t);
      case EstimatorKind::dr_binomial:
        return dr_binomial_survdiff(data, t, propensity(spec.weights),
                                    censoring(spec.censoring_model), zterms(spec.outcome));
      case EstimatorKind::dr_survival:
        return dr_survival_curve(data, t, propensity(spec.weights),
                                 censoring(spec.censoring_model),
                                 PhModel(outcome_weibull(spec.outcome)), zterms(spec.outcome))
            .zeta;
      case EstimatorKind::dr_pseudo:
        return dr_pseudo_survdiff(data, t, propensity(spec.weights), zterms(spec.outcome),
                                  pseudo());
    }
    throw InvariantViolation("unknown estimator kind");
  }
};

}  // namespace

double evaluate_estimator(EstimatorKind kind, const ModelSpec& spec, CensoringFamily family,
                          const Dataset& data, double t) {
  EvalContext ctx(data, family, t);
  return ctx.evaluate(kind, spec);
}

// ---------------------------------------------------------------------------
// replicate runner
// ---------------------------------------------------------------------------

std::vector<SummaryRow> run_simulation(const Scenario& scenario,
                                       const std::vector<ModelSpec>& specs,
                                       const std::vector<EstimatorKind>& estimators,
                                       int threads) {
  if (scenario.n < 50) throw ConfigError("scenario n must be at least 50");
  if (scenario.reps < 1) throw ConfigError("scenario reps must be at least 1");
  if (specs.empty() || estimators.empty())
    throw ConfigError("at least one spec and one estimator required");

  const double t = scenario.resolved_eval_time();
  const Truth truth = scenario_truth(scenario, 2'000'000, threads);
  const bool need_se = !scenario.nonnull;  // type I error only on null rows

  struct Cell {
    ModelSpec spec;
    EstimatorKind kind;
  };
  std::vector<Cell> cells;
  for (const auto& spec : specs)
    for (const auto kind : estimators) cells.push_back({spec, kind});
  const std::size_t nc = cells.size();
  const auto reps = static_cast<std::size_t>(scenario.reps);

  std::vector<double> est(nc * reps, kNaN);
  std::vector<double> se(nc * reps, kNaN);

  // First failure message per cell, for the abort diagnostic.
  std::vector<std::string> fail_reason(nc);
  std::mutex fail_mutex;
  const auto note_failure = [&](std::size_t c, const Error& e) {
    std::lock_guard<std::mutex> lock(fail_mutex);
    if (fail_reason[c].empty()) fail_reason[c] = e.what();
  };

  parallel_for(reps, threads, [&](std::size_t r) {
    RngStream data_stream = RngStream::derive(scenario.seed, detail::kStreamData, r);
    const SimulatedSample sample = generate(scenario, data_stream);
    {
      EvalContext ctx(sample.data, scenario.censoring, t);
      for (std::size_t c = 0; c < nc; ++c) {
        try {
          est[c * reps + r] = ctx.evaluate(cells[c].kind, cells[c].spec);
        } catch (const Error& e) {
          note_failure(c, e);
        }
      }
    }
    if (!need_se) return;

    std::vector<double> sum(nc, 0.0), sumsq(nc, 0.0);
    std::vector<int> good(nc, 0);
    const int nb = scenario.n_boot;
    for (int b = 0; b < nb; ++b) {
      RngStream boot_stream =
          RngStream::derive(scenario.seed, detail::kStreamSimBoot, r, static_cast<std::uint64_t>(b));
      const Dataset resampled = resample_rows(sample.data, boot_stream);
      EvalContext ctx(resampled, scenario.censoring, t);
      for (std::size_t c = 0; c < nc; ++c) {
        try {
          const double v = ctx.evaluate(cells[c].kind, cells[c].spec);
          sum[c] += v;
          sumsq[c] += v * v;
          ++good[c];
        } catch (const Error& e) {
          note_failure(c, e);
        }
      }
    }
    for (std::size_t c = 0; c < nc; ++c) {
      const int m = good[c];
      if ((nb - m) * 20 > nb || m < 2) continue;  // > 5% draws failed: replicate dropped
      const double mm = static_cast<double>(m);
      const double var = (sumsq[c] - sum[c] * sum[c] / mm) / (mm - 1.0);
      se[c * reps + r] = std::sqrt(std::max(var, 0.0));
    }
  });

  std::vector<SummaryRow> rows;
  rows.reserve(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    double sum = 0.0;
    std::size_t m = 0;
    std::size_t rejects = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double e = est[c * reps + r];
      if (!std::isfinite(e)) continue;
      if (need_se) {
        const double s = se[c * reps + r];
        if (!std::isfinite(s)) continue;
        if (std::abs(e) > kZ975 * s) ++rejects;
      }
      sum += e;
      ++m;
    }
    const std::size_t failed = reps - m;
    if (failed * 20 > reps || m < 2) {
      std::string msg = "cell " + cells[c].spec.id() + " / " + estimator_name(cells[c].kind) +
                        ": " + std::to_string(failed) + " of " + std::to_string(reps) +
                        " replicates failed";
      if (!fail_reason[c].empty()) msg += " (first failure: " + fail_reason[c] + ")";
      throw ReplicateFailed(msg);
    }
    const double mean = sum / static_cast<double>(m);
    double ss = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double e = est[c * reps + r];
      if (!std::isfinite(e)) continue;
      if (need_se && !std::isfinite(se[c * reps + r])) continue;
      ss += (e - mean) * (e - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(m - 1));
    const double target = estimator_targets_zeta(cells[c].kind) ? truth.zeta : truth.psi;

    SummaryRow row;
    row.scenario = scenario.id();
    row.spec = cells[c].spec.id();
    row.estimator = estimator_name(cells[c].kind);
    row.n = scenario.n;
    row.reps = static_cast<int>(m);
    row.bias = mean - target;
    row.sd = sd;
    row.t1e = need_se ? static_cast<double>(rejects) / static_cast<double>(m) : kNaN;
    row.rel_bias = target != 0.0 ? row.bias / target : kNaN;
    row.mcse = sd / std::sqrt(static_cast<double>(m));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// output
// ---------------------------------------------------------------------------

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows,
                       const std::string& provenance) {
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << "scenario,spec,estimator,n,reps,bias,sd,t1e,rel_bias,mcse\n";
  for (const auto& r : rows) {
    out << r.scenario << ",\"" << r.spec << "\"," << r.estimator << "," << r.n << "," << r.reps
        << "," << fmt_g(r.bias) << "," << fmt_g(r.sd) << "," << fmt_g(r.t1e) << ","
        << fmt_g(r.rel_bias) << "," << fmt_g(r.mcse) << "\n";
  }
}

void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows) {
  const std::vector<std::string> headers = {"scenario", "spec",     "estimator", "n",
                                            "reps",     "bias",     "sd",        "t1e",
                                            "rel_bias", "mcse"};
  std::vector<std::vector<std::string>> table;
  table.push_back(headers);
  for (const auto& r : rows) {
    table.push_back({r.scenario, r.spec, r.estimator, std::to_string(r.n),
                     std::to_string(r.reps), fmt_g(r.bias, 4), fmt_g(r.sd, 4), fmt_g(r.t1e, 4),
                     fmt_g(r.rel_bias, 4), fmt_g(r.mcse, 4)});
  }
  std::vector<std::size_t> width(headers.size(), 0);
  for (const auto& row : table)
    for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
  for (const auto& row : table) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      out << row[j];
      if (j + 1 < row.size()) out << std::string(width[j] - row[j].size() + 2, ' ');
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// config
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (const char ch : s) {
    if (ch == sep) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

[[noreturn]] void config_fail(std::size_t line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

long long parse_ll(const std::string& v, std::size_t line, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long out = std::stoll(v, &pos);
    if (pos != v.size()) config_fail(line, "invalid integer for " + key + ": '" + v + "'");
    return out;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    config_fail(line, "invalid integer for " + key + ": '" + v + "'");
  }
}

double parse_real(const std::string& v, std::size_t line, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) config_fail(line, "invalid number for " + key + ": '" + v + "'");
    return out;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    config_fail(line, "invalid number for " + key + ": '" + v + "'");
  }
}

ModelSpec parse_spec_token(const std::string& token, std::size_t line) {
  const auto parts = split(token, ':');
  if (parts.size() != 3)
    config_fail(line, "spec must be weights:outcome:censoring, got '" + token + "'");
  ModelSpec spec;
  const auto w = choice_from_name(parts[0]);
  const auto o = choice_from_name(parts[1]);
  const auto c = choice_from_name(parts[2]);
  if (!w) config_fail(line, "unknown weights choice '" + parts[0] + "'");
  if (!o || *o == SpecChoice::none) config_fail(line, "outcome choice must be right or wrong");
  if (!c) config_fail(line, "unknown censoring choice '" + parts[2] + "'");
  spec.weights = *w;
  spec.outcome = *o;
  spec.censoring_model = *c;
  return spec;
}

}  // namespace

SimulationConfig parse_simulation_config(std::istream& in) {
  SimulationConfig config;
  bool saw_n = false, saw_reps = false, saw_boot = false;
  std::string profile;

  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string lineText = trim(raw);
    if (lineText.empty()) continue;
    const auto eq = lineText.find('=');
    if (eq == std::string::npos) config_fail(lineno, "expected key = value");
    const std::string key = trim(lineText.substr(0, eq));
    const std::string value = trim(lineText.substr(eq + 1));
    if (key.empty()) config_fail(lineno, "empty key");
    if (value.empty()) config_fail(lineno, "empty value for " + key);

    if (key == "scenario") {
      const auto fam = censoring_family_from_name(value);
      if (!fam) config_fail(lineno, "unknown scenario '" + value + "'");
      config.scenario.censoring = *fam;
    } else if (key == "effect") {
      if (value == "null")
        config.scenario.nonnull = false;
      else if (value == "nonnull")
        config.scenario.nonnull = true;
      else
        config_fail(lineno, "effect must be null or nonnull");
    } else if (key == "n") {
      const long long n = parse_ll(value, lineno, key);
      if (n < 50) config_fail(lineno, "n must be at least 50");
      config.scenario.n = static_cast<int>(n);
      saw_n = true;
    } else if (key == "reps") {
      const long long v = parse_ll(value, lineno, key);
      if (v < 1) config_fail(lineno, "reps must be at least 1");
      config.scenario.reps = static_cast<int>(v);
      saw_reps = true;
    } else if (key == "boot") {
      const long long v = parse_ll(value, lineno, key);
      if (v < 2) config_fail(lineno, "boot must be at least 2");
      config.scenario.n_boot = static_cast<int>(v);
      saw_boot = true;
    } else if (key == "seed") {
      try {
        std::size_t pos = 0;
        config.scenario.seed = std::stoull(value, &pos);
        if (pos != value.size()) config_fail(lineno, "invalid seed '" + value + "'");
      } catch (const ConfigError&) {
        throw;
      } catch (...) {
        config_fail(lineno, "invalid seed '" + value + "'");
      }
    } else if (key == "eval_time") {
      const double v = parse_real(value, lineno, key);
      if (!(v > 0.0)) config_fail(lineno, "eval_time must be positive");
      config.scenario.eval_time = v;
    } else if (key == "profile") {
      if (value != "desk" && value != "full") config_fail(lineno, "profile must be desk or full");
      profile = value;
    } else if (key == "specs") {
      config.specs.clear();
      for (const auto& token : split(value, ','))
        config.specs.push_back(parse_spec_token(token, lineno));
    } else if (key == "estimators") {
      config.estimators.clear();
      for (const auto& token : split(value, ',')) {
        const auto kind = estimator_from_name(token);
        if (!kind) config_fail(lineno, "unknown estimator '" + token + "'");
        config.estimators.push_back(*kind);
      }
    } else if (key == "threads") {
      config.threads = static_cast<int>(parse_ll(value, lineno, key));
    } else {
      config_fail(lineno, "unknown key '" + key + "'");
    }
  }

  if (profile == "full") {
    if (!saw_n) config.scenario.n = 2000;
    if (!saw_reps) config.scenario.reps = 1000;
    if (!saw_boot) config.scenario.n_boot = 500;
  } else {  // desk defaults
    if (!saw_n) config.scenario.n = 1000;
    if (!saw_reps) config.scenario.reps = 500;
    if (!saw_boot) config.scenario.n_boot = 200;
  }
  if (config.specs.empty()) config.specs.push_back(ModelSpec{});
  if (config.estimators.empty())
    config.estimators = {EstimatorKind::iptw_cox,   EstimatorKind::iptw_weibull,
                         EstimatorKind::std_cox,    EstimatorKind::dr_binomial,
                         EstimatorKind::dr_survival, EstimatorKind::dr_pseudo};
  return config;
}

std::string canonical_config(const SimulationConfig& config) {
  std::ostringstream out;
  out << "scenario = " << censoring_family_name(config.scenario.censoring) << "\n";
  out << "effect = " << (config.scenario.nonnull ? "nonnull" : "null") << "\n";
  out << "n = " << config.scenario.n << "\n";
  out << "reps = " << config.scenario.reps << "\n";
  out << "boot = " << config.scenario.n_boot << "\n";
  out << "seed = " << config.scenario.seed << "\n";
  out << "eval_time = " << fmt_g(config.scenario.resolved_eval_time(), 17) << "\n";
  out << "specs = ";
  for (std::size_t i = 0; i < config.specs.size(); ++i)
    out << (i ? "," : "") << choice_name(config.specs[i].weights) << ":"
        << choice_name(config.specs[i].outcome) << ":"
        << choice_name(config.specs[i].censoring_model);
  out << "\n";
  out << "estimators = ";
  for (std::size_t i = 0; i < config.estimators.size(); ++i)
    out << (i ? "," : "") << estimator_name(config.estimators[i]);
  out << "\n";
  return out.str();
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (const unsigned char ch : text) {
    hash ^= ch;
    hash *= 1099511628211ull;
  }
  return hash;
}

}  // namespace survdr::sim
