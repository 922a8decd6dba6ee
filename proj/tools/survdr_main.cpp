// survdr: IPTW, standardization, and doubly robust survival-difference
// estimation. Subcommands: simulate, analyze, oracle, selftest.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"
#include "survdr/dataset.hpp"
#include "survdr/errors.hpp"
#include "survdr/estimators.hpp"
#include "survdr/glm.hpp"
#include "survdr/hazards.hpp"
#include "survdr/nonparam.hpp"
#include "survdr/rng.hpp"
#include "survdr/selftest.hpp"
#include "survdr/simulation.hpp"
#include "survdr/threading.hpp"

namespace {

constexpr char kVersion[] = "0.1.0";
constexpr int kExitConfig = 2;
constexpr int kExitEstimation = 3;

std::string fmt_g(double v, int precision = 10) {
  if (std::isnan(v)) return "NA";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

std::string provenance_line(std::uint64_t seed, std::uint64_t config_hash) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "survdr %s seed=%llu config=%016llx", kVersion,
                static_cast<unsigned long long>(seed),
                static_cast<unsigned long long>(config_hash));
  return buf;
}

void print_aligned(std::ostream& out, const std::vector<std::vector<std::string>>& table) {
  std::vector<std::size_t> width;
  for (const auto& row : table) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t j = 0; j < row.size(); ++j)
      width[j] = std::max(width[j], row[j].size());
  }
  for (const auto& row : table) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      out << row[j];
      if (j + 1 < row.size()) out << std::string(width[j] - row[j].size() + 2, ' ');
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// covariate terms: col, sq(col), log(col), log1p(col), sqrt(col), abs(col)
// ---------------------------------------------------------------------------

enum class TermKind { identity, square, log, log1p, sqrt, abs };

struct Term {
  std::string label;   // as written on the command line
  std::string column;  // underlying CSV column
  TermKind kind = TermKind::identity;
};

Term parse_term(const std::string& text) {
  Term term;
  term.label = text;
  const auto open = text.find('(');
  if (open == std::string::npos) {
    term.column = text;
    return term;
  }
  if (text.empty() || text.back() != ')')
    throw survdr::ConfigError("bad covariate term '" + text + "': expected func(column)");
  const std::string func = text.substr(0, open);
  term.column = text.substr(open + 1, text.size() - open - 2);
  if (term.column.empty())
    throw survdr::ConfigError("bad covariate term '" + text + "': empty column");
  if (func == "sq")
    term.kind = TermKind::square;
  else if (func == "log")
    term.kind = TermKind::log;
  else if (func == "log1p")
    term.kind = TermKind::log1p;
  else if (func == "sqrt")
    term.kind = TermKind::sqrt;
  else if (func == "abs")
    term.kind = TermKind::abs;
  else
    throw survdr::ConfigError("unknown covariate transform '" + func +
                              "' (use sq, log, log1p, sqrt, abs)");
  return term;
}

double apply_term(TermKind kind, double v) {
  switch (kind) {
    case TermKind::identity: return v;
    case TermKind::square: return v * v;
    case TermKind::log: return std::log(v);
    case TermKind::log1p: return std::log1p(v);
    case TermKind::sqrt: return std::sqrt(v);
    case TermKind::abs: return std::abs(v);
  }
  return v;
}

std::vector<std::string> base_columns(const std::vector<Term>& terms) {
  std::vector<std::string> cols;
  for (const auto& term : terms)
    if (std::find(cols.begin(), cols.end(), term.column) == cols.end())
      cols.push_back(term.column);
  return cols;
}

Eigen::MatrixXd build_design(const survdr::Dataset& data, const std::vector<Term>& terms) {
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd design(n, static_cast<Eigen::Index>(terms.size()));
  std::vector<Eigen::Index> index(terms.size());
  for (std::size_t j = 0; j < terms.size(); ++j)
    index[j] = data.covariate_index(terms[j].column);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& z = data.records[static_cast<std::size_t>(i)].covariates;
    for (std::size_t j = 0; j < terms.size(); ++j) {
      const double v = apply_term(terms[j].kind, z[index[j]]);
      if (!std::isfinite(v))
        throw survdr::NonNumericCell(static_cast<int>(i + 1), terms[j].label);
      design(i, static_cast<Eigen::Index>(j)) = v;
    }
  }
  return design;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config_path;
  std::string out_path;
  std::string scenario = "independent";
  std::string effect = "null";
  std::string profile;
  std::string specs;
  std::string estimators;
  std::int64_t n = 0, reps = 0, boot = 0;
  std::uint64_t seed = 1;
  bool seed_set = false;
  double eval_time = 0.0;
  int threads = 0;
};

survdr::sim::SimulationConfig simulate_config(const SimulateArgs& args) {
  using survdr::sim::parse_simulation_config;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw survdr::ConfigError("cannot open config file: " + args.config_path);
    return parse_simulation_config(in);
  }
  // Inline flags are serialized through the same parser so validation and
  // defaulting live in one place.
  std::ostringstream text;
  text << "scenario = " << args.scenario << "\n";
  text << "effect = " << args.effect << "\n";
  if (!args.profile.empty()) text << "profile = " << args.profile << "\n";
  if (args.n > 0) text << "n = " << args.n << "\n";
  if (args.reps > 0) text << "reps = " << args.reps << "\n";
  if (args.boot > 0) text << "boot = " << args.boot << "\n";
  if (args.seed_set) text << "seed = " << args.seed << "\n";
  if (args.eval_time > 0) text << "eval_time = " << fmt_g(args.eval_time, 17) << "\n";
  if (!args.specs.empty()) text << "specs = " << args.specs << "\n";
  if (!args.estimators.empty()) text << "estimators = " << args.estimators << "\n";
  std::istringstream in(text.str());
  return parse_simulation_config(in);
}

int run_simulate(const SimulateArgs& args) {
  namespace sim = survdr::sim;
  const sim::SimulationConfig config = simulate_config(args);
  const int threads =
      survdr::resolve_threads(args.threads > 0 ? args.threads : config.threads);
  const std::string provenance = provenance_line(
      config.scenario.seed, sim::fnv1a64(sim::canonical_config(config)));

  const std::vector<sim::SummaryRow> rows =
      sim::run_simulation(config.scenario, config.specs, config.estimators, threads);

  std::ofstream out(args.out_path, std::ios::binary);
  if (!out) throw survdr::ConfigError("cannot open output file: " + args.out_path);
  sim::write_summary_csv(out, rows, provenance);
  out.close();

  std::cout << "# " << provenance << "\n";
  sim::write_summary_table(std::cout, rows);
  std::cout << "wrote " << args.out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string data_path;
  std::string time_col = "time";
  std::string event_col = "event";
  std::string exposure_col = "exposure";
  std::vector<std::string> covariates;
  std::vector<double> times;
  std::vector<std::string> methods = {"stdcox", "drbin", "drsurv", "drpseudo"};
  std::string censoring_model;
  std::string contrast = "x1-x0";
  std::string ci = "normal";
  std::string out_path;
  std::int64_t boot = 200;
  std::uint64_t seed = 1;
  int threads = 0;
};

struct AnalyzeRow {
  std::string method;
  double t = 0.0;
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
  int n_boot = 0;
  std::string se_method = "bootstrap";
  std::string error;
};

survdr::CensoringKind censoring_kind_from_flag(const std::string& name) {
  if (name == "km") return survdr::CensoringKind::pooled_km;
  if (name == "km-strat") return survdr::CensoringKind::km_by_exposure;
  if (name == "cox") return survdr::CensoringKind::cox;
  throw survdr::ConfigError("unknown censoring model '" + name + "' (use km, km-strat, cox)");
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

int run_analyze(const AnalyzeArgs& args) {
  using namespace survdr;

  std::vector<Term> terms;
  for (const auto& text : args.covariates) terms.push_back(parse_term(text));

  for (const auto& m : args.methods)
    if (m != "stdcox" && m != "drbin" && m != "drsurv" && m != "drpseudo")
      throw ConfigError("unknown method '" + m + "' (use stdcox, drbin, drsurv, drpseudo)");
  const bool needs_censoring =
      std::find(args.methods.begin(), args.methods.end(), "drbin") != args.methods.end() ||
      std::find(args.methods.begin(), args.methods.end(), "drsurv") != args.methods.end();
  if (needs_censoring && args.censoring_model.empty())
    throw ConfigError("--censoring-model is required for drbin/drsurv (km, km-strat, cox)");
  const CensoringKind cens_kind = needs_censoring
                                      ? censoring_kind_from_flag(args.censoring_model)
                                      : CensoringKind::pooled_km;
  if (args.contrast != "x1-x0" && args.contrast != "x0-x1")
    throw ConfigError("--contrast must be x1-x0 or x0-x1");
  if (args.ci != "normal" && args.ci != "percentile")
    throw ConfigError("--ci must be normal or percentile");
  if (args.boot == 1 || args.boot < 0)
    throw ConfigError("--boot must be 0 (skip) or at least 2");
  if (args.times.empty()) throw ConfigError("--t requires at least one time");

  ColumnMap columns;
  columns.time = args.time_col;
  columns.event = args.event_col;
  columns.exposure = args.exposure_col;
  columns.covariates = base_columns(terms);
  const Dataset data = load_csv(args.data_path, columns);

  // Build the design once up front so bad cells (e.g. log of a nonpositive
  // value) surface as a data error instead of one failure per method row.
  build_design(data, terms);

  // The censoring Cox design mirrors the analysis covariates.
  std::vector<Eigen::Index> term_index(terms.size());
  for (std::size_t j = 0; j < terms.size(); ++j)
    term_index[j] = data.covariate_index(terms[j].column);
  const CensoringRowBuilder cens_rows = [&terms, term_index](int x, const Eigen::VectorXd& z) {
    Eigen::VectorXd row(1 + static_cast<Eigen::Index>(terms.size()));
    row[0] = x;
    for (std::size_t j = 0; j < terms.size(); ++j)
      row[1 + static_cast<Eigen::Index>(j)] = apply_term(terms[j].kind, z[term_index[j]]);
    return row;
  };

  const auto estimator_for = [&](const std::string& method, double t) {
    return [&terms, &cens_rows, method, cens_kind, t](const Dataset& d) -> double {
      if (!d.has_both_exposure_levels())
        throw EstimatorFailed("both exposure levels required");
      const Eigen::MatrixXd zdesign = build_design(d, terms);
      const PropensityFit prop = fit_propensity(d, zdesign);
      if (method == "stdcox") {
        const CoxFit fit = fit_weighted_cox(d, zdesign, prop.weights);
        return standardized_survdiff(fit, zdesign, t);
      }
      if (method == "drbin") {
        const CensoringModel cens = fit_censoring_model(d, cens_kind, cens_rows);
        return dr_binomial_survdiff(d, t, prop, cens, zdesign);
      }
      if (method == "drsurv") {
        const CensoringModel cens = fit_censoring_model(d, cens_kind, cens_rows);
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(zdesign.rows());
        const PhModel outcome =
            fit_weighted_parametric_ph(d, zdesign, ones, BaselineFamily::weibull);
        return dr_survival_curve(d, t, prop, cens, outcome, zdesign).zeta;
      }
      return dr_pseudo_survdiff(d, t, prop, zdesign);
    };
  };

  const int threads = resolve_threads(args.threads);
  std::vector<AnalyzeRow> rows;
  bool any_failed = false;
  for (const auto& method : args.methods) {
    for (const double t : args.times) {
      AnalyzeRow row;
      row.method = method;
      row.t = t;
      try {
        const auto estimator = estimator_for(method, t);
        row.estimate = estimator(data);
        if (args.boot >= 2) {
          const BootstrapResult bt = bootstrap(estimator, data, static_cast<int>(args.boot),
                                               args.seed, row.estimate, threads);
          row.se = bt.se;
          row.n_boot = bt.n_draws - bt.n_failed;
          if (args.ci == "normal") {
            row.lo = bt.normal_lower;
            row.hi = bt.normal_upper;
          } else {
            row.lo = bt.percentile_lower;
            row.hi = bt.percentile_upper;
          }
        } else {
          row.se_method = "none";
        }
        if (args.contrast == "x0-x1") {
          row.estimate = -row.estimate;
          const double lo = row.lo;
          row.lo = -row.hi;
          row.hi = -lo;
        }
      } catch (const Error& e) {
        row.error = e.what();
        any_failed = true;
      }
      rows.push_back(row);
    }
  }

  // Settings hash: everything that changes the numbers except the data bytes.
  std::ostringstream canon;
  canon << "analyze\n"
        << "time = " << args.time_col << "\nevent = " << args.event_col
        << "\nexposure = " << args.exposure_col << "\ncovariates = ";
  for (std::size_t j = 0; j < terms.size(); ++j) canon << (j ? "," : "") << terms[j].label;
  canon << "\nt = ";
  for (std::size_t j = 0; j < args.times.size(); ++j)
    canon << (j ? "," : "") << fmt_g(args.times[j], 17);
  canon << "\nmethods = ";
  for (std::size_t j = 0; j < args.methods.size(); ++j)
    canon << (j ? "," : "") << args.methods[j];
  canon << "\ncensoring = " << (needs_censoring ? args.censoring_model : "-")
        << "\nboot = " << args.boot << "\nseed = " << args.seed
        << "\ncontrast = " << args.contrast << "\nci = " << args.ci << "\n";
  const std::string provenance = provenance_line(args.seed, sim::fnv1a64(canon.str()));

  std::vector<std::vector<std::string>> table;
  table.push_back({"method", "t", "estimate", "se", "ci_lower", "ci_upper", "boot", "note"});
  for (const auto& r : rows)
    table.push_back({r.method, fmt_g(r.t, 6), fmt_g(r.estimate, 6), fmt_g(r.se, 6),
                     fmt_g(r.lo, 6), fmt_g(r.hi, 6), std::to_string(r.n_boot),
                     r.error.empty() ? (args.boot >= 2 ? "" : "no bootstrap") : r.error});
  std::cout << "# " << provenance << "\n";
  print_aligned(std::cout, table);

  if (!args.out_path.empty()) {
    std::ofstream out(args.out_path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + args.out_path);
    out << "# " << provenance << "\n";
    out << "method,t,estimate,se,ci_lower,ci_upper,boot,se_method,error\n";
    for (const auto& r : rows)
      out << r.method << "," << fmt_g(r.t) << "," << fmt_g(r.estimate) << "," << fmt_g(r.se)
          << "," << fmt_g(r.lo) << "," << fmt_g(r.hi) << "," << r.n_boot << "," << r.se_method
          << "," << csv_quote(r.error) << "\n";
  }
  return any_failed ? kExitEstimation : 0;
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

struct OracleArgs {
  std::string scenario = "independent";
  std::string effect = "null";
  double eval_time = 0.0;
  std::uint64_t seed = 1;
  std::int64_t draws = 2'000'000;
  int threads = 0;
};

int run_oracle(const OracleArgs& args) {
  namespace sim = survdr::sim;
  sim::Scenario scenario;
  const auto family = sim::censoring_family_from_name(args.scenario);
  if (!family) throw survdr::ConfigError("unknown scenario '" + args.scenario + "'");
  scenario.censoring = *family;
  if (args.effect == "null")
    scenario.nonnull = false;
  else if (args.effect == "nonnull")
    scenario.nonnull = true;
  else
    throw survdr::ConfigError("--effect must be null or nonnull");
  scenario.seed = args.seed;
  if (args.eval_time > 0) scenario.eval_time = args.eval_time;
  if (args.draws < 1000) throw survdr::ConfigError("--draws must be at least 1000");

  const int threads = survdr::resolve_threads(args.threads);
  const sim::Truth truth =
      sim::scenario_truth(scenario, static_cast<std::size_t>(args.draws), threads);

  std::ostringstream canon;
  canon << "oracle\nscenario = " << scenario.id()
        << "\neval_time = " << fmt_g(scenario.resolved_eval_time(), 17)
        << "\ndraws = " << args.draws << "\nseed = " << args.seed << "\n";
  std::cout << "# " << provenance_line(args.seed, sim::fnv1a64(canon.str())) << "\n";
  std::cout << "scenario   = " << scenario.id() << "\n";
  std::cout << "eval_time  = " << fmt_g(scenario.resolved_eval_time(), 6) << "\n";
  std::cout << "psi_true   = " << fmt_g(truth.psi) << "\n";
  std::cout << "zeta_true  = " << fmt_g(truth.zeta) << "\n";
  std::cout << "mcse       = " << fmt_g(truth.mcse) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// selftest
// ---------------------------------------------------------------------------

int run_selftest(std::uint64_t seed) {
  namespace st = survdr::selftest;
  const std::vector<std::pair<std::string, std::vector<st::CheckResult>>> suites = {
      {"score gradients", st::score_gradient_suite(seed)},
      {"oracle equivalence", st::oracle_equivalence_suite(seed)},
      {"exact identities", st::identity_suite()}};
  bool all = true;
  for (const auto& [name, results] : suites) {
    std::cout << "== " << name << "\n";
    for (const auto& r : results) {
      std::cout << (r.pass ? "  ok   " : "  FAIL ") << r.name;
      if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
      std::cout << "\n";
      all = all && r.pass;
    }
  }
  std::cout << (all ? "selftest passed" : "selftest FAILED") << "\n";
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"survival-difference estimation with IPTW, standardization, and "
               "doubly robust estimators"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("survdr ") + kVersion);

  SimulateArgs sim_args;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "run simulation scenarios");
  sim_cmd->add_option("--config", sim_args.config_path, "config file (key = value)");
  sim_cmd->add_option("--out", sim_args.out_path, "output CSV path")->required();
  sim_cmd->add_option("--scenario", sim_args.scenario,
                      "independent, type_a, type_b, outcome_dependent");
  sim_cmd->add_option("--effect", sim_args.effect, "null or nonnull");
  sim_cmd->add_option("--profile", sim_args.profile, "desk or full");
  sim_cmd->add_option("--n", sim_args.n, "subjects per replicate");
  sim_cmd->add_option("--reps", sim_args.reps, "number of replicates");
  sim_cmd->add_option("--boot", sim_args.boot, "bootstrap draws per replicate");
  sim_cmd->add_option("--seed", sim_args.seed, "base RNG seed");
  sim_cmd->add_option("--eval-time", sim_args.eval_time, "evaluation time for zeta");
  sim_cmd->add_option("--specs", sim_args.specs,
                      "comma list of weights:outcome:censoring choices");
  sim_cmd->add_option("--estimators", sim_args.estimators, "comma list of estimators");
  sim_cmd->add_option("--threads", sim_args.threads, "worker threads (0 = auto)");

  AnalyzeArgs an_args;
  CLI::App* an_cmd = app.add_subcommand("analyze", "estimate zeta(t) on a CSV dataset");
  an_cmd->add_option("--data", an_args.data_path, "input CSV")->required();
  an_cmd->add_option("--time-col", an_args.time_col, "time column");
  an_cmd->add_option("--event-col", an_args.event_col, "event indicator column");
  an_cmd->add_option("--exposure-col", an_args.exposure_col, "exposure indicator column");
  an_cmd->add_option("--covariates", an_args.covariates,
                     "covariate terms: col, sq(col), log(col), log1p(col), sqrt(col), abs(col)")
      ->delimiter(',');
  an_cmd->add_option("--t", an_args.times, "evaluation times")->delimiter(',')->required();
  an_cmd->add_option("--methods", an_args.methods, "stdcox, drbin, drsurv, drpseudo")
      ->delimiter(',');
  an_cmd->add_option("--censoring-model", an_args.censoring_model,
                     "km, km-strat, or cox (required for drbin/drsurv)");
  an_cmd->add_option("--boot", an_args.boot, "bootstrap draws (0 skips SEs)");
  an_cmd->add_option("--seed", an_args.seed, "bootstrap seed");
  an_cmd->add_option("--contrast", an_args.contrast, "x1-x0 (default) or x0-x1");
  an_cmd->add_option("--ci", an_args.ci, "normal (default) or percentile");
  an_cmd->add_option("--out", an_args.out_path, "also write rows as CSV");
  an_cmd->add_option("--threads", an_args.threads, "worker threads (0 = auto)");

  OracleArgs or_args;
  CLI::App* or_cmd = app.add_subcommand("oracle", "print scenario truth values");
  or_cmd->add_option("--scenario", or_args.scenario,
                     "independent, type_a, type_b, outcome_dependent");
  or_cmd->add_option("--effect", or_args.effect, "null or nonnull");
  or_cmd->add_option("--eval-time", or_args.eval_time, "evaluation time for zeta");
  or_cmd->add_option("--seed", or_args.seed, "RNG seed");
  or_cmd->add_option("--draws", or_args.draws, "Monte Carlo draws");
  or_cmd->add_option("--threads", or_args.threads, "worker threads (0 = auto)");

  std::uint64_t selftest_seed = 2026;
  CLI::App* st_cmd = app.add_subcommand("selftest", "run the invariant suites");
  st_cmd->add_option("--seed", selftest_seed, "RNG seed for randomized checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (sim_cmd->parsed()) {
      sim_args.seed_set = sim_cmd->count("--seed") > 0;
      return run_simulate(sim_args);
    }
    if (an_cmd->parsed()) return run_analyze(an_args);
    if (or_cmd->parsed()) return run_oracle(or_args);
    return run_selftest(selftest_seed);
  } catch (const survdr::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const survdr::CsvParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const survdr::MissingColumn& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const survdr::NonNumericCell& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const survdr::NonPositiveTime& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const survdr::InvalidIndicator& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const survdr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEstimation;
  }
}
