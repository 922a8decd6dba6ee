#include <algorithm>
#include <cmath>
#include <vector>

#include "stream_tags.hpp"
#include "survdr/errors.hpp"
#include "survdr/estimators.hpp"
#include "survdr/rng.hpp"
#include "survdr/threading.hpp"

namespace survdr {

namespace {

// Linear-interpolation empirical quantile on a sorted vector.
double sorted_quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace

Dataset resample_rows(const Dataset& data, RngStream& stream) {
  const std::size_t n = data.size();
  Dataset out;
  out.covariate_names = data.covariate_names;
  out.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.records.push_back(data.records[stream.uniform_int(static_cast<std::uint64_t>(n))]);
  return out;
}

BootstrapResult bootstrap(const std::function<double(const Dataset&)>& estimator,
                          const Dataset& data, int n_boot, std::uint64_t seed,
                          double point_estimate, int threads) {
  if (n_boot < 2) throw std::invalid_argument("bootstrap: need at least 2 replicates");
  if (data.records.empty()) throw InvariantViolation("bootstrap: empty dataset");

  std::vector<double> draws(static_cast<std::size_t>(n_boot),
                            std::numeric_limits<double>::quiet_NaN());
  parallel_for(static_cast<std::size_t>(n_boot), threads, [&](std::size_t b) {
    RngStream stream = RngStream::derive(seed, detail::kStreamBootstrap, b);
    const Dataset resampled = resample_rows(data, stream);
    try {
      draws[b] = estimator(resampled);
    } catch (const Error&) {
      // dropped and counted below
    }
  });

  std::vector<double> ok;
  ok.reserve(draws.size());
  for (const double d : draws)
    if (std::isfinite(d)) ok.push_back(d);
  BootstrapResult result;
  result.n_draws = n_boot;
  result.n_failed = n_boot - static_cast<int>(ok.size());
  if (result.n_failed * 20 > n_boot)
    throw EstimatorFailed("bootstrap: " + std::to_string(result.n_failed) + " of " +
                          std::to_string(n_boot) + " replicates failed");

  const double m = static_cast<double>(ok.size());
  double mean = 0.0;
  for (const double d : ok) mean += d;
  mean /= m;
  double ss = 0.0;
  for (const double d : ok) ss += (d - mean) * (d - mean);
  result.se = std::sqrt(ss / (m - 1.0));
  result.normal_lower = point_estimate - 1.959963984540054 * result.se;
  result.normal_upper = point_estimate + 1.959963984540054 * result.se;
  std::sort(ok.begin(), ok.end());
  result.percentile_lower = sorted_quantile(ok, 0.025);
  result.percentile_upper = sorted_quantile(ok, 0.975);
  return result;
}

}  // namespace survdr
