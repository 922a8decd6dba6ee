#pragma once

// Exception taxonomy. Every failure mode callers are expected to handle gets
// its own type so pipelines can report per-row errors without string matching.

#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace survdr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- data loading ----

struct CsvParseError : Error {
  std::size_t line;
  CsvParseError(std::size_t line_, const std::string& what_)
      : Error("csv parse error at line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

struct MissingColumn : Error {
  std::string column;
  explicit MissingColumn(const std::string& col)
      : Error("missing column: " + col), column(col) {}
};

struct NonNumericCell : Error {
  std::size_t row;  // 1-based data row (header excluded)
  std::string column;
  NonNumericCell(std::size_t row_, const std::string& col)
      : Error("non-numeric cell at row " + std::to_string(row_) + ", column " + col),
        row(row_), column(col) {}
};

struct NonPositiveTime : Error {
  std::size_t row;
  explicit NonPositiveTime(std::size_t row_)
      : Error("non-positive follow-up time at row " + std::to_string(row_)), row(row_) {}
};

struct InvalidIndicator : Error {
  std::size_t row;
  std::string column;
  InvalidIndicator(std::size_t row_, const std::string& col)
      : Error("indicator not 0/1 at row " + std::to_string(row_) + ", column " + col),
        row(row_), column(col) {}
};

// ---- model fitting ----

struct RankDeficient : Error {
  using Error::Error;
};

struct Separation : Error {
  using Error::Error;
};

struct NoConvergence : Error {
  using Error::Error;
};

struct NoEvents : Error {
  using Error::Error;
};

struct NoCensoringEvents : Error {
  using Error::Error;
};

struct NonfiniteEstimate : Error {
  using Error::Error;
};

struct EmptyInterval : Error {
  using Error::Error;
};

// ---- estimation ----

namespace detail {
// std::to_string flattens values like 1-1e-7 to "1.000000"; keep diagnostics
// exact enough to tell a boundary hit from a rounding artifact.
inline std::string fmt_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}
}  // namespace detail

struct PositivityViolation : Error {
  std::size_t index;
  double value;
  PositivityViolation(std::size_t i, double v)
      : Error("propensity score outside admissible range at subject " + std::to_string(i) +
              " (value " + detail::fmt_value(v) + ")"),
        index(i), value(v) {}
};

struct ZeroCensoringSurvival : Error {
  std::size_t index;
  double value;
  ZeroCensoringSurvival(std::size_t i, double v)
      : Error("censoring survival below admissible floor at subject " + std::to_string(i) +
              " (value " + detail::fmt_value(v) + ")"),
        index(i), value(v) {}
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct EstimatorFailed : Error {
  using Error::Error;
};

struct ReplicateFailed : Error {
  using Error::Error;
};

// ---- interface ----

struct ConfigError : Error {
  using Error::Error;
};

struct InvariantViolation : Error {
  using Error::Error;
};

}  // namespace survdr
