#pragma once

// Right-censored survival data with a binary exposure and numeric covariates,
// plus the RFC-4180 CSV loader that validates it.

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace survdr {

struct SurvivalRecord {
  double time = 0.0;             // follow-up time, > 0
  bool event = false;            // 1 = event observed, 0 = censored
  int exposure = 0;              // binary exposure level
  Eigen::VectorXd covariates;    // baseline covariates, fixed order
};

struct Dataset {
  std::vector<SurvivalRecord> records;
  std::vector<std::string> covariate_names;

  std::size_t size() const { return records.size(); }
  Eigen::Index covariate_dim() const {
    return records.empty() ? static_cast<Eigen::Index>(covariate_names.size())
                           : records.front().covariates.size();
  }

  std::size_t n_events() const;
  bool has_both_exposure_levels() const;

  // Columnar views (copies) for numerical code.
  Eigen::VectorXd times() const;
  Eigen::VectorXd events() const;     // 0/1 as double
  Eigen::VectorXd exposures() const;  // 0/1 as double
  Eigen::MatrixXd covariate_matrix() const;

  // Position of a covariate by name; throws MissingColumn.
  Eigen::Index covariate_index(const std::string& name) const;
};

struct ColumnMap {
  std::string time;
  std::string event;
  std::string exposure;
  std::vector<std::string> covariates;
};

// Load and validate a CSV file. The header row is required; listed columns
// must exist; time must be positive; event and exposure must be exactly 0 or
// 1; every requested cell must be numeric. Errors carry 1-based data-row
// indices and the offending column name.
Dataset load_csv(const std::string& path, const ColumnMap& columns);
Dataset parse_csv(std::istream& in, const ColumnMap& columns);

// Indices (0-based, ascending) of subjects still at risk at time k, i.e. with
// follow-up time >= k.
std::vector<std::size_t> risk_set(const Dataset& data, double k);

// Indices (0-based, ascending) of subjects with an observed event.
std::vector<std::size_t> event_indices(const Dataset& data);

// Write a dataset back out as CSV with the given column names (used by the
// simulation tooling; inverse of load_csv for generated data).
void write_csv(std::ostream& out, const Dataset& data, const ColumnMap& columns);

}  // namespace survdr
