#include "survdr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "survdr/errors.hpp"

namespace survdr {

namespace {

// RFC-4180 record reader: handles quoted fields with embedded commas, quotes
// ("" escape) and newlines. Returns false at end of input. `line` tracks the
// physical line where the record started, for error messages.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line,
                 std::size_t& next_line) {
  fields.clear();
  int ch = in.get();
  if (ch == EOF) return false;
  line = next_line;

  std::string field;
  bool in_quotes = false;
  bool record_done = false;
  while (!record_done) {
    if (ch == EOF) {
      if (in_quotes) throw CsvParseError(line, "unterminated quoted field");
      fields.push_back(field);
      return true;
    }
    const char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        const int peek = in.peek();
        if (peek == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++next_line;
        field.push_back(c);
      }
    } else {
      switch (c) {
        case '"':
          if (!field.empty()) throw CsvParseError(next_line, "quote inside unquoted field");
          in_quotes = true;
          break;
        case ',':
          fields.push_back(field);
          field.clear();
          break;
        case '\r':
          if (in.peek() == '\n') in.get();
          [[fallthrough]];
        case '\n':
          ++next_line;
          fields.push_back(field);
          record_done = true;
          break;
        default:
          field.push_back(c);
      }
    }
    if (!record_done) ch = in.get();
  }
  return true;
}

double parse_numeric(const std::string& cell, std::size_t row, const std::string& column) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) throw NonNumericCell(row, column);
  return value;
}

int parse_indicator(const std::string& cell, std::size_t row, const std::string& column) {
  const double v = parse_numeric(cell, row, column);
  if (v == 0.0) return 0;
  if (v == 1.0) return 1;
  throw InvalidIndicator(row, column);
}

}  // namespace

std::size_t Dataset::n_events() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const SurvivalRecord& r) { return r.event; }));
}

bool Dataset::has_both_exposure_levels() const {
  bool saw0 = false, saw1 = false;
  for (const auto& r : records) (r.exposure ? saw1 : saw0) = true;
  return saw0 && saw1;
}

Eigen::VectorXd Dataset::times() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(records.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = records[static_cast<std::size_t>(i)].time;
  return v;
}

Eigen::VectorXd Dataset::events() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(records.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = records[static_cast<std::size_t>(i)].event ? 1.0 : 0.0;
  return v;
}

Eigen::VectorXd Dataset::exposures() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(records.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = static_cast<double>(records[static_cast<std::size_t>(i)].exposure);
  return v;
}

Eigen::MatrixXd Dataset::covariate_matrix() const {
  const auto n = static_cast<Eigen::Index>(records.size());
  const Eigen::Index p = covariate_dim();
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < n; ++i) m.row(i) = records[static_cast<std::size_t>(i)].covariates;
  return m;
}

Eigen::Index Dataset::covariate_index(const std::string& name) const {
  const auto it = std::find(covariate_names.begin(), covariate_names.end(), name);
  if (it == covariate_names.end()) throw MissingColumn(name);
  return static_cast<Eigen::Index>(it - covariate_names.begin());
}

Dataset parse_csv(std::istream& in, const ColumnMap& columns) {
  std::vector<std::string> fields;
  std::size_t line = 1, next_line = 1;
  if (!read_record(in, fields, line, next_line)) throw CsvParseError(1, "empty input");

  auto find_column = [&fields](const std::string& name) -> std::size_t {
    const auto it = std::find(fields.begin(), fields.end(), name);
    if (it == fields.end()) throw MissingColumn(name);
    return static_cast<std::size_t>(it - fields.begin());
  };

  const std::size_t time_col = find_column(columns.time);
  const std::size_t event_col = find_column(columns.event);
  const std::size_t exposure_col = find_column(columns.exposure);
  std::vector<std::size_t> covariate_cols;
  covariate_cols.reserve(columns.covariates.size());
  for (const auto& name : columns.covariates) covariate_cols.push_back(find_column(name));
  const std::size_t ncols = fields.size();

  Dataset data;
  data.covariate_names = columns.covariates;

  std::size_t row = 0;
  while (read_record(in, fields, line, next_line)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // trailing blank line
    ++row;
    if (fields.size() != ncols)
      throw CsvParseError(line, "expected " + std::to_string(ncols) + " fields, got " +
                                    std::to_string(fields.size()));
    SurvivalRecord rec;
    rec.time = parse_numeric(fields[time_col], row, columns.time);
    if (!(rec.time > 0.0)) throw NonPositiveTime(row);
    rec.event = parse_indicator(fields[event_col], row, columns.event) != 0;
    rec.exposure = parse_indicator(fields[exposure_col], row, columns.exposure);
    rec.covariates.resize(static_cast<Eigen::Index>(covariate_cols.size()));
    for (std::size_t j = 0; j < covariate_cols.size(); ++j)
      rec.covariates[static_cast<Eigen::Index>(j)] =
          parse_numeric(fields[covariate_cols[j]], row, columns.covariates[j]);
    data.records.push_back(std::move(rec));
  }
  return data;
}

Dataset load_csv(const std::string& path, const ColumnMap& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  return parse_csv(in, columns);
}

std::vector<std::size_t> risk_set(const Dataset& data, double k) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.records.size(); ++i)
    if (data.records[i].time >= k) idx.push_back(i);
  return idx;
}

std::vector<std::size_t> event_indices(const Dataset& data) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.records.size(); ++i)
    if (data.records[i].event) idx.push_back(i);
  return idx;
}

void write_csv(std::ostream& out, const Dataset& data, const ColumnMap& columns) {
  out << columns.time << ',' << columns.event << ',' << columns.exposure;
  for (const auto& name : columns.covariates) out << ',' << name;
  out << '\n';
  char buf[40];
  auto put = [&](double v, bool lead_comma) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    if (lead_comma) out << ',';
    out << buf;
  };
  for (const auto& rec : data.records) {
    put(rec.time, false);
    out << ',' << (rec.event ? 1 : 0) << ',' << rec.exposure;
    for (Eigen::Index j = 0; j < rec.covariates.size(); ++j) put(rec.covariates[j], true);
    out << '\n';
  }
}

}  // namespace survdr
