#include "tsimpute/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "tsimpute/csv.hpp"

namespace tsimpute {

namespace {

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

// Accepts "YYYY-MM-DD HH:MM[:SS]" or the T-separated variant; returns
// seconds since epoch (UTC, proleptic arithmetic — no DST handling needed
// for equally spaced sensor data).
bool parse_iso_timestamp(const std::string& s, std::int64_t& out) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
  int n = std::sscanf(s.c_str(), "%4d-%2d-%2d", &y, &mo, &d);
  if (n != 3 || s.size() < 10 || s[4] != '-' || s[7] != '-') return false;
  if (s.size() > 10) {
    const char sep = s[10];
    if (sep != ' ' && sep != 'T') return false;
    n = std::sscanf(s.c_str() + 11, "%2d:%2d:%2d", &h, &mi, &se);
    if (n < 2) return false;
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31) return false;
  // Days-from-civil (Howard Hinnant's algorithm).
  const int yy = y - (mo <= 2);
  const int era = (yy >= 0 ? yy : yy - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(yy - era * 400);
  const unsigned doy = (153u * (mo + (mo > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  const std::int64_t days =
      static_cast<std::int64_t>(era) * 146097 + static_cast<int>(doe) - 719468;
  out = days * 86400 + h * 3600 + mi * 60 + se;
  return true;
}

}  // namespace

std::vector<int> MissingnessMask::obs_rows(int j) const {
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(flags.rows()));
  for (Eigen::Index t = 0; t < flags.rows(); ++t)
    if (!flags(t, j)) idx.push_back(static_cast<int>(t));
  return idx;
}

std::vector<int> MissingnessMask::miss_rows(int j) const {
  std::vector<int> idx;
  for (Eigen::Index t = 0; t < flags.rows(); ++t)
    if (flags(t, j)) idx.push_back(static_cast<int>(t));
  return idx;
}

std::vector<int> MissingnessMask::missing_columns() const {
  std::vector<int> cols;
  for (Eigen::Index j = 0; j < flags.cols(); ++j)
    if (flags.col(j).any()) cols.push_back(static_cast<int>(j));
  return cols;
}

int TimeSeriesDataset::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return static_cast<int>(j);
  throw std::runtime_error("unknown variable: " + name);
}

void TimeSeriesDataset::validate() const {
  if (mask.flags.rows() != values.rows() || mask.flags.cols() != values.cols())
    throw std::runtime_error("mask dimensions do not match values");
  if (static_cast<Eigen::Index>(names.size()) != values.cols())
    throw std::runtime_error("name count does not match column count");
  for (Eigen::Index t = 0; t < values.rows(); ++t)
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      if (!mask.flags(t, j) && !std::isfinite(values(t, j)))
        throw std::runtime_error("observed cell holds a non-finite value");
  if (timestamps) {
    if (static_cast<Eigen::Index>(timestamps->seconds.size()) != values.rows())
      throw std::runtime_error("timestamp count does not match row count");
    for (std::size_t t = 1; t < timestamps->seconds.size(); ++t)
      if (timestamps->seconds[t] <= timestamps->seconds[t - 1])
        throw std::runtime_error("timestamps are not strictly increasing");
  }
}

TimeSeriesDataset load_csv(const std::filesystem::path& path,
                           const LoadOptions& opts) {
  csv::Table table = csv::read_file(path);

  int ts_col = -1;
  if (opts.timestamp_column) {
    for (std::size_t j = 0; j < table.header.size(); ++j)
      if (table.header[j] == *opts.timestamp_column) ts_col = static_cast<int>(j);
    if (ts_col < 0)
      throw std::runtime_error("timestamp column not found: " +
                               *opts.timestamp_column);
  }

  const Eigen::Index n = static_cast<Eigen::Index>(table.rows.size());
  const Eigen::Index p =
      static_cast<Eigen::Index>(table.header.size()) - (ts_col >= 0 ? 1 : 0);
  if (p <= 0) throw std::runtime_error("no data columns in " + path.string());

  TimeSeriesDataset ds;
  ds.values.resize(n, p);
  ds.mask.flags = BoolMatrix::Constant(n, p, false);
  for (std::size_t j = 0; j < table.header.size(); ++j)
    if (static_cast<int>(j) != ts_col) ds.names.push_back(table.header[j]);

  Timestamps ts;
  if (ts_col >= 0) {
    ds.timestamp_name = table.header[ts_col];
    ts.seconds.reserve(n);
    ts.labels.reserve(n);
  }

  for (Eigen::Index t = 0; t < n; ++t) {
    const auto& row = table.rows[t];
    Eigen::Index j_out = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (static_cast<int>(j) == ts_col) {
        std::int64_t sec = 0;
        double as_num = 0.0;
        if (parse_iso_timestamp(row[j], sec)) {
          ts.calendar = true;
        } else if (parse_double(row[j], as_num)) {
          sec = static_cast<std::int64_t>(as_num);
        } else {
          throw std::runtime_error("unparseable timestamp '" + row[j] +
                                   "' at row " + std::to_string(t + 1));
        }
        ts.seconds.push_back(sec);
        ts.labels.push_back(row[j]);
        continue;
      }
      double v = 0.0;
      if (opts.na_tokens.count(row[j])) {
        ds.mask.flags(t, j_out) = true;
        ds.values(t, j_out) = std::numeric_limits<double>::quiet_NaN();
      } else if (parse_double(row[j], v)) {
        if (opts.sentinel && v == *opts.sentinel) {
          ds.mask.flags(t, j_out) = true;
          ds.values(t, j_out) = std::numeric_limits<double>::quiet_NaN();
        } else {
          ds.values(t, j_out) = v;
        }
      } else {
        throw std::runtime_error("unparseable value '" + row[j] + "' at row " +
                                 std::to_string(t + 1) + ", column " +
                                 table.header[j]);
      }
      ++j_out;
    }
  }

  if (ts_col >= 0) ds.timestamps = std::move(ts);
  ds.validate();
  return ds;
}

namespace {

std::string render_csv(const TimeSeriesDataset& base,
                       const Eigen::MatrixXd& values, const BoolMatrix* mask,
                       const std::string& na_token) {
  std::ostringstream out;
  bool first = true;
  if (base.timestamp_name) {
    out << *base.timestamp_name;
    first = false;
  }
  for (const auto& name : base.names) {
    if (!first) out << ',';
    out << name;
    first = false;
  }
  out << '\n';
  for (Eigen::Index t = 0; t < values.rows(); ++t) {
    first = true;
    if (base.timestamps) {
      out << base.timestamps->labels[t];
      first = false;
    }
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (!first) out << ',';
      if (mask && (*mask)(t, j))
        out << na_token;
      else
        out << csv::format_full(values(t, j));
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

void save_csv(const TimeSeriesDataset& ds, const std::filesystem::path& path,
              const std::string& na_token) {
  csv::write_text_atomic(path,
                         render_csv(ds, ds.values, &ds.mask.flags, na_token));
}

void save_completed_csv(const TimeSeriesDataset& base,
                        const Eigen::MatrixXd& completed,
                        const std::filesystem::path& path) {
  csv::write_text_atomic(path, render_csv(base, completed, nullptr, "NA"));
}

std::pair<TimeSeriesDataset, StandardizationParams> standardize(
    const TimeSeriesDataset& ds) {
  const Eigen::Index n = ds.rows(), p = ds.cols();
  StandardizationParams params;
  params.mean.resize(p);
  params.sd.resize(p);

  TimeSeriesDataset out = ds;
  for (Eigen::Index j = 0; j < p; ++j) {
    double sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (ds.mask.flags(t, j)) continue;
      sum += ds.values(t, j);
      ++count;
    }
    if (count < 2)
      throw std::runtime_error("column " + ds.names[j] +
                               " has fewer than 2 observed entries");
    const double mu = sum / static_cast<double>(count);
    double ss = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (ds.mask.flags(t, j)) continue;
      const double d = ds.values(t, j) - mu;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(count));
    if (sd <= 0.0)
      throw std::runtime_error("column " + ds.names[j] +
                               " has zero variance over observed entries");
    params.mean(j) = mu;
    params.sd(j) = sd;
    for (Eigen::Index t = 0; t < n; ++t)
      if (!ds.mask.flags(t, j))
        out.values(t, j) = (ds.values(t, j) - mu) / sd;
  }
  return {std::move(out), std::move(params)};
}

TimeSeriesDataset destandardize(const TimeSeriesDataset& ds,
                                const StandardizationParams& params) {
  if (params.mean.size() != ds.cols())
    throw std::runtime_error("standardization params column count mismatch");
  TimeSeriesDataset out = ds;
  out.values = destandardize_matrix(ds.values, params);
  return out;
}

Eigen::MatrixXd destandardize_matrix(const Eigen::MatrixXd& values,
                                     const StandardizationParams& params) {
  if (params.mean.size() != values.cols())
    throw std::runtime_error("standardization params column count mismatch");
  Eigen::MatrixXd out = values;
  for (Eigen::Index j = 0; j < values.cols(); ++j)
    out.col(j) = values.col(j) * params.sd(j) +
                 Eigen::VectorXd::Constant(values.rows(), params.mean(j));
  return out;
}

}  // namespace tsimpute
