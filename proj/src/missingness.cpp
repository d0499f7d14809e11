#include "tsimpute/missingness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "tsimpute/csv.hpp"
#include "tsimpute/rng.hpp"

namespace tsimpute {

namespace {

void require_observed(const TimeSeriesDataset& ds,
                      const std::vector<int>& cols) {
  for (int j : cols)
    if (ds.mask.flags.col(j).any())
      throw std::runtime_error(
          "injection target column already contains missing cells: " +
          ds.names[j]);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::pair<TimeSeriesDataset, GroundTruthMask> inject_mcar(
    const TimeSeriesDataset& ds, double rate, std::uint64_t seed) {
  if (!(rate > 0.0 && rate < 1.0))
    throw std::runtime_error("MCAR rate must lie in (0,1)");
  std::vector<int> all_cols(ds.cols());
  for (Eigen::Index j = 0; j < ds.cols(); ++j) all_cols[j] = static_cast<int>(j);
  require_observed(ds, all_cols);

  TimeSeriesDataset masked = ds;
  GroundTruthMask truth;
  truth.injected = BoolMatrix::Constant(ds.rows(), ds.cols(), false);
  truth.true_values = Eigen::MatrixXd::Zero(ds.rows(), ds.cols());
  truth.mechanism = "mcar";
  truth.rate = rate;
  truth.seed = seed;
  truth.masked_vars = all_cols;

  Rng rng(mix_seed(seed, 0x6d636172ULL));  // "mcar"
  for (Eigen::Index t = 0; t < ds.rows(); ++t) {
    for (Eigen::Index j = 0; j < ds.cols(); ++j) {
      if (rng.uniform() < rate) {
        truth.injected(t, j) = true;
        truth.true_values(t, j) = ds.values(t, j);
        masked.values(t, j) = std::numeric_limits<double>::quiet_NaN();
        masked.mask.flags(t, j) = true;
      }
    }
  }
  return {std::move(masked), std::move(truth)};
}

double calibrate_mar_intercept(const Eigen::VectorXd& scores, double target) {
  auto mean_prob = [&](double alpha) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < scores.size(); ++i)
      s += logistic(alpha + scores(i));
    return s / static_cast<double>(scores.size());
  };
  double lo = -20.0, hi = 20.0;
  if (mean_prob(lo) > target || mean_prob(hi) < target)
    throw std::runtime_error("MAR intercept calibration out of range");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double p = mean_prob(mid);
    if (std::abs(p - target) < 1e-4) return mid;
    (p < target ? lo : hi) = mid;
  }
  throw std::runtime_error("MAR intercept bisection failed to converge");
}

std::pair<TimeSeriesDataset, GroundTruthMask> inject_mar(
    const TimeSeriesDataset& ds, const std::vector<int>& masked_vars,
    double target_rate, std::uint64_t seed) {
  if (!(target_rate > 0.0 && target_rate < 1.0))
    throw std::runtime_error("MAR target rate must lie in (0,1)");
  if (masked_vars.empty())
    throw std::runtime_error("MAR masked variable set is empty");
  if (static_cast<Eigen::Index>(masked_vars.size()) >= ds.cols())
    throw std::runtime_error(
        "MAR masked variables must be a strict subset of columns");
  std::vector<int> all_cols(ds.cols());
  for (Eigen::Index j = 0; j < ds.cols(); ++j) all_cols[j] = static_cast<int>(j);
  require_observed(ds, all_cols);

  std::vector<int> observed_vars;
  for (int j : all_cols)
    if (std::find(masked_vars.begin(), masked_vars.end(), j) ==
        masked_vars.end())
      observed_vars.push_back(j);

  // Standardize the always-observed predictors (population convention).
  const Eigen::Index n = ds.rows();
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(observed_vars.size()));
  for (std::size_t c = 0; c < observed_vars.size(); ++c) {
    Eigen::VectorXd col = ds.values.col(observed_vars[c]);
    const double mu = col.mean();
    const double sd = std::sqrt((col.array() - mu).square().mean());
    z.col(c) = (col.array() - mu) / (sd > 0.0 ? sd : 1.0);
  }

  TimeSeriesDataset masked = ds;
  GroundTruthMask truth;
  truth.injected = BoolMatrix::Constant(ds.rows(), ds.cols(), false);
  truth.true_values = Eigen::MatrixXd::Zero(ds.rows(), ds.cols());
  truth.mechanism = "mar";
  truth.rate = target_rate;
  truth.seed = seed;
  truth.masked_vars = masked_vars;

  Rng weight_rng(mix_seed(seed, 0x6d6172ULL));  // "mar"
  for (int j : masked_vars) {
    Eigen::VectorXd w(z.cols());
    for (Eigen::Index c = 0; c < w.size(); ++c) w(c) = weight_rng.normal();
    const Eigen::VectorXd scores = z * w;
    const double alpha = calibrate_mar_intercept(scores, target_rate);
    truth.mar_weights.push_back(w);
    truth.mar_intercepts.push_back(alpha);

    Rng cell_rng = weight_rng.derive(static_cast<std::uint64_t>(j));
    for (Eigen::Index t = 0; t < n; ++t) {
      if (cell_rng.uniform() < logistic(alpha + scores(t))) {
        truth.injected(t, j) = true;
        truth.true_values(t, j) = ds.values(t, j);
        masked.values(t, j) = std::numeric_limits<double>::quiet_NaN();
        masked.mask.flags(t, j) = true;
      }
    }
  }
  return {std::move(masked), std::move(truth)};
}

TimeSeriesDataset filter_rows_by_missingness(const TimeSeriesDataset& ds,
                                             double max_fraction) {
  if (max_fraction < 0.0 || max_fraction > 1.0)
    throw std::runtime_error("max_fraction must lie in [0,1]");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index t = 0; t < ds.rows(); ++t) {
    Eigen::Index miss = 0;
    for (Eigen::Index j = 0; j < ds.cols(); ++j)
      if (ds.mask.flags(t, j)) ++miss;
    const double frac =
        static_cast<double>(miss) / static_cast<double>(ds.cols());
    if (frac <= max_fraction) keep.push_back(t);
  }
  if (keep.empty()) throw std::runtime_error("row filter dropped every row");
  if (static_cast<Eigen::Index>(keep.size()) == ds.rows()) return ds;

  TimeSeriesDataset out;
  out.names = ds.names;
  out.timestamp_name = ds.timestamp_name;
  out.values.resize(static_cast<Eigen::Index>(keep.size()), ds.cols());
  out.mask.flags.resize(static_cast<Eigen::Index>(keep.size()), ds.cols());
  if (ds.timestamps) {
    Timestamps ts;
    ts.calendar = ds.timestamps->calendar;
    for (Eigen::Index r : keep) {
      ts.seconds.push_back(ds.timestamps->seconds[r]);
      ts.labels.push_back(ds.timestamps->labels[r]);
    }
    out.timestamps = std::move(ts);
  }
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) = ds.values.row(keep[i]);
    out.mask.flags.row(static_cast<Eigen::Index>(i)) =
        ds.mask.flags.row(keep[i]);
  }
  return out;
}

void save_ground_truth_csv(const GroundTruthMask& truth,
                           const std::vector<std::string>& names,
                           const std::filesystem::path& path) {
  std::ostringstream out;
  out << "row,column,true_value\n";
  for (Eigen::Index t = 0; t < truth.injected.rows(); ++t)
    for (Eigen::Index j = 0; j < truth.injected.cols(); ++j)
      if (truth.injected(t, j))
        out << t << ',' << names[j] << ','
            << csv::format_full(truth.true_values(t, j)) << '\n';
  csv::write_text_atomic(path, out.str());
}

}  // namespace tsimpute
