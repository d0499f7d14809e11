#include "tsimpute/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace tsimpute {

namespace {

void check_pair(const std::vector<double>& pred,
                const std::vector<double>& actual) {
  if (pred.empty() || actual.empty())
    throw std::runtime_error("metric vectors must be non-empty");
  if (pred.size() != actual.size())
    throw std::runtime_error("metric vectors differ in length");
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (!std::isfinite(pred[i]) || !std::isfinite(actual[i]))
      throw std::runtime_error("metric vectors must be finite");
}

}  // namespace

double rmse(const std::vector<double>& pred,
            const std::vector<double>& actual) {
  check_pair(pred, actual);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - actual[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

double mae(const std::vector<double>& pred, const std::vector<double>& actual) {
  check_pair(pred, actual);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    acc += std::abs(pred[i] - actual[i]);
  return acc / static_cast<double>(pred.size());
}

double nrmse(const std::vector<double>& pred,
             const std::vector<double>& actual) {
  check_pair(pred, actual);
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());
  double var = 0.0;
  for (double a : actual) var += (a - mean) * (a - mean);
  var /= static_cast<double>(actual.size());
  const double sd = std::sqrt(var);
  if (sd <= 0.0)
    throw std::runtime_error("nrmse undefined for constant actual values");
  return rmse(pred, actual) / sd;
}

double nmae(const std::vector<double>& pred,
            const std::vector<double>& actual) {
  check_pair(pred, actual);
  const auto [lo, hi] = std::minmax_element(actual.begin(), actual.end());
  const double range = *hi - *lo;
  if (range <= 0.0)
    throw std::runtime_error("nmae undefined for zero-range actual values");
  return mae(pred, actual) / range;
}

std::string mask_identity_hash(const GroundTruthMask& truth) {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ULL;
    }
  };
  for (Eigen::Index t = 0; t < truth.injected.rows(); ++t)
    for (Eigen::Index j = 0; j < truth.injected.cols(); ++j)
      if (truth.injected(t, j)) {
        feed(static_cast<std::uint64_t>(t));
        feed(static_cast<std::uint64_t>(j));
      }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

MetricsReport score_imputation(const Eigen::MatrixXd& completed,
                               const GroundTruthMask& truth,
                               const std::vector<std::string>& names,
                               const std::string& method,
                               const std::string& sampler) {
  MetricsReport report;
  report.mask_hash = mask_identity_hash(truth);
  for (Eigen::Index j = 0; j < completed.cols(); ++j) {
    std::vector<double> pred, actual;
    for (Eigen::Index t = 0; t < completed.rows(); ++t) {
      if (!truth.injected(t, j)) continue;
      pred.push_back(completed(t, j));
      actual.push_back(truth.true_values(t, j));
    }
    if (actual.empty()) continue;
    MetricsRow row;
    row.variable = names[static_cast<std::size_t>(j)];
    row.method = method;
    row.sampler = sampler;
    row.rmse = rmse(pred, actual);
    row.mae = mae(pred, actual);
    row.nmae = nmae(pred, actual);
    row.nrmse = nrmse(pred, actual);
    report.rows.push_back(std::move(row));
  }
  return report;
}

AggregatedReport aggregate_runs(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw std::runtime_error("no reports to aggregate");

  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, std::vector<const MetricsRow*>> grouped;
  std::vector<Key> order;
  for (const auto& report : reports) {
    for (const auto& row : report.rows) {
      Key key{row.variable, row.method, row.sampler};
      if (grouped.find(key) == grouped.end()) order.push_back(key);
      grouped[key].push_back(&row);
    }
  }
  for (const auto& [key, rows] : grouped)
    if (rows.size() != grouped.begin()->second.size())
      throw std::runtime_error(
          "reports do not share a common variable/method set");

  AggregatedReport out;
  const char* metric_names[] = {"nmae", "nrmse", "rmse", "mae"};
  for (const auto& key : order) {
    const auto& rows = grouped[key];
    for (const char* metric : metric_names) {
      std::vector<double> vals;
      for (const MetricsRow* row : rows) {
        if (std::string(metric) == "nmae") vals.push_back(row->nmae);
        else if (std::string(metric) == "nrmse") vals.push_back(row->nrmse);
        else if (std::string(metric) == "rmse") vals.push_back(row->rmse);
        else vals.push_back(row->mae);
      }
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double sd = 0.0;
      if (vals.size() > 1) {
        for (double v : vals) sd += (v - mean) * (v - mean);
        sd = std::sqrt(sd / static_cast<double>(vals.size() - 1));
      }
      AggregatedRow arow;
      arow.variable = std::get<0>(key);
      arow.method = std::get<1>(key);
      arow.sampler = std::get<2>(key);
      arow.metric = metric;
      arow.mean = mean;
      arow.sd = sd;
      arow.runs = static_cast<int>(vals.size());
      out.rows.push_back(std::move(arow));
    }
  }
  return out;
}

}  // namespace tsimpute
