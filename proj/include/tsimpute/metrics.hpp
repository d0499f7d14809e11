#pragma once

#include <string>
#include <vector>

#include "tsimpute/dataset.hpp"
#include "tsimpute/missingness.hpp"

namespace tsimpute {

double rmse(const std::vector<double>& pred, const std::vector<double>& actual);
double mae(const std::vector<double>& pred, const std::vector<double>& actual);

/// RMSE divided by the population SD of the actual values; the constant
/// mean predictor scores exactly 1.
double nrmse(const std::vector<double>& pred,
             const std::vector<double>& actual);

/// MAE divided by the range (max - min) of the actual values.
double nmae(const std::vector<double>& pred, const std::vector<double>& actual);

struct MetricsRow {
  std::string variable;
  std::string method;
  std::string sampler;
  double rmse = 0.0;
  double mae = 0.0;
  double nmae = 0.0;
  double nrmse = 0.0;
};

/// Metrics over the injected cells of one completed dataset.
struct MetricsReport {
  std::vector<MetricsRow> rows;
  std::string mask_hash;
};

/// Scores a completed matrix against ground truth, per variable, over the
/// injected cells only.
MetricsReport score_imputation(const Eigen::MatrixXd& completed,
                               const GroundTruthMask& truth,
                               const std::vector<std::string>& names,
                               const std::string& method,
                               const std::string& sampler = "");

/// Mean and sample SD (divisor R-1) of each metric across runs.
struct AggregatedRow {
  std::string variable;
  std::string method;
  std::string sampler;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;
  int runs = 0;
};

struct AggregatedReport {
  std::vector<AggregatedRow> rows;
};

AggregatedReport aggregate_runs(const std::vector<MetricsReport>& reports);

/// Content hash of the injected-cell coordinate set.
std::string mask_identity_hash(const GroundTruthMask& truth);

}  // namespace tsimpute
