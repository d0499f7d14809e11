#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tsimpute/dataset.hpp"

namespace tsimpute {

/// Output of a multiple-imputation run: m completed datasets in native
/// units, per-cell predictive summaries, and the Rubin-pooled dataset with
/// within/between/total variance components. Observed cells are identical
/// across all m datasets and equal to the input.
struct ImputationResult {
  TimeSeriesDataset base;  // the masked input (native units)
  std::vector<Eigen::MatrixXd> completed;
  // Per-imputation posterior-predictive summaries; NaN at observed cells.
  std::vector<Eigen::MatrixXd> predictive_mean;
  std::vector<Eigen::MatrixXd> predictive_var;
  // Filled by pool_imputations().
  Eigen::MatrixXd pooled;
  Eigen::MatrixXd within_var;   // W: mean predictive variance per cell
  Eigen::MatrixXd between_var;  // B: sample variance of the m imputed values
  Eigen::MatrixXd total_var;    // T = W + (1 + 1/m) * B
  // Mean absolute change of the imputed cells between consecutive sweeps
  // of the first imputation (standardized scale) — a stabilization probe.
  std::vector<double> sweep_mean_abs_change;
  // Provenance.
  std::string method;
  std::string sampler;
  std::uint64_t base_seed = 0;
  std::string config_hash;

  int imputation_count() const { return static_cast<int>(completed.size()); }
};

/// Rubin-style pooling: pooled cell = mean over m, B = sample variance over
/// m, W = mean predictive variance, T = W + (1 + 1/m) * B. Variance
/// components are NaN at observed cells.
void pool_imputations(ImputationResult& result);

}  // namespace tsimpute
