#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tsimpute/dataset.hpp"

namespace tsimpute {

/// Record of an artificial-missingness injection: which cells were hidden,
/// what they held, and how the mask was generated.
struct GroundTruthMask {
  BoolMatrix injected;           // true where a value was hidden
  Eigen::MatrixXd true_values;   // pre-injection values at injected cells
  std::string mechanism;         // "mcar" | "mar"
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> masked_vars;  // columns eligible for injection
  // MAR generator internals, kept for audits and sign-recovery checks.
  std::vector<Eigen::VectorXd> mar_weights;  // one per masked variable
  std::vector<double> mar_intercepts;
};

/// Flags each eligible cell missing independently with probability `rate`.
/// Requires the targeted columns to be fully observed beforehand.
std::pair<TimeSeriesDataset, GroundTruthMask> inject_mcar(
    const TimeSeriesDataset& ds, double rate, std::uint64_t seed);

/// Logistic MAR masking: per masked variable, row-wise missingness
/// probability logistic(alpha + w' z) where z holds the standardized
/// always-observed variables, w is a standard-normal draw keyed by the
/// seed, and alpha is calibrated by bisection so the mean probability
/// equals `target_rate` within 1e-4.
std::pair<TimeSeriesDataset, GroundTruthMask> inject_mar(
    const TimeSeriesDataset& ds, const std::vector<int>& masked_vars,
    double target_rate, std::uint64_t seed);

/// Calibrates the MAR intercept: finds alpha in [-20, 20] such that
/// mean_r logistic(alpha + scores_r) = target within 1e-4.
double calibrate_mar_intercept(const Eigen::VectorXd& scores, double target);

/// Drops rows whose missing fraction strictly exceeds `max_fraction`.
TimeSeriesDataset filter_rows_by_missingness(const TimeSeriesDataset& ds,
                                             double max_fraction);

/// Exports (row, column, true_value) triples for external scoring.
void save_ground_truth_csv(const GroundTruthMask& truth,
                           const std::vector<std::string>& names,
                           const std::filesystem::path& path);

}  // namespace tsimpute
