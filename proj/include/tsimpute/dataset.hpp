#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tsimpute {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Per-cell missingness flags (true = missing) with the derived index sets
/// used throughout the imputation loops.
struct MissingnessMask {
  BoolMatrix flags;

  Eigen::Index rows() const { return flags.rows(); }
  Eigen::Index cols() const { return flags.cols(); }

  /// I_obs(j): row indices where column j is observed, ascending.
  std::vector<int> obs_rows(int j) const;
  /// I_miss(j): row indices where column j is missing, ascending.
  std::vector<int> miss_rows(int j) const;
  /// J_miss: columns holding at least one missing cell, ascending.
  std::vector<int> missing_columns() const;

  Eigen::Index missing_count() const { return flags.cast<Eigen::Index>().sum(); }
  bool any_missing() const { return flags.any(); }
};

/// Time axis of a dataset. `calendar` is true when the labels were parsed
/// from ISO-8601 stamps, in which case hour-of-day / day-of-week features
/// reflect actual clock fields; otherwise `seconds` holds the raw integer
/// index values.
struct Timestamps {
  std::vector<std::int64_t> seconds;
  std::vector<std::string> labels;
  bool calendar = false;
};

/// An n-by-p numeric panel with ordered timestamps and a missingness mask.
/// Missing cells hold NaN in `values`; observed cells are always finite.
/// Instances are treated as immutable after construction.
struct TimeSeriesDataset {
  Eigen::MatrixXd values;
  MissingnessMask mask;
  std::vector<std::string> names;
  std::optional<Timestamps> timestamps;
  std::optional<std::string> timestamp_name;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  int column_index(const std::string& name) const;

  /// Checks the structural invariants (dimensions agree, observed cells
  /// finite, timestamps strictly increasing); throws on violation.
  void validate() const;
};

struct LoadOptions {
  std::optional<double> sentinel;
  std::optional<std::string> timestamp_column;
  std::set<std::string> na_tokens = {"NA", "NaN", ""};
};

/// Loads a headered CSV, flagging cells missing when they match an na_token
/// or equal the numeric sentinel exactly.
TimeSeriesDataset load_csv(const std::filesystem::path& path,
                           const LoadOptions& opts = {});

/// Writes a dataset back out; missing cells become `na_token`.
void save_csv(const TimeSeriesDataset& ds, const std::filesystem::path& path,
              const std::string& na_token = "NA");

/// Writes a fully observed matrix using the dataset's header/timestamps.
void save_completed_csv(const TimeSeriesDataset& base,
                        const Eigen::MatrixXd& completed,
                        const std::filesystem::path& path);

/// Per-column location/scale computed over observed entries only
/// (population convention, divisor n_obs).
struct StandardizationParams {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

/// Centers and scales each column so its observed entries have mean 0 and
/// population SD 1. Throws on constant columns or columns with fewer than
/// two observed entries.
std::pair<TimeSeriesDataset, StandardizationParams> standardize(
    const TimeSeriesDataset& ds);

/// Inverse of standardize: x -> x * sd_j + mean_j cell-wise; mask unchanged.
TimeSeriesDataset destandardize(const TimeSeriesDataset& ds,
                                const StandardizationParams& params);

/// Same transform applied to a bare (typically completed) matrix.
Eigen::MatrixXd destandardize_matrix(const Eigen::MatrixXd& values,
                                     const StandardizationParams& params);

}  // namespace tsimpute
