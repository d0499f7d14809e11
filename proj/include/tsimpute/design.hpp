#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "tsimpute/dataset.hpp"

namespace tsimpute {

/// Optional time-derived covariates, encoded as standardized numeric
/// columns. All are computable from timestamps or the row index alone.
struct TimeFeatureSpec {
  bool hour_of_day = false;
  bool day_of_week = false;
  bool linear_index = false;

  int count() const {
    return (hour_of_day ? 1 : 0) + (day_of_week ? 1 : 0) +
           (linear_index ? 1 : 0);
  }
};

/// Design matrix for one target column. Row t holds
///   [1, X_{t,-j}, h_t, X_{t-1,j}..X_{t-lp,j}, X_{t+1,j}..X_{t+lf,j}],
/// with boundary lags index-clamped into [0, n-1]. Clamping keeps every
/// row defined; within the first lp rows and the last lf rows a clamped
/// lag can coincide with the target cell itself.
struct LaggedDesign {
  Eigen::MatrixXd Z;  // n x d, aligned to time indices
  int target = 0;
  int lags_past = 0;
  int lags_future = 0;

  Eigen::Index dim() const { return Z.cols(); }
  Eigen::Index rows() const { return Z.rows(); }
};

/// Builds the lagged design for target column j from a completed matrix.
LaggedDesign build_lagged_design(const Eigen::MatrixXd& X_complete, int j,
                                 int lags_past, int lags_future,
                                 const TimeFeatureSpec& tf = {},
                                 const Timestamps* ts = nullptr);

/// Standardized time-feature columns, ordered hour, day-of-week, linear
/// index. Constant features encode as zeros.
Eigen::MatrixXd time_feature_matrix(Eigen::Index n, const TimeFeatureSpec& tf,
                                    const Timestamps* ts);

/// Crude start: each missing cell takes its column's observed mean.
Eigen::MatrixXd initialize_mean(const TimeSeriesDataset& ds);

/// Time-aware start: linear interpolation between observed neighbours
/// (nearest value at the edges); when a seasonal period is supplied or
/// detected, missing cells get interpolated trend plus the seasonal mean
/// deviation of their phase.
Eigen::MatrixXd initialize_time_aware(
    const TimeSeriesDataset& ds, std::optional<int> period_hint = std::nullopt);

/// Detects a seasonal period as the dominant autocorrelation peak (local
/// maximum >= 0.3 at lag >= 2) over observed pairs; nullopt when none.
std::optional<int> detect_period(const Eigen::VectorXd& column,
                                 const std::vector<bool>& missing);

/// Linear interpolation of one column over row index; edge gaps take the
/// nearest observed value. Throws when every entry is missing.
Eigen::VectorXd interpolate_column(const Eigen::VectorXd& column,
                                   const std::vector<bool>& missing);

}  // namespace tsimpute
