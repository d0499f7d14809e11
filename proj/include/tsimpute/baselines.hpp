#pragma once

#include <optional>

#include "tsimpute/dataset.hpp"

namespace tsimpute {

/// Classical single-imputation baselines. Each returns a fully observed
/// dataset; observed cells pass through bit-identical.

TimeSeriesDataset impute_linear(const TimeSeriesDataset& ds);

/// Last observation carried forward; leading gaps backfill from the first
/// observed value.
TimeSeriesDataset impute_locf(const TimeSeriesDataset& ds);

TimeSeriesDataset impute_mean(const TimeSeriesDataset& ds);

/// Median uses the standard midpoint convention (average of the two
/// central order statistics).
TimeSeriesDataset impute_median(const TimeSeriesDataset& ds);

/// Row-neighbour imputation. Distances are Euclidean over columns observed
/// in both rows, divided by sqrt(shared-column count); the imputed value is
/// the mean of the target column over the k nearest donor rows with that
/// column observed. Ties break toward the lower row index; k larger than
/// the donor pool truncates gracefully.
TimeSeriesDataset impute_knn(const TimeSeriesDataset& ds, int k = 5);

/// Seasonal-decomposition fill: trend by centered moving average plus the
/// per-phase mean deviation, with the period forced when supplied and
/// autodetected otherwise. Falls back to linear interpolation when no
/// period is found.
TimeSeriesDataset impute_seasonal(const TimeSeriesDataset& ds,
                                  std::optional<int> period = std::nullopt);

}  // namespace tsimpute
