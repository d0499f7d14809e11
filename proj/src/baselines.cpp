#include "tsimpute/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tsimpute/design.hpp"

namespace tsimpute {

namespace {

TimeSeriesDataset completed(const TimeSeriesDataset& ds, Eigen::MatrixXd X) {
  TimeSeriesDataset out = ds;
  out.values = std::move(X);
  out.mask.flags = BoolMatrix::Constant(ds.rows(), ds.cols(), false);
  return out;
}

std::vector<bool> column_missing(const TimeSeriesDataset& ds, Eigen::Index j) {
  std::vector<bool> m(static_cast<std::size_t>(ds.rows()));
  for (Eigen::Index t = 0; t < ds.rows(); ++t)
    m[static_cast<std::size_t>(t)] = ds.mask.flags(t, j);
  return m;
}

}  // namespace

TimeSeriesDataset impute_linear(const TimeSeriesDataset& ds) {
  Eigen::MatrixXd X = ds.values;
  for (Eigen::Index j = 0; j < ds.cols(); ++j)
    X.col(j) = interpolate_column(ds.values.col(j), column_missing(ds, j));
  return completed(ds, std::move(X));
}

TimeSeriesDataset impute_locf(const TimeSeriesDataset& ds) {
  Eigen::MatrixXd X = ds.values;
  for (Eigen::Index j = 0; j < ds.cols(); ++j) {
    Eigen::Index first_obs = -1;
    for (Eigen::Index t = 0; t < ds.rows(); ++t)
      if (!ds.mask.flags(t, j)) {
        first_obs = t;
        break;
      }
    if (first_obs < 0)
      throw std::runtime_error("column " + ds.names[j] + " is fully missing");
    double last = ds.values(first_obs, j);
    for (Eigen::Index t = 0; t < ds.rows(); ++t) {
      if (ds.mask.flags(t, j))
        X(t, j) = last;
      else
        last = ds.values(t, j);
    }
  }
  return completed(ds, std::move(X));
}

TimeSeriesDataset impute_mean(const TimeSeriesDataset& ds) {
  return completed(ds, initialize_mean(ds));
}

TimeSeriesDataset impute_median(const TimeSeriesDataset& ds) {
  Eigen::MatrixXd X = ds.values;
  for (Eigen::Index j = 0; j < ds.cols(); ++j) {
    std::vector<double> obs;
    for (Eigen::Index t = 0; t < ds.rows(); ++t)
      if (!ds.mask.flags(t, j)) obs.push_back(ds.values(t, j));
    if (obs.empty())
      throw std::runtime_error("column " + ds.names[j] + " is fully missing");
    std::sort(obs.begin(), obs.end());
    const std::size_t m = obs.size();
    const double median = (m % 2 == 1)
                              ? obs[m / 2]
                              : 0.5 * (obs[m / 2 - 1] + obs[m / 2]);
    for (Eigen::Index t = 0; t < ds.rows(); ++t)
      if (ds.mask.flags(t, j)) X(t, j) = median;
  }
  return completed(ds, std::move(X));
}

TimeSeriesDataset impute_knn(const TimeSeriesDataset& ds, int k) {
  if (k < 1) throw std::runtime_error("knn neighbour count must be >= 1");
  const Eigen::Index n = ds.rows(), p = ds.cols();
  Eigen::MatrixXd X = ds.values;

  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!ds.mask.flags(t, j)) continue;

      // Donors: rows with column j observed, ranked by pairwise-complete
      // distance to row t.
      std::vector<std::pair<double, Eigen::Index>> donors;
      for (Eigen::Index r = 0; r < n; ++r) {
        if (r == t || ds.mask.flags(r, j)) continue;
        double ss = 0.0;
        Eigen::Index shared = 0;
        for (Eigen::Index c = 0; c < p; ++c) {
          if (ds.mask.flags(t, c) || ds.mask.flags(r, c)) continue;
          const double d = ds.values(t, c) - ds.values(r, c);
          ss += d * d;
          ++shared;
        }
        const double dist = shared > 0
                                ? std::sqrt(ss) / std::sqrt(static_cast<double>(
                                                      shared))
                                : std::numeric_limits<double>::infinity();
        donors.emplace_back(dist, r);
      }
      if (donors.empty())
        throw std::runtime_error("no donor row has column " + ds.names[j] +
                                 " observed");
      std::sort(donors.begin(), donors.end(),
                [](const auto& a, const auto& b) {
                  if (a.first != b.first) return a.first < b.first;
                  return a.second < b.second;
                });
      const std::size_t take =
          std::min<std::size_t>(static_cast<std::size_t>(k), donors.size());
      double acc = 0.0;
      for (std::size_t i = 0; i < take; ++i)
        acc += ds.values(donors[i].second, j);
      X(t, j) = acc / static_cast<double>(take);
    }
  }
  return completed(ds, std::move(X));
}

TimeSeriesDataset impute_seasonal(const TimeSeriesDataset& ds,
                                  std::optional<int> period) {
  if (period) {
    if (*period < 2) throw std::runtime_error("seasonal period must be >= 2");
    if (ds.rows() < 2 * *period)
      throw std::runtime_error("series shorter than two seasonal periods");
  }
  return completed(ds, initialize_time_aware(ds, period));
}

}  // namespace tsimpute
