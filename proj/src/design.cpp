#include "tsimpute/design.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tsimpute {

namespace {

Eigen::VectorXd standardized_or_zero(Eigen::VectorXd raw) {
  const double mu = raw.mean();
  const double sd = std::sqrt((raw.array() - mu).square().mean());
  if (sd <= 0.0) return Eigen::VectorXd::Zero(raw.size());
  return (raw.array() - mu) / sd;
}

}  // namespace

Eigen::MatrixXd time_feature_matrix(Eigen::Index n, const TimeFeatureSpec& tf,
                                    const Timestamps* ts) {
  Eigen::MatrixXd H(n, tf.count());
  Eigen::Index c = 0;
  const bool calendar = ts != nullptr && ts->calendar;
  if (tf.hour_of_day) {
    Eigen::VectorXd raw(n);
    for (Eigen::Index t = 0; t < n; ++t)
      raw(t) = calendar
                   ? static_cast<double>((ts->seconds[t] / 3600) % 24)
                   : static_cast<double>(t % 24);
    H.col(c++) = standardized_or_zero(raw);
  }
  if (tf.day_of_week) {
    Eigen::VectorXd raw(n);
    for (Eigen::Index t = 0; t < n; ++t)
      raw(t) = calendar
                   ? static_cast<double>(((ts->seconds[t] / 86400) % 7 + 4) % 7)
                   : static_cast<double>((t / 24) % 7);
    H.col(c++) = standardized_or_zero(raw);
  }
  if (tf.linear_index) {
    Eigen::VectorXd raw =
        Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1));
    H.col(c++) = standardized_or_zero(raw);
  }
  return H;
}

LaggedDesign build_lagged_design(const Eigen::MatrixXd& X, int j,
                                 int lags_past, int lags_future,
                                 const TimeFeatureSpec& tf,
                                 const Timestamps* ts) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (j < 0 || j >= p) throw std::runtime_error("target column out of range");
  if (lags_past < 0 || lags_future < 0)
    throw std::runtime_error("lag orders must be non-negative");
  if (p == 1 && lags_past + lags_future < 1)
    throw std::runtime_error("univariate design needs at least one lag");
  if (n <= lags_past + lags_future)
    throw std::runtime_error("series shorter than total lag span");
  if (!X.allFinite())
    throw std::runtime_error("design input matrix contains non-finite values");

  const Eigen::MatrixXd H = time_feature_matrix(n, tf, ts);
  const Eigen::Index d = 1 + (p - 1) + H.cols() + lags_past + lags_future;

  LaggedDesign design;
  design.target = j;
  design.lags_past = lags_past;
  design.lags_future = lags_future;
  design.Z.resize(n, d);
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::Index c = 0;
    design.Z(t, c++) = 1.0;
    for (Eigen::Index k = 0; k < p; ++k)
      if (k != j) design.Z(t, c++) = X(t, k);
    for (Eigen::Index k = 0; k < H.cols(); ++k) design.Z(t, c++) = H(t, k);
    for (int k = 1; k <= lags_past; ++k) {
      const Eigen::Index src = std::max<Eigen::Index>(t - k, 0);
      design.Z(t, c++) = X(src, j);
    }
    for (int k = 1; k <= lags_future; ++k) {
      const Eigen::Index src = std::min<Eigen::Index>(t + k, n - 1);
      design.Z(t, c++) = X(src, j);
    }
  }
  return design;
}

Eigen::MatrixXd initialize_mean(const TimeSeriesDataset& ds) {
  Eigen::MatrixXd X = ds.values;
  for (Eigen::Index j = 0; j < ds.cols(); ++j) {
    double sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index t = 0; t < ds.rows(); ++t) {
      if (ds.mask.flags(t, j)) continue;
      sum += ds.values(t, j);
      ++count;
    }
    if (count == 0)
      throw std::runtime_error("column " + ds.names[j] + " is fully missing");
    const double mu = sum / static_cast<double>(count);
    for (Eigen::Index t = 0; t < ds.rows(); ++t)
      if (ds.mask.flags(t, j)) X(t, j) = mu;
  }
  return X;
}

Eigen::VectorXd interpolate_column(const Eigen::VectorXd& col,
                                   const std::vector<bool>& missing) {
  const Eigen::Index n = col.size();
  std::vector<Eigen::Index> obs;
  for (Eigen::Index t = 0; t < n; ++t)
    if (!missing[t]) obs.push_back(t);
  if (obs.empty()) throw std::runtime_error("fully missing column");

  Eigen::VectorXd out = col;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (!missing[t]) continue;
    auto next = std::lower_bound(obs.begin(), obs.end(), t);
    if (next == obs.begin()) {
      out(t) = col(obs.front());
    } else if (next == obs.end()) {
      out(t) = col(obs.back());
    } else {
      const Eigen::Index hi = *next;
      const Eigen::Index lo = *(next - 1);
      const double w =
          static_cast<double>(t - lo) / static_cast<double>(hi - lo);
      out(t) = (1.0 - w) * col(lo) + w * col(hi);
    }
  }
  return out;
}

namespace {

// Centered moving average of width `period` (half weights on the ends for
// even periods); edge positions clamp to the nearest full window.
Eigen::VectorXd moving_average_trend(const Eigen::VectorXd& x, int period) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd trend(n);
  const bool even = period % 2 == 0;
  const int half = even ? period / 2 : (period - 1) / 2;
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::Index center =
        std::clamp<Eigen::Index>(t, half, n - 1 - half);
    double sum = 0.0;
    if (even) {
      sum += 0.5 * x(center - half);
      sum += 0.5 * x(center + half);
      for (Eigen::Index k = center - half + 1; k <= center + half - 1; ++k)
        sum += x(k);
    } else {
      for (Eigen::Index k = center - half; k <= center + half; ++k) sum += x(k);
    }
    trend(t) = sum / static_cast<double>(period);
  }
  return trend;
}

}  // namespace

std::optional<int> detect_period(const Eigen::VectorXd& column,
                                 const std::vector<bool>& missing) {
  const Eigen::Index n = column.size();
  if (n < 6) return std::nullopt;

  double sum = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (missing[t]) continue;
    sum += column(t);
    ++count;
  }
  if (count < 6) return std::nullopt;
  const double mu = sum / static_cast<double>(count);
  double var = 0.0;
  for (Eigen::Index t = 0; t < n; ++t)
    if (!missing[t]) var += (column(t) - mu) * (column(t) - mu);
  var /= static_cast<double>(count);
  if (var <= 0.0) return std::nullopt;

  const Eigen::Index max_lag = std::min<Eigen::Index>(n / 2, 366);
  std::vector<double> acf(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (Eigen::Index lag = 1; lag <= max_lag; ++lag) {
    double acc = 0.0;
    Eigen::Index pairs = 0;
    for (Eigen::Index t = 0; t + lag < n; ++t) {
      if (missing[t] || missing[t + lag]) continue;
      acc += (column(t) - mu) * (column(t + lag) - mu);
      ++pairs;
    }
    acf[static_cast<std::size_t>(lag)] =
        pairs > 0 ? (acc / static_cast<double>(pairs)) / var : 0.0;
  }

  // Local maxima at lag >= 2 clearing the 0.3 threshold. The dominant peak
  // wins, but near-ties resolve to the smallest lag so that harmonics of
  // an exact period do not shadow the fundamental.
  std::vector<std::pair<int, double>> peaks;
  for (Eigen::Index lag = 2; lag < max_lag; ++lag) {
    const double v = acf[static_cast<std::size_t>(lag)];
    if (v < 0.3) continue;
    if (v <= acf[static_cast<std::size_t>(lag - 1)] ||
        v < acf[static_cast<std::size_t>(lag + 1)])
      continue;
    peaks.emplace_back(static_cast<int>(lag), v);
  }
  if (peaks.empty()) return std::nullopt;
  double top = 0.0;
  for (const auto& [lag, v] : peaks) top = std::max(top, v);
  for (const auto& [lag, v] : peaks)
    if (v >= 0.95 * top) return lag;
  return peaks.front().first;
}

Eigen::MatrixXd initialize_time_aware(const TimeSeriesDataset& ds,
                                      std::optional<int> period_hint) {
  if (ds.rows() < 3)
    throw std::runtime_error("time-aware initialization needs >= 3 rows");
  Eigen::MatrixXd X = ds.values;
  for (Eigen::Index j = 0; j < ds.cols(); ++j) {
    std::vector<bool> missing(static_cast<std::size_t>(ds.rows()));
    bool any = false;
    for (Eigen::Index t = 0; t < ds.rows(); ++t) {
      missing[static_cast<std::size_t>(t)] = ds.mask.flags(t, j);
      any = any || ds.mask.flags(t, j);
    }
    Eigen::VectorXd col = ds.values.col(j);
    Eigen::VectorXd interp = interpolate_column(col, missing);
    if (!any) {
      X.col(j) = col;
      continue;
    }

    std::optional<int> period = period_hint;
    if (!period) period = detect_period(col, missing);
    if (!period || *period < 2 || ds.rows() < 2 * *period) {
      X.col(j) = interp;
      continue;
    }

    // Fixed-point refinement: fill from trend + per-phase mean deviation,
    // recompute the trend from the refilled series, repeat. A missing cell
    // enters its own trend window with weight 1/P, so the update is a
    // contraction; on an exactly periodic series it converges to the true
    // periodic value.
    const int P = *period;
    Eigen::VectorXd filled = interp;
    for (int iter = 0; iter < 60; ++iter) {
      const Eigen::VectorXd trend = moving_average_trend(filled, P);
      std::vector<double> phase_sum(static_cast<std::size_t>(P), 0.0);
      std::vector<Eigen::Index> phase_count(static_cast<std::size_t>(P), 0);
      for (Eigen::Index t = 0; t < ds.rows(); ++t) {
        if (missing[static_cast<std::size_t>(t)]) continue;
        const auto ph = static_cast<std::size_t>(t % P);
        phase_sum[ph] += col(t) - trend(t);
        ++phase_count[ph];
      }
      double max_change = 0.0;
      for (Eigen::Index t = 0; t < ds.rows(); ++t) {
        if (!missing[static_cast<std::size_t>(t)]) continue;
        const auto ph = static_cast<std::size_t>(t % P);
        const double next =
            phase_count[ph] > 0
                ? trend(t) +
                      phase_sum[ph] / static_cast<double>(phase_count[ph])
                : interp(t);
        max_change = std::max(max_change, std::abs(next - filled(t)));
        filled(t) = next;
      }
      if (max_change < 1e-10) break;
    }
    X.col(j) = filled;
  }
  return X;
}

}  // namespace tsimpute
