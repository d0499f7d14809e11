#include "tsimpute/mice.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace tsimpute {

ConditionalFit fit_conditional(const LaggedDesign& design,
                               const Eigen::VectorXd& y,
                               const std::vector<int>& obs_rows,
                               double sigma_floor) {
  const Eigen::Index d = design.dim();
  const auto n_obs = static_cast<Eigen::Index>(obs_rows.size());

  ConditionalFit fit;
  fit.target = design.target;

  if (n_obs <= d) {
    // Intercept-only fallback: observed mean and SD.
    if (n_obs == 0) throw std::runtime_error("no observed rows to fit");
    double mean = 0.0;
    for (int r : obs_rows) mean += y(r);
    mean /= static_cast<double>(n_obs);
    double ss = 0.0;
    for (int r : obs_rows) ss += (y(r) - mean) * (y(r) - mean);
    fit.coef = Eigen::VectorXd::Zero(d);
    fit.coef(0) = mean;
    fit.resid_sd = std::max(
        sigma_floor, std::sqrt(ss / std::max<Eigen::Index>(n_obs - 1, 1)));
    return fit;
  }

  Eigen::MatrixXd Z(n_obs, d);
  Eigen::VectorXd yy(n_obs);
  for (Eigen::Index i = 0; i < n_obs; ++i) {
    Z.row(i) = design.Z.row(obs_rows[static_cast<std::size_t>(i)]);
    yy(i) = y(obs_rows[static_cast<std::size_t>(i)]);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
  if (qr.rank() < d) {
    // Ridge fallback keeps the solve well posed under collinearity.
    const Eigen::MatrixXd gram =
        Z.transpose() * Z + 1e-8 * Eigen::MatrixXd::Identity(d, d);
    fit.coef = gram.ldlt().solve(Z.transpose() * yy);
  } else {
    fit.coef = qr.solve(yy);
  }

  const double ssr = (yy - Z * fit.coef).squaredNorm();
  fit.resid_sd =
      std::max(sigma_floor, std::sqrt(ssr / static_cast<double>(n_obs - d)));
  return fit;
}

double draw_predictive(const ConditionalFit& fit, const Eigen::VectorXd& z,
                       Rng& rng) {
  if (!z.allFinite())
    throw std::runtime_error("predictor vector contains non-finite values");
  if (z.size() != fit.coef.size())
    throw std::runtime_error("predictor dimension does not match fit");
  return fit.coef.dot(z) + fit.resid_sd * rng.normal();
}

std::vector<int> mice_visit_sequence(const TimeSeriesDataset& ds,
                                     VisitOrder order) {
  std::vector<int> cols = ds.mask.missing_columns();
  if (order == VisitOrder::AscendingMissing) {
    std::stable_sort(cols.begin(), cols.end(), [&](int a, int b) {
      return ds.mask.miss_rows(a).size() < ds.mask.miss_rows(b).size();
    });
  }
  return cols;
}

ImputationResult run_mice(const TimeSeriesDataset& ds, const MiceConfig& cfg) {
  if (cfg.sweeps < 1 || cfg.imputations < 1)
    throw std::runtime_error("sweep and imputation counts must be >= 1");

  ImputationResult result;
  result.base = ds;
  result.method = "mice";
  result.base_seed = cfg.seed;

  const std::vector<int> targets = mice_visit_sequence(ds, cfg.visit_order);
  if (targets.empty()) {
    std::cerr << "warning: dataset has no missing cells; returning input "
                 "unchanged\n";
    for (int r = 0; r < cfg.imputations; ++r) {
      result.completed.push_back(ds.values);
      result.predictive_mean.push_back(Eigen::MatrixXd::Constant(
          ds.rows(), ds.cols(), std::numeric_limits<double>::quiet_NaN()));
      result.predictive_var.push_back(result.predictive_mean.back());
    }
    pool_imputations(result);
    return result;
  }

  auto [std_ds, params] = standardize(ds);
  const Eigen::MatrixXd init = initialize_mean(std_ds);
  const Timestamps* ts = ds.timestamps ? &*ds.timestamps : nullptr;

  for (int r = 1; r <= cfg.imputations; ++r) {
    Rng rng(mix_seed(cfg.seed + static_cast<std::uint64_t>(r), 0x6d696365ULL));
    Eigen::MatrixXd X = init;
    Eigen::MatrixXd pm = Eigen::MatrixXd::Constant(
        ds.rows(), ds.cols(), std::numeric_limits<double>::quiet_NaN());
    Eigen::MatrixXd pv = pm;

    for (int k = 1; k <= cfg.sweeps; ++k) {
      const bool final_sweep = k == cfg.sweeps;
      const Eigen::MatrixXd before = r == 1 ? X : Eigen::MatrixXd();
      for (int j : targets) {
        const LaggedDesign design =
            build_lagged_design(X, j, cfg.lags_past, cfg.lags_future,
                                cfg.time_features, ts);
        const std::vector<int> obs = std_ds.mask.obs_rows(j);
        const ConditionalFit fit = fit_conditional(
            design, std_ds.values.col(j), obs, cfg.sigma_floor);
        for (int t : std_ds.mask.miss_rows(j)) {
          const Eigen::VectorXd z = design.Z.row(t).transpose();
          X(t, j) = draw_predictive(fit, z, rng);
          if (final_sweep) {
            pm(t, j) = fit.coef.dot(z) * params.sd(j) + params.mean(j);
            pv(t, j) =
                fit.resid_sd * fit.resid_sd * params.sd(j) * params.sd(j);
          }
        }
      }
      if (r == 1) {
        double acc = 0.0;
        Eigen::Index count = 0;
        for (int j : targets)
          for (int t : std_ds.mask.miss_rows(j)) {
            acc += std::abs(X(t, j) - before(t, j));
            ++count;
          }
        result.sweep_mean_abs_change.push_back(
            count > 0 ? acc / static_cast<double>(count) : 0.0);
      }
    }

    // Native-unit output: imputed cells written into a copy of the input
    // so observed cells stay bit-identical.
    Eigen::MatrixXd native = ds.values;
    const Eigen::MatrixXd native_all = destandardize_matrix(X, params);
    for (int j : targets)
      for (int t : std_ds.mask.miss_rows(j)) native(t, j) = native_all(t, j);
    result.completed.push_back(std::move(native));
    result.predictive_mean.push_back(std::move(pm));
    result.predictive_var.push_back(std::move(pv));
  }

  pool_imputations(result);
  return result;
}

}  // namespace tsimpute
