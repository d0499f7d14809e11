#pragma once

#include <cstdint>
#include <vector>

#include "tsimpute/design.hpp"
#include "tsimpute/imputation.hpp"
#include "tsimpute/rng.hpp"

namespace tsimpute {

/// One conditional regression fit: least-squares coefficients over the
/// observed rows and the residual SD used for stochastic predictive draws.
struct ConditionalFit {
  Eigen::VectorXd coef;
  double resid_sd = 0.0;
  int target = 0;
};

/// Fits the conditional model for one target over `obs_rows`. Falls back to
/// ridge (penalty 1e-8) on rank deficiency and to an intercept-only model
/// when the observed rows cannot support the full design.
ConditionalFit fit_conditional(const LaggedDesign& design,
                               const Eigen::VectorXd& y,
                               const std::vector<int>& obs_rows,
                               double sigma_floor = 1e-8);

/// Draws z' beta + resid_sd * xi with xi standard normal.
double draw_predictive(const ConditionalFit& fit, const Eigen::VectorXd& z,
                       Rng& rng);

enum class VisitOrder { ColumnOrder, AscendingMissing };

/// Columns with missing cells in the order a sweep visits them.
std::vector<int> mice_visit_sequence(const TimeSeriesDataset& ds,
                                     VisitOrder order);

struct MiceConfig {
  int sweeps = 10;       // K
  int imputations = 5;   // m
  int lags_past = 0;
  int lags_future = 0;
  TimeFeatureSpec time_features;
  VisitOrder visit_order = VisitOrder::ColumnOrder;
  std::uint64_t seed = 42;
  double sigma_floor = 1e-8;  // on the standardized scale
};

/// Time-lagged MICE: mean initialization, then K sweeps of fit-and-draw
/// over the columns with missing cells, repeated m times from the same
/// initialization with per-imputation seeds. Sampling runs on the
/// standardized scale; outputs are destandardized and observed cells pass
/// through untouched.
ImputationResult run_mice(const TimeSeriesDataset& ds, const MiceConfig& cfg);

}  // namespace tsimpute
