#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsimpute/posterior.hpp"
#include "tsimpute/samplers.hpp"

namespace tsimpute {

/// Split Gelman-Rubin statistic. `degenerate` flags zero within-chain
/// variance (constant chains), where the ratio is undefined.
struct RhatResult {
  double value = 1.0;
  bool degenerate = false;
};

/// Split R-hat over C chains of S draws each: chains are halved into 2C
/// sub-chains, and the statistic is sqrt(V_hat / W).
RhatResult split_rhat(const std::vector<Eigen::VectorXd>& chains);

/// Rank-normalized bulk effective sample size with Geyer
/// initial-monotone-positive-pair truncation, capped at C*S.
double ess_bulk(const std::vector<Eigen::VectorXd>& chains);

/// Shortest contiguous interval over the sorted sample containing
/// ceil(mass * N) draws; ties break toward the earliest window.
std::pair<double, double> hdi(const Eigen::VectorXd& samples,
                              double mass = 0.94);

/// One row of a convergence table.
struct ParamSummary {
  std::string param;
  double mean = 0.0;
  double sd = 0.0;
  double hdi_low = 0.0;
  double hdi_high = 0.0;
  double ess = 0.0;
  RhatResult rhat;
};

struct DiagnosticsSummary {
  std::vector<ParamSummary> params;
  std::vector<double> chain_acceptance;

  /// Convergence verdict: every parameter at R-hat < 1.05 and bulk
  /// ESS > 400 (the MC-standard-error reading of the SD rule coincides
  /// with the ESS threshold).
  bool converged() const;
};

/// Summarizes multi-chain draws parameter-wise: rows b, w_1..w_{d-1},
/// tau (the SD scale, sqrt of the tau2 draws), plus a derived
/// goodness-of-fit RMSE row when the regression problem is supplied.
DiagnosticsSummary summarize(const std::vector<PosteriorDraws>& chains,
                             const RegressionProblem* prob = nullptr);

/// CSV with columns: param, mean, sd, hdi_3, hdi_97, ess, rhat.
void write_summary_csv(const DiagnosticsSummary& summary,
                       const std::filesystem::path& path);

/// Inverse standard-normal CDF (Acklam's rational approximation).
double inverse_normal_cdf(double p);

}  // namespace tsimpute
