#pragma once

#include <Eigen/Dense>

namespace tsimpute {

/// Weakly informative priors for one conditional regression:
/// theta ~ N(0, sigma2 * I), tau2 ~ inverse-Gamma(v1, v2) with density
/// proportional to tau2^-(v1+1) * exp(-v2 / tau2) (shape/scale convention).
struct PriorSpec {
  double sigma2 = 100.0;
  double v1 = 2.0;
  double v2 = 1.0;
};

/// Observed-row regression data for one target variable: design rows over
/// I_obs(j) and the matching responses.
struct RegressionProblem {
  Eigen::MatrixXd Z;  // n_obs x d
  Eigen::VectorXd y;  // n_obs

  Eigen::Index n_obs() const { return Z.rows(); }
  Eigen::Index dim() const { return Z.cols(); }
};

/// Gaussian log-likelihood of the observed responses:
/// -(n/2) log(2 pi tau2) - SSR / (2 tau2).
double log_likelihood(const Eigen::VectorXd& theta, double tau2,
                      const RegressionProblem& prob);

/// Log prior density of (theta, tau2), normalizing constants included.
double log_prior(const Eigen::VectorXd& theta, double tau2,
                 const PriorSpec& prior);

double log_posterior(const Eigen::VectorXd& theta, double tau2,
                     const RegressionProblem& prob, const PriorSpec& prior);

/// Gradient of the log posterior in theta: Z'(y - Z theta)/tau2 - theta/sigma2.
Eigen::VectorXd grad_log_posterior_theta(const Eigen::VectorXd& theta,
                                         double tau2,
                                         const RegressionProblem& prob,
                                         const PriorSpec& prior);

}  // namespace tsimpute
