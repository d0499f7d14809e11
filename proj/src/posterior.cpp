#include "tsimpute/posterior.hpp"

#include <cmath>
#include <stdexcept>

namespace tsimpute {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

void check_inputs(const Eigen::VectorXd& theta, double tau2,
                  const RegressionProblem& prob) {
  if (tau2 <= 0.0) throw std::runtime_error("tau2 must be positive");
  if (theta.size() != prob.dim())
    throw std::runtime_error("theta dimension does not match design");
}
}  // namespace

double log_likelihood(const Eigen::VectorXd& theta, double tau2,
                      const RegressionProblem& prob) {
  check_inputs(theta, tau2, prob);
  const double n = static_cast<double>(prob.n_obs());
  const double ssr = (prob.y - prob.Z * theta).squaredNorm();
  return -0.5 * n * (kLog2Pi + std::log(tau2)) - ssr / (2.0 * tau2);
}

double log_prior(const Eigen::VectorXd& theta, double tau2,
                 const PriorSpec& prior) {
  if (tau2 <= 0.0) throw std::runtime_error("tau2 must be positive");
  const double d = static_cast<double>(theta.size());
  const double gauss = -0.5 * d * (kLog2Pi + std::log(prior.sigma2)) -
                       theta.squaredNorm() / (2.0 * prior.sigma2);
  const double ig = prior.v1 * std::log(prior.v2) - std::lgamma(prior.v1) -
                    (prior.v1 + 1.0) * std::log(tau2) - prior.v2 / tau2;
  return gauss + ig;
}

double log_posterior(const Eigen::VectorXd& theta, double tau2,
                     const RegressionProblem& prob, const PriorSpec& prior) {
  return log_likelihood(theta, tau2, prob) + log_prior(theta, tau2, prior);
}

Eigen::VectorXd grad_log_posterior_theta(const Eigen::VectorXd& theta,
                                         double tau2,
                                         const RegressionProblem& prob,
                                         const PriorSpec& prior) {
  check_inputs(theta, tau2, prob);
  return prob.Z.transpose() * (prob.y - prob.Z * theta) / tau2 -
         theta / prior.sigma2;
}

}  // namespace tsimpute
