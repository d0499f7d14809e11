#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>

#include "tsimpute/posterior.hpp"
#include "tsimpute/rng.hpp"

namespace tsimpute {

enum class SamplerKind { RwmEmpirical, RwmIdentity, Mala };

std::string sampler_name(SamplerKind kind);

/// One sampler state: parameters plus the cached log posterior (and, for
/// MALA, the cached gradient) at those parameters.
struct ChainState {
  Eigen::VectorXd theta;
  double tau2 = 1.0;
  double log_post = 0.0;
  Eigen::VectorXd grad;  // valid for MALA states only
  long iteration = 0;
};

/// Proposal mechanics for one chain. The scalar `scale` multiplies the
/// base covariance factor and is what burn-in adaptation tunes.
struct ProposalSpec {
  SamplerKind kind = SamplerKind::RwmEmpirical;
  Eigen::MatrixXd sigma;       // theta proposal covariance (RWM)
  Eigen::MatrixXd sigma_chol;  // cached lower Cholesky factor of sigma
  double mala_eps = 1.0;       // step size; proposal covariance eps^2 I
  // log-tau2 random-walk SD (RWM); make_proposal sizes it to the
  // conditional's width, sqrt(2/n_obs).
  double tau_walk_sd = 0.1;
  bool sample_tau2 = true;
  double target_accept = 0.25;
  double scale = 1.0;
};

/// Post-burn-in draws of one chain with acceptance bookkeeping and the
/// full per-iteration trace for export.
struct PosteriorDraws {
  Eigen::MatrixXd draws;  // S_kept x (d+1); last column is tau2
  long accepted = 0;      // accepted theta moves, whole run
  long proposed = 0;
  long accepted_post_burnin = 0;
  long proposed_post_burnin = 0;
  SamplerKind kind = SamplerKind::RwmEmpirical;
  std::uint64_t seed = 0;
  double burn_in = 0.0;
  double final_scale = 1.0;
  Eigen::MatrixXd trace;  // S x (d+3): theta..., tau2, log_post, accepted

  double acceptance_rate() const {
    return proposed_post_burnin > 0
               ? static_cast<double>(accepted_post_burnin) /
                     static_cast<double>(proposed_post_burnin)
               : 0.0;
  }
};

/// RWM proposal covariance: (2.38^2/d) * Sigma_empirical + eps_reg * I when
/// at least d+5 design rows are available, (2.38^2/d) * I otherwise.
Eigen::MatrixXd rwm_proposal_cov(const Eigen::MatrixXd& design_rows,
                                 double eps_reg = 1e-6);

/// MALA step size 1.65^2 / d^(1/3); the proposal covariance is eps^2 I.
double mala_step_size(int d);

/// Builds the proposal for a problem, picking the empirical or identity
/// RWM covariance by the d+5 rule. `variance_convention` reads the optimal
/// scaling constant as a variance rather than a step size.
ProposalSpec make_proposal(SamplerKind kind, const RegressionProblem& prob,
                           bool variance_convention = false);

/// Initializes a chain state with cached log posterior (and gradient when
/// the sampler needs it).
ChainState make_chain_state(const Eigen::VectorXd& theta, double tau2,
                            const RegressionProblem& prob,
                            const PriorSpec& prior, SamplerKind kind);

/// One joint random-walk Metropolis move: Gaussian step on theta plus a
/// log-scale random walk on tau2 (Jacobian-corrected), accepted or
/// rejected as one block. Returns the acceptance probability used.
double rwm_step(ChainState& state, const ProposalSpec& spec,
                const RegressionProblem& prob, const PriorSpec& prior,
                Rng& rng, bool* accepted = nullptr);

/// One MALA move on theta (Langevin drift, full asymmetric MH ratio),
/// followed by a Gibbs refresh of tau2 when enabled.
double mala_step(ChainState& state, const ProposalSpec& spec,
                 const RegressionProblem& prob, const PriorSpec& prior,
                 Rng& rng, bool* accepted = nullptr);

/// Langevin proposal mean: theta + (eps^2/2) * grad.
Eigen::VectorXd mala_drift(const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& grad, double eps);

/// Exact conditional draw tau2 ~ IG(v1 + n/2, v2 + SSR(theta)/2).
double gibbs_tau2(const Eigen::VectorXd& theta, const RegressionProblem& prob,
                  const PriorSpec& prior, Rng& rng);

struct ChainOptions {
  long iterations = 5000;
  double burn_in = 0.2;
  bool adapt = true;
  std::uint64_t seed = 0;  // bookkeeping only; draws come from the rng
  bool record_trace = true;
};

/// Runs S iterations of the configured kernel. During burn-in with
/// adaptation on, the scalar proposal scale moves multiplicatively by a
/// Robbins-Monro update toward the target band midpoint (coarse gain for
/// the first half of burn-in, fine gain after) and freezes once burn-in
/// ends. Throws after 1000 consecutive rejections.
PosteriorDraws run_chain(ProposalSpec spec, const RegressionProblem& prob,
                         const PriorSpec& prior, const ChainState& init,
                         const ChainOptions& opts, Rng& rng);

/// Trace CSV: iteration, theta_1..theta_d, tau2, log_posterior, accepted.
void write_trace_csv(const PosteriorDraws& draws,
                     const std::filesystem::path& path);

}  // namespace tsimpute
