#include "tsimpute/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "tsimpute/csv.hpp"

namespace tsimpute {

std::string sampler_name(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::RwmEmpirical: return "rwm";
    case SamplerKind::RwmIdentity: return "rwm-identity";
    case SamplerKind::Mala: return "mala";
  }
  return "unknown";
}

Eigen::MatrixXd rwm_proposal_cov(const Eigen::MatrixXd& design_rows,
                                 double eps_reg) {
  const Eigen::Index n = design_rows.rows(), d = design_rows.cols();
  if (n == 0) throw std::runtime_error("empty design matrix");
  const double factor = 2.38 * 2.38 / static_cast<double>(d);
  if (n < d + 5)
    return factor * Eigen::MatrixXd::Identity(d, d);
  // Uncentered second moment: with the bias column included, a centered
  // covariance would zero that direction and freeze the intercept; the
  // uncentered form gives it unit scale and coincides with the covariance
  // for standardized predictors.
  const Eigen::MatrixXd emp =
      design_rows.transpose() * design_rows / static_cast<double>(n);
  return factor * emp + eps_reg * Eigen::MatrixXd::Identity(d, d);
}

double mala_step_size(int d) {
  return 1.65 * 1.65 / std::cbrt(static_cast<double>(d));
}

ProposalSpec make_proposal(SamplerKind kind, const RegressionProblem& prob,
                           bool variance_convention) {
  ProposalSpec spec;
  spec.kind = kind;
  const int d = static_cast<int>(prob.dim());
  if (kind == SamplerKind::Mala) {
    spec.mala_eps = variance_convention ? std::sqrt(mala_step_size(d))
                                        : mala_step_size(d);
    spec.target_accept = 0.60;
  } else {
    spec.sigma = kind == SamplerKind::RwmIdentity
                     ? (2.38 * 2.38 / d) *
                           Eigen::MatrixXd::Identity(d, d)
                     : rwm_proposal_cov(prob.Z);
    Eigen::LLT<Eigen::MatrixXd> llt(spec.sigma);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("proposal covariance is not positive definite");
    spec.sigma_chol = llt.matrixL();
    spec.target_accept = 0.25;
  }
  // One posterior SD of log tau2 under the Gaussian model.
  spec.tau_walk_sd = std::clamp(
      std::sqrt(2.0 / static_cast<double>(prob.n_obs())), 0.02, 0.30);
  return spec;
}

ChainState make_chain_state(const Eigen::VectorXd& theta, double tau2,
                            const RegressionProblem& prob,
                            const PriorSpec& prior, SamplerKind kind) {
  ChainState state;
  state.theta = theta;
  state.tau2 = tau2;
  state.log_post = log_posterior(theta, tau2, prob, prior);
  if (kind == SamplerKind::Mala)
    state.grad = grad_log_posterior_theta(theta, tau2, prob, prior);
  return state;
}

double rwm_step(ChainState& state, const ProposalSpec& spec,
                const RegressionProblem& prob, const PriorSpec& prior,
                Rng& rng, bool* accepted) {
  const Eigen::Index d = state.theta.size();
  Eigen::VectorXd xi(d);
  for (Eigen::Index i = 0; i < d; ++i) xi(i) = rng.normal();
  Eigen::VectorXd theta_prop =
      state.theta + spec.scale * (spec.sigma_chol * xi);

  double tau2_prop = state.tau2;
  double jacobian = 0.0;
  if (spec.sample_tau2) {
    // The tau walk keeps its own fixed scale; the adapted multiplier only
    // sizes the theta block.
    const double step = spec.tau_walk_sd * rng.normal();
    tau2_prop = state.tau2 * std::exp(step);
    jacobian = std::log(tau2_prop / state.tau2);
  }

  double lp_prop;
  try {
    lp_prop = log_posterior(theta_prop, tau2_prop, prob, prior);
  } catch (const std::exception&) {
    lp_prop = -std::numeric_limits<double>::infinity();
  }

  double alpha = 0.0;
  if (std::isfinite(lp_prop))
    alpha = std::min(1.0, std::exp(lp_prop - state.log_post + jacobian));
  const bool accept = rng.uniform() < alpha;
  if (accept) {
    state.theta = std::move(theta_prop);
    state.tau2 = tau2_prop;
    state.log_post = lp_prop;
  }
  ++state.iteration;
  if (accepted) *accepted = accept;
  return alpha;
}

Eigen::VectorXd mala_drift(const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& grad, double eps) {
  return theta + 0.5 * eps * eps * grad;
}

double mala_step(ChainState& state, const ProposalSpec& spec,
                 const RegressionProblem& prob, const PriorSpec& prior,
                 Rng& rng, bool* accepted) {
  const Eigen::Index d = state.theta.size();
  const double eps = spec.scale * spec.mala_eps;

  const Eigen::VectorXd mean_fwd = mala_drift(state.theta, state.grad, eps);
  Eigen::VectorXd xi(d);
  for (Eigen::Index i = 0; i < d; ++i) xi(i) = rng.normal();
  const Eigen::VectorXd theta_prop = mean_fwd + eps * xi;

  double alpha = 0.0;
  bool accept = false;
  Eigen::VectorXd grad_prop;
  double lp_prop = -std::numeric_limits<double>::infinity();
  bool proposal_ok = theta_prop.allFinite();
  if (proposal_ok) {
    grad_prop = grad_log_posterior_theta(theta_prop, state.tau2, prob, prior);
    proposal_ok = grad_prop.allFinite();
  }
  if (proposal_ok) {
    lp_prop = log_posterior(theta_prop, state.tau2, prob, prior);
    const Eigen::VectorXd mean_rev = mala_drift(theta_prop, grad_prop, eps);
    const double log_q_fwd =
        -(theta_prop - mean_fwd).squaredNorm() / (2.0 * eps * eps);
    const double log_q_rev =
        -(state.theta - mean_rev).squaredNorm() / (2.0 * eps * eps);
    if (std::isfinite(lp_prop))
      alpha = std::min(
          1.0, std::exp(lp_prop - state.log_post + log_q_rev - log_q_fwd));
    accept = rng.uniform() < alpha;
  }
  if (accept) {
    state.theta = theta_prop;
    state.log_post = lp_prop;
    state.grad = grad_prop;
  }

  if (spec.sample_tau2) {
    state.tau2 = gibbs_tau2(state.theta, prob, prior, rng);
    state.log_post = log_posterior(state.theta, state.tau2, prob, prior);
    state.grad = grad_log_posterior_theta(state.theta, state.tau2, prob, prior);
  }
  ++state.iteration;
  if (accepted) *accepted = accept;
  return alpha;
}

double gibbs_tau2(const Eigen::VectorXd& theta, const RegressionProblem& prob,
                  const PriorSpec& prior, Rng& rng) {
  const double ssr = (prob.y - prob.Z * theta).squaredNorm();
  const double shape = prior.v1 + 0.5 * static_cast<double>(prob.n_obs());
  const double ig_scale = prior.v2 + 0.5 * ssr;
  // If G ~ Gamma(shape, rate b) then 1/G ~ IG(shape, b).
  const double g = rng.gamma(shape, 1.0 / ig_scale);
  return 1.0 / g;
}

PosteriorDraws run_chain(ProposalSpec spec, const RegressionProblem& prob,
                         const PriorSpec& prior, const ChainState& init,
                         const ChainOptions& opts, Rng& rng) {
  if (opts.iterations < 10)
    throw std::runtime_error("chain needs at least 10 iterations");
  if (opts.burn_in < 0.0 || opts.burn_in >= 1.0)
    throw std::runtime_error("burn-in fraction must lie in [0,1)");

  const long S = opts.iterations;
  const long burn = static_cast<long>(std::floor(opts.burn_in * S));
  const Eigen::Index d = init.theta.size();

  PosteriorDraws out;
  out.kind = spec.kind;
  out.seed = opts.seed;
  out.burn_in = opts.burn_in;
  out.draws.resize(S - burn, d + 1);
  if (opts.record_trace) out.trace.resize(S, d + 3);

  ChainState state = init;
  long consecutive_rejects = 0;
  double log_scale = std::log(spec.scale);

  for (long s = 0; s < S; ++s) {
    bool accepted = false;
    const double alpha =
        spec.kind == SamplerKind::Mala
            ? mala_step(state, spec, prob, prior, rng, &accepted)
            : rwm_step(state, spec, prob, prior, rng, &accepted);

    ++out.proposed;
    if (accepted) ++out.accepted;
    if (s >= burn) {
      ++out.proposed_post_burnin;
      if (accepted) ++out.accepted_post_burnin;
    }

    consecutive_rejects = accepted ? 0 : consecutive_rejects + 1;
    if (consecutive_rejects >= 1000)
      throw std::runtime_error(
          "sampler stalled: 1000 consecutive rejected proposals");

    if (opts.adapt && s < burn) {
      // Robbins-Monro toward the target band midpoint: a coarse gain for
      // the first half of burn-in closes the gap between the
      // predictor-covariance proposal width and the posterior scale, then
      // a fine gain settles the rate. Frozen after burn-in.
      const double gain = s < burn / 2 ? 0.05 : 0.01;
      log_scale += gain * (alpha - spec.target_accept);
      spec.scale = std::exp(log_scale);
    }

    if (s >= burn) {
      out.draws.row(s - burn).head(d) = state.theta.transpose();
      out.draws(s - burn, d) = state.tau2;
    }
    if (opts.record_trace) {
      out.trace.row(s).head(d) = state.theta.transpose();
      out.trace(s, d) = state.tau2;
      out.trace(s, d + 1) = state.log_post;
      out.trace(s, d + 2) = accepted ? 1.0 : 0.0;
    }
  }
  out.final_scale = spec.scale;
  return out;
}

void write_trace_csv(const PosteriorDraws& draws,
                     const std::filesystem::path& path) {
  const Eigen::Index cols = draws.trace.cols();
  const Eigen::Index d = cols - 3;
  std::ostringstream out;
  out << "iteration";
  for (Eigen::Index i = 0; i < d; ++i) out << ",theta_" << (i + 1);
  out << ",tau2,log_posterior,accepted\n";
  for (Eigen::Index s = 0; s < draws.trace.rows(); ++s) {
    out << s;
    for (Eigen::Index i = 0; i < d; ++i)
      out << ',' << csv::format_short(draws.trace(s, i));
    out << ',' << csv::format_short(draws.trace(s, d)) << ','
        << csv::format_short(draws.trace(s, d + 1)) << ','
        << static_cast<int>(draws.trace(s, d + 2)) << '\n';
  }
  csv::write_text_atomic(path, out.str());
}

}  // namespace tsimpute
