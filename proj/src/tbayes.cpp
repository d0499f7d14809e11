#include "tsimpute/tbayes.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "tsimpute/metrics.hpp"

namespace tsimpute {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

RegressionProblem make_problem(const LaggedDesign& design,
                               const Eigen::VectorXd& y,
                               const std::vector<int>& obs_rows) {
  RegressionProblem prob;
  const auto n = static_cast<Eigen::Index>(obs_rows.size());
  prob.Z.resize(n, design.dim());
  prob.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    prob.Z.row(i) = design.Z.row(obs_rows[static_cast<std::size_t>(i)]);
    prob.y(i) = y(obs_rows[static_cast<std::size_t>(i)]);
  }
  return prob;
}

// Starting multiplier that matches the proposal width to the Laplace
// posterior scale sqrt(tau2/n); burn-in adaptation refines from there.
double laplace_start_scale(const ProposalSpec& spec,
                           const RegressionProblem& prob, double tau2) {
  const double post_sd =
      std::sqrt(tau2 / std::max<double>(1.0, static_cast<double>(prob.n_obs())));
  if (spec.kind == SamplerKind::Mala)
    return std::max(1e-6, post_sd / spec.mala_eps);
  const double prop_sd =
      std::sqrt(std::max(1e-12, spec.sigma.diagonal().mean()));
  return std::max(1e-6, post_sd / prop_sd);
}

// Ridge-regularized least squares start for a chain.
void ls_start(const RegressionProblem& prob, Eigen::VectorXd& theta,
              double& tau2) {
  const Eigen::Index d = prob.dim();
  const Eigen::MatrixXd gram =
      prob.Z.transpose() * prob.Z + 1e-6 * Eigen::MatrixXd::Identity(d, d);
  theta = gram.ldlt().solve(prob.Z.transpose() * prob.y);
  const double dof = std::max<double>(1.0, static_cast<double>(prob.n_obs()) -
                                               static_cast<double>(d));
  tau2 = std::max(1e-6, (prob.y - prob.Z * theta).squaredNorm() / dof);
}

}  // namespace

std::string TbmConfig::digest() const {
  std::ostringstream s;
  s << sampler_name(sampler) << '|' << chains << '|' << iterations << '|'
    << burn_in << '|' << sweeps << '|' << imputations << '|' << lags_past
    << '|' << lags_future << '|' << static_cast<int>(init) << '|'
    << prior.sigma2 << '|' << prior.v1 << '|' << prior.v2 << '|' << seed << '|'
    << inner_draws << '|' << adapt << '|' << initial_scale << '|'
    << tau_walk_sd << '|' << mala_variance_convention << '|'
    << time_features.hour_of_day << time_features.day_of_week
    << time_features.linear_index << '|'
    << (period_hint ? *period_hint : -1);
  return fnv1a_hex(s.str());
}

double impute_posterior_predictive(const Eigen::VectorXd& theta, double tau2,
                                   const Eigen::VectorXd& z, Rng& rng) {
  if (!(tau2 >= 0.0) || !theta.allFinite() || !z.allFinite())
    throw std::runtime_error("non-finite posterior predictive inputs");
  return theta.dot(z) + std::sqrt(tau2) * rng.normal();
}

void pool_imputations(ImputationResult& result) {
  const int m = result.imputation_count();
  if (m < 1) throw std::runtime_error("nothing to pool");
  const Eigen::Index n = result.base.rows(), p = result.base.cols();

  result.pooled = result.base.values;
  result.within_var = Eigen::MatrixXd::Constant(n, p, kNaN);
  result.between_var = Eigen::MatrixXd::Constant(n, p, kNaN);
  result.total_var = Eigen::MatrixXd::Constant(n, p, kNaN);

  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!result.base.mask.flags(t, j)) continue;
      double sum = 0.0;
      for (int r = 0; r < m; ++r) sum += result.completed[r](t, j);
      const double mean = sum / m;
      double b = 0.0;
      if (m > 1) {
        for (int r = 0; r < m; ++r) {
          const double d = result.completed[r](t, j) - mean;
          b += d * d;
        }
        b /= m - 1;
      }
      double w = 0.0;
      for (int r = 0; r < m; ++r) w += result.predictive_var[r](t, j);
      w /= m;
      result.pooled(t, j) = mean;
      result.between_var(t, j) = b;
      result.within_var(t, j) = w;
      result.total_var(t, j) = w + (1.0 + 1.0 / m) * b;
    }
  }
}

namespace {

struct SweepContext {
  ChainState state;
  double scale = 1.0;
  bool started = false;
};

}  // namespace

ImputationResult run_tbayes_mice(const TimeSeriesDataset& ds,
                                 const TbmConfig& cfg) {
  if (cfg.sweeps < 1 || cfg.imputations < 1 || cfg.inner_draws < 10)
    throw std::runtime_error("invalid tbayes configuration");

  ImputationResult result;
  result.base = ds;
  result.method = "tbayes";
  result.sampler = sampler_name(cfg.sampler);
  result.base_seed = cfg.seed;
  result.config_hash = cfg.digest();

  const std::vector<int> targets = ds.mask.missing_columns();
  if (targets.empty()) {
    std::cerr << "warning: dataset has no missing cells; returning input "
                 "unchanged\n";
    for (int r = 0; r < cfg.imputations; ++r) {
      result.completed.push_back(ds.values);
      result.predictive_mean.push_back(
          Eigen::MatrixXd::Constant(ds.rows(), ds.cols(), kNaN));
      result.predictive_var.push_back(result.predictive_mean.back());
    }
    pool_imputations(result);
    return result;
  }

  auto [std_ds, params] = standardize(ds);
  const Eigen::MatrixXd init =
      cfg.init == InitKind::Mean
          ? initialize_mean(std_ds)
          : initialize_time_aware(std_ds, cfg.period_hint);
  const Timestamps* ts = ds.timestamps ? &*ds.timestamps : nullptr;

  for (int r = 1; r <= cfg.imputations; ++r) {
    const std::uint64_t seed_r = cfg.seed + static_cast<std::uint64_t>(r);
    Rng root(seed_r);
    Eigen::MatrixXd X = init;
    Eigen::MatrixXd pm = Eigen::MatrixXd::Constant(ds.rows(), ds.cols(), kNaN);
    Eigen::MatrixXd pv = pm;
    std::map<int, SweepContext> contexts;

    for (int k = 1; k <= cfg.sweeps; ++k) {
      const bool final_sweep = k == cfg.sweeps;
      for (int j : targets) {
        const LaggedDesign design = build_lagged_design(
            X, j, cfg.lags_past, cfg.lags_future, cfg.time_features, ts);
        const std::vector<int> obs = std_ds.mask.obs_rows(j);
        const RegressionProblem prob =
            make_problem(design, std_ds.values.col(j), obs);

        SweepContext& ctx = contexts[j];
        ProposalSpec spec =
            make_proposal(cfg.sampler, prob, cfg.mala_variance_convention);
        spec.sample_tau2 = true;
        if (cfg.tau_walk_sd > 0.0) spec.tau_walk_sd = cfg.tau_walk_sd;
        if (!ctx.started) {
          Eigen::VectorXd theta0;
          double tau0 = 1.0;
          ls_start(prob, theta0, tau0);
          ctx.state = make_chain_state(theta0, tau0, prob, cfg.prior,
                                       cfg.sampler);
          ctx.scale = cfg.initial_scale * laplace_start_scale(spec, prob, tau0);
          ctx.started = true;
        } else {
          // Warm start against the refreshed target.
          ctx.state = make_chain_state(ctx.state.theta, ctx.state.tau2, prob,
                                       cfg.prior, cfg.sampler);
        }
        spec.scale = ctx.scale;

        ChainOptions opts;
        opts.iterations = cfg.inner_draws;
        opts.burn_in = cfg.burn_in;
        opts.adapt = cfg.adapt;
        opts.seed = seed_r;
        opts.record_trace = false;

        Rng chain_rng = root.derive(static_cast<std::uint64_t>(j),
                                    static_cast<std::uint64_t>(k), 1);
        PosteriorDraws draws;
        try {
          draws =
              run_chain(spec, prob, cfg.prior, ctx.state, opts, chain_rng);
        } catch (const std::exception& e) {
          throw std::runtime_error("sampler failure on variable " +
                                   ds.names[j] + ", sweep " +
                                   std::to_string(k) + ": " + e.what());
        }
        ctx.scale = draws.final_scale;

        const Eigen::Index d = design.dim();
        const Eigen::Index kept = draws.draws.rows();
        ctx.state = make_chain_state(
            draws.draws.row(kept - 1).head(d).transpose(),
            draws.draws(kept - 1, d), prob, cfg.prior, cfg.sampler);

        // Impute from the sweep's final posterior draw.
        Rng cell_rng = root.derive(static_cast<std::uint64_t>(j),
                                   static_cast<std::uint64_t>(k), 2);
        for (int t : std_ds.mask.miss_rows(j)) {
          const Eigen::VectorXd z = design.Z.row(t).transpose();
          X(t, j) = impute_posterior_predictive(ctx.state.theta,
                                                ctx.state.tau2, z, cell_rng);
          if (final_sweep) {
            // Predictive mean/variance across the retained draws
            // (law of total variance over the sampled parameters).
            double mean_acc = 0.0, sq_acc = 0.0, tau_acc = 0.0;
            for (Eigen::Index s = 0; s < kept; ++s) {
              const double fit = draws.draws.row(s).head(d).dot(z);
              mean_acc += fit;
              sq_acc += fit * fit;
              tau_acc += draws.draws(s, d);
            }
            const double mu = mean_acc / static_cast<double>(kept);
            const double var_fit =
                sq_acc / static_cast<double>(kept) - mu * mu;
            const double var_pred =
                tau_acc / static_cast<double>(kept) + std::max(0.0, var_fit);
            pm(t, j) = mu * params.sd(j) + params.mean(j);
            pv(t, j) = var_pred * params.sd(j) * params.sd(j);
          }
        }
      }
    }

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

std::vector<VariableDiagnostics> run_diagnostic_chains(
    const TimeSeriesDataset& ds, const TbmConfig& cfg) {
  if (cfg.chains < 1) throw std::runtime_error("need at least one chain");
  const std::vector<int> targets = ds.mask.missing_columns();
  if (targets.empty())
    throw std::runtime_error("dataset has no missing cells to diagnose");

  // One imputation pass to the final sweep gives the working matrix the
  // long chains are conditioned on.
  TbmConfig warm = cfg;
  warm.imputations = 1;
  auto [std_ds, params] = standardize(ds);
  const Eigen::MatrixXd init =
      cfg.init == InitKind::Mean
          ? initialize_mean(std_ds)
          : initialize_time_aware(std_ds, cfg.period_hint);
  const Timestamps* ts = ds.timestamps ? &*ds.timestamps : nullptr;

  Rng root(cfg.seed + 1);
  Eigen::MatrixXd X = init;
  std::map<int, SweepContext> contexts;
  for (int k = 1; k <= cfg.sweeps; ++k) {
    for (int j : targets) {
      const LaggedDesign design = build_lagged_design(
          X, j, cfg.lags_past, cfg.lags_future, cfg.time_features, ts);
      const std::vector<int> obs = std_ds.mask.obs_rows(j);
      const RegressionProblem prob =
          make_problem(design, std_ds.values.col(j), obs);
      SweepContext& ctx = contexts[j];
      ProposalSpec spec =
          make_proposal(cfg.sampler, prob, cfg.mala_variance_convention);
      if (cfg.tau_walk_sd > 0.0) spec.tau_walk_sd = cfg.tau_walk_sd;
      if (!ctx.started) {
        Eigen::VectorXd theta0;
        double tau0 = 1.0;
        ls_start(prob, theta0, tau0);
        ctx.state =
            make_chain_state(theta0, tau0, prob, cfg.prior, cfg.sampler);
        ctx.scale = cfg.initial_scale * laplace_start_scale(spec, prob, tau0);
        ctx.started = true;
      } else {
        ctx.state = make_chain_state(ctx.state.theta, ctx.state.tau2, prob,
                                     cfg.prior, cfg.sampler);
      }
      spec.scale = ctx.scale;
      ChainOptions opts;
      opts.iterations = cfg.inner_draws;
      opts.burn_in = cfg.burn_in;
      opts.adapt = cfg.adapt;
      opts.record_trace = false;
      Rng chain_rng = root.derive(static_cast<std::uint64_t>(j),
                                  static_cast<std::uint64_t>(k), 1);
      PosteriorDraws draws =
          run_chain(spec, prob, cfg.prior, ctx.state, opts, chain_rng);
      ctx.scale = draws.final_scale;
      const Eigen::Index d = design.dim();
      const Eigen::Index kept = draws.draws.rows();
      ctx.state = make_chain_state(
          draws.draws.row(kept - 1).head(d).transpose(),
          draws.draws(kept - 1, d), prob, cfg.prior, cfg.sampler);
      Rng cell_rng = root.derive(static_cast<std::uint64_t>(j),
                                 static_cast<std::uint64_t>(k), 2);
      for (int t : std_ds.mask.miss_rows(j))
        X(t, j) = impute_posterior_predictive(ctx.state.theta, ctx.state.tau2,
                                              design.Z.row(t).transpose(),
                                              cell_rng);
    }
  }

  // Final-sweep long chains, over-dispersed starts.
  std::vector<VariableDiagnostics> all;
  for (int j : targets) {
    VariableDiagnostics diag;
    diag.variable = ds.names[j];
    const LaggedDesign design = build_lagged_design(
        X, j, cfg.lags_past, cfg.lags_future, cfg.time_features, ts);
    diag.problem =
        make_problem(design, std_ds.values.col(j), std_ds.mask.obs_rows(j));

    Eigen::VectorXd theta_ls;
    double tau_ls = 1.0;
    ls_start(diag.problem, theta_ls, tau_ls);

    for (int c = 0; c < cfg.chains; ++c) {
      Rng chain_rng = root.derive(static_cast<std::uint64_t>(j), 0xd1a6,
                                  static_cast<std::uint64_t>(c));
      Eigen::VectorXd theta0 = theta_ls;
      for (Eigen::Index i = 0; i < theta0.size(); ++i)
        theta0(i) += 2.0 * std::sqrt(tau_ls) * chain_rng.normal();
      const double tau0 = tau_ls * std::exp(chain_rng.normal());

      ProposalSpec spec =
          make_proposal(cfg.sampler, diag.problem, cfg.mala_variance_convention);
      if (cfg.tau_walk_sd > 0.0) spec.tau_walk_sd = cfg.tau_walk_sd;
      spec.scale = cfg.initial_scale;
      ChainOptions opts;
      opts.iterations = cfg.iterations;
      opts.burn_in = cfg.burn_in;
      opts.adapt = cfg.adapt;
      opts.seed = chain_rng.seed();
      ChainState start = make_chain_state(theta0, tau0, diag.problem,
                                          cfg.prior, cfg.sampler);
      diag.chains.push_back(run_chain(spec, diag.problem, cfg.prior, start,
                                      opts, chain_rng));
    }
    all.push_back(std::move(diag));
  }
  return all;
}

std::map<std::string, AblationEntry> run_ablation(const TimeSeriesDataset& ds,
                                                  const GroundTruthMask& truth,
                                                  const TbmConfig& cfg) {
  TbmConfig v1 = cfg;
  v1.init = InitKind::Mean;
  TbmConfig v2 = cfg;
  v2.init = InitKind::TimeAware;

  const ImputationResult r1 = run_tbayes_mice(ds, v1);
  const ImputationResult r2 = run_tbayes_mice(ds, v2);

  std::map<std::string, AblationEntry> out;
  for (Eigen::Index j = 0; j < ds.cols(); ++j) {
    std::vector<double> pred1, pred2, actual;
    for (Eigen::Index t = 0; t < ds.rows(); ++t) {
      if (!truth.injected(t, j)) continue;
      pred1.push_back(r1.pooled(t, j));
      pred2.push_back(r2.pooled(t, j));
      actual.push_back(truth.true_values(t, j));
    }
    if (actual.empty()) continue;
    AblationEntry entry;
    entry.nmae_mean_init = nmae(pred1, actual);
    entry.nrmse_mean_init = nrmse(pred1, actual);
    entry.nmae_time_aware = nmae(pred2, actual);
    entry.nrmse_time_aware = nrmse(pred2, actual);
    out[ds.names[j]] = entry;
  }
  return out;
}

}  // namespace tsimpute
