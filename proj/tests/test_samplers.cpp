#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <tuple>

#include "test_support.hpp"
#include "tsimpute/diagnostics.hpp"
#include "tsimpute/samplers.hpp"

using namespace tsimpute;

namespace {

// Degenerate regression whose theta posterior is exactly N(0, sigma2):
// a single zero predictor row makes the likelihood flat in theta.
RegressionProblem flat_problem() {
  RegressionProblem prob;
  prob.Z = Eigen::MatrixXd::Zero(1, 1);
  prob.y = Eigen::VectorXd::Zero(1);
  return prob;
}

struct Conjugate {
  RegressionProblem prob;
  PriorSpec prior;
  double tau2 = 0.5;
  Eigen::VectorXd ridge_mean;
};

Conjugate make_conjugate(std::uint64_t seed, int n = 200, int d = 4) {
  Conjugate c;
  Rng rng(mix_seed(seed, 0x5a5));
  c.prob.Z.resize(n, d);
  c.prob.y.resize(n);
  Eigen::VectorXd theta(d);
  for (int j = 0; j < d; ++j) theta(j) = rng.normal();
  for (int t = 0; t < n; ++t) {
    c.prob.Z(t, 0) = 1.0;
    for (int j = 1; j < d; ++j) c.prob.Z(t, j) = rng.normal();
    c.prob.y(t) = c.prob.Z.row(t).dot(theta) + std::sqrt(c.tau2) * rng.normal();
  }
  c.prior.sigma2 = 100.0;
  const Eigen::MatrixXd A = c.prob.Z.transpose() * c.prob.Z / c.tau2 +
                            Eigen::MatrixXd::Identity(d, d) / c.prior.sigma2;
  c.ridge_mean = A.ldlt().solve(c.prob.Z.transpose() * c.prob.y / c.tau2);
  return c;
}

}  // namespace

TEST_CASE("rwm_proposal_cov uses the scaled identity for small n") {
  const Eigen::MatrixXd rows = Eigen::MatrixXd::Random(4, 2);
  const Eigen::MatrixXd cov = rwm_proposal_cov(rows);
  const double expect = 2.38 * 2.38 / 2.0;  // 2.8322
  CHECK(cov(0, 0) == doctest::Approx(expect));
  CHECK(cov(1, 1) == doctest::Approx(expect));
  CHECK(cov(0, 1) == doctest::Approx(0.0));
  CHECK(expect == doctest::Approx(2.8322));
}

TEST_CASE("rwm_proposal_cov approaches the theoretical factor on iid rows") {
  Rng rng(41);
  Eigen::MatrixXd rows(10000, 3);
  for (Eigen::Index t = 0; t < rows.rows(); ++t)
    for (int j = 0; j < 3; ++j) rows(t, j) = rng.normal();
  const Eigen::MatrixXd cov = rwm_proposal_cov(rows);
  const double factor = 2.38 * 2.38 / 3.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const double expect = a == b ? factor : 0.0;
      CHECK(std::abs(cov(a, b) - expect) < 0.1 * factor);
    }
}

TEST_CASE("rwm_proposal_cov stays positive definite with a constant column") {
  Eigen::MatrixXd rows(50, 3);
  Rng rng(42);
  for (Eigen::Index t = 0; t < rows.rows(); ++t) {
    rows(t, 0) = 1.0;  // bias
    rows(t, 1) = rng.normal();
    rows(t, 2) = rng.normal();
  }
  const Eigen::MatrixXd cov = rwm_proposal_cov(rows);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("mala_step_size follows the printed scaling rule") {
  CHECK(mala_step_size(1) == doctest::Approx(2.7225));
  CHECK(mala_step_size(8) == doctest::Approx(1.36125));
  double prev = mala_step_size(1);
  for (int d = 2; d <= 30; ++d) {
    CHECK(mala_step_size(d) < prev);
    prev = mala_step_size(d);
  }
}

TEST_CASE("rwm acceptance tends to one as the proposal scale vanishes") {
  const Conjugate c = make_conjugate(43);
  ProposalSpec spec = make_proposal(SamplerKind::RwmEmpirical, c.prob);
  spec.sample_tau2 = false;
  spec.scale = 1e-8;
  ChainState state =
      make_chain_state(c.ridge_mean, c.tau2, c.prob, c.prior,
                       SamplerKind::RwmEmpirical);
  Rng rng(7);
  int accepted = 0;
  for (int s = 0; s < 200; ++s) {
    bool a = false;
    rwm_step(state, spec, c.prob, c.prior, rng, &a);
    accepted += a ? 1 : 0;
  }
  CHECK(accepted >= 198);
}

TEST_CASE("1-d RWM on a standard normal hits the analytic acceptance band") {
  const RegressionProblem prob = flat_problem();
  PriorSpec prior;
  prior.sigma2 = 1.0;  // posterior for theta is N(0,1)
  ProposalSpec spec;
  spec.kind = SamplerKind::RwmIdentity;
  spec.sigma = Eigen::MatrixXd::Identity(1, 1);
  spec.sigma_chol = Eigen::MatrixXd::Identity(1, 1);
  spec.scale = 2.38;
  spec.sample_tau2 = false;
  ChainState state = make_chain_state(Eigen::VectorXd::Zero(1), 1.0, prob,
                                      prior, SamplerKind::RwmIdentity);
  Rng rng(11);
  long accepted = 0;
  const long steps = 10000;
  std::vector<double> draws;
  for (long s = 0; s < steps; ++s) {
    bool a = false;
    rwm_step(state, spec, prob, prior, rng, &a);
    accepted += a ? 1 : 0;
    if (s >= steps / 5) draws.push_back(state.theta(0));
  }
  const double rate = static_cast<double>(accepted) / steps;
  CHECK(rate >= 0.30);
  CHECK(rate <= 0.55);

  // Detailed-balance smoke test: KS distance to the standard normal CDF.
  std::sort(draws.begin(), draws.end());
  double ks = 0.0;
  const double n = static_cast<double>(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-draws[i] / std::sqrt(2.0));
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    ks = std::max({ks, std::abs(cdf - lo), std::abs(cdf - hi)});
  }
  CHECK(ks < 0.03);
}

TEST_CASE("rwm_step is deterministic given the seed and state") {
  const Conjugate c = make_conjugate(44);
  ProposalSpec spec = make_proposal(SamplerKind::RwmEmpirical, c.prob);
  const ChainState init = make_chain_state(
      c.ridge_mean, c.tau2, c.prob, c.prior, SamplerKind::RwmEmpirical);
  ChainState a = init, b = init;
  Rng r1(99), r2(99);
  rwm_step(a, spec, c.prob, c.prior, r1);
  rwm_step(b, spec, c.prob, c.prior, r2);
  CHECK(a.theta == b.theta);
  CHECK(a.tau2 == b.tau2);
  CHECK(a.log_post == b.log_post);
}

TEST_CASE("rejected proposals leave the state bit-identical") {
  const Conjugate c = make_conjugate(45);
  ProposalSpec spec = make_proposal(SamplerKind::RwmEmpirical, c.prob);
  spec.sample_tau2 = false;
  spec.scale = 1e6;  // essentially always rejected
  ChainState state = make_chain_state(
      c.ridge_mean, c.tau2, c.prob, c.prior, SamplerKind::RwmEmpirical);
  const Eigen::VectorXd theta_before = state.theta;
  const double lp_before = state.log_post;
  Rng rng(3);
  int rejected = 0;
  for (int s = 0; s < 50; ++s) {
    bool a = false;
    rwm_step(state, spec, c.prob, c.prior, rng, &a);
    if (!a) ++rejected;
  }
  CHECK(rejected == 50);
  CHECK(state.theta == theta_before);
  CHECK(state.log_post == lp_before);
  CHECK(state.iteration == 50);
}

TEST_CASE("mala drift has a fixed point at the posterior mode") {
  const Conjugate c = make_conjugate(46);
  const Eigen::VectorXd grad =
      grad_log_posterior_theta(c.ridge_mean, c.tau2, c.prob, c.prior);
  const Eigen::VectorXd drift = mala_drift(c.ridge_mean, grad, 0.5);
  CHECK((drift - c.ridge_mean).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("mala acceptance tends to one as the step size vanishes") {
  const Conjugate c = make_conjugate(47);
  ProposalSpec spec = make_proposal(SamplerKind::Mala, c.prob);
  spec.sample_tau2 = false;
  spec.scale = 1e-4;
  ChainState state = make_chain_state(c.ridge_mean, c.tau2, c.prob, c.prior,
                                      SamplerKind::Mala);
  Rng rng(13);
  int accepted = 0;
  for (int s = 0; s < 200; ++s) {
    bool a = false;
    mala_step(state, spec, c.prob, c.prior, rng, &a);
    accepted += a ? 1 : 0;
  }
  CHECK(accepted >= 198);
}

TEST_CASE("mala posterior mean matches the conjugate oracle") {
  const Conjugate c = make_conjugate(48);
  ProposalSpec spec = make_proposal(SamplerKind::Mala, c.prob);
  spec.sample_tau2 = false;
  ChainOptions opts;
  opts.iterations = 20000;
  opts.burn_in = 0.2;
  opts.adapt = true;
  opts.record_trace = false;
  Rng rng(21);
  const ChainState init = make_chain_state(
      Eigen::VectorXd::Zero(4), c.tau2, c.prob, c.prior, SamplerKind::Mala);
  const PosteriorDraws draws =
      run_chain(spec, c.prob, c.prior, init, opts, rng);
  for (int j = 0; j < 4; ++j) {
    const Eigen::VectorXd col = draws.draws.col(j);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() /
                                static_cast<double>(col.size() - 1));
    const double ess = ess_bulk({col});
    CHECK(std::abs(mean - c.ridge_mean(j)) <= 3.0 * sd / std::sqrt(ess));
  }
}

TEST_CASE("gibbs_tau2 draws from the exact conditional") {
  // v1 = 2, v2 = 1, n_obs = 4, SSR = 2 gives IG(4, 2) with mean 2/3.
  RegressionProblem prob;
  prob.Z = Eigen::MatrixXd::Zero(4, 1);
  prob.y.resize(4);
  prob.y << 1.0, 1.0, 0.0, 0.0;
  PriorSpec prior;  // v1 = 2, v2 = 1
  const Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
  Rng rng(31);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < n; ++s) {
    const double draw = gibbs_tau2(theta, prob, prior, rng);
    CHECK(draw > 0.0);
    sum += draw;
    sum_sq += draw * draw;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  const double se = std::sqrt(var / n);
  CHECK(std::abs(mean - 2.0 / 3.0) <= 3.0 * se);

  // SSR = 0: conditional is IG(v1 + n/2, v2).
  RegressionProblem exact = prob;
  exact.y.setZero();
  double mean0 = 0.0;
  for (int s = 0; s < 20000; ++s) mean0 += gibbs_tau2(theta, exact, prior, rng);
  mean0 /= 20000;
  CHECK(mean0 == doctest::Approx(1.0 / 3.0).epsilon(0.05));

  // Determinism.
  Rng ra(5), rb(5);
  CHECK(gibbs_tau2(theta, prob, prior, ra) ==
        gibbs_tau2(theta, prob, prior, rb));
}

TEST_CASE("run_chain keeps the post-burn-in share of draws") {
  const Conjugate c = make_conjugate(49);
  ProposalSpec spec = make_proposal(SamplerKind::RwmEmpirical, c.prob);
  spec.scale = 0.05;  // near the optimal scale for this target
  ChainOptions opts;
  opts.iterations = 1000;
  opts.burn_in = 0.2;
  opts.adapt = false;
  opts.record_trace = true;
  Rng rng(8);
  const ChainState init = make_chain_state(c.ridge_mean, c.tau2, c.prob,
                                           c.prior, SamplerKind::RwmEmpirical);
  const PosteriorDraws draws =
      run_chain(spec, c.prob, c.prior, init, opts, rng);
  CHECK(draws.draws.rows() == 800);
  CHECK(draws.trace.rows() == 1000);
  // Every stored tau2 is positive.
  CHECK((draws.draws.col(4).array() > 0.0).all());
}

TEST_CASE("adapted chains land in the target acceptance bands") {
  const Conjugate c = make_conjugate(50);
  for (auto [kind, lo, hi] :
       {std::tuple{SamplerKind::RwmEmpirical, 0.20, 0.30},
        std::tuple{SamplerKind::Mala, 0.55, 0.65}}) {
    ProposalSpec spec = make_proposal(kind, c.prob);
    ChainOptions opts;
    opts.iterations = 5000;
    opts.burn_in = 0.2;
    opts.adapt = true;
    opts.record_trace = false;
    Rng rng(mix_seed(51, static_cast<std::uint64_t>(kind)));
    const ChainState init = make_chain_state(Eigen::VectorXd::Zero(4), c.tau2,
                                             c.prob, c.prior, kind);
    const PosteriorDraws draws =
        run_chain(spec, c.prob, c.prior, init, opts, rng);
    CHECK(draws.acceptance_rate() >= lo);
    CHECK(draws.acceptance_rate() <= hi);
  }
}

TEST_CASE("RWM and MALA agree on the conjugate posterior mean") {
  const Conjugate c = make_conjugate(52);
  std::map<SamplerKind, std::pair<Eigen::VectorXd, Eigen::VectorXd>> stats;
  for (SamplerKind kind : {SamplerKind::RwmEmpirical, SamplerKind::Mala}) {
    ProposalSpec spec = make_proposal(kind, c.prob);
    spec.sample_tau2 = false;
    ChainOptions opts;
    opts.iterations = 10000;
    opts.burn_in = 0.2;
    opts.record_trace = false;
    Rng rng(mix_seed(53, static_cast<std::uint64_t>(kind)));
    const ChainState init =
        make_chain_state(Eigen::VectorXd::Zero(4), c.tau2, c.prob, c.prior,
                         kind);
    const PosteriorDraws draws =
        run_chain(spec, c.prob, c.prior, init, opts, rng);
    Eigen::VectorXd mean(4), se(4);
    for (int j = 0; j < 4; ++j) {
      const Eigen::VectorXd col = draws.draws.col(j);
      mean(j) = col.mean();
      const double sd = std::sqrt((col.array() - mean(j)).square().sum() /
                                  static_cast<double>(col.size() - 1));
      se(j) = sd / std::sqrt(ess_bulk({col}));
    }
    stats[kind] = {mean, se};
  }
  const auto& [rwm_mean, rwm_se] = stats[SamplerKind::RwmEmpirical];
  const auto& [mala_mean, mala_se] = stats[SamplerKind::Mala];
  for (int j = 0; j < 4; ++j) {
    const double combined = std::sqrt(rwm_se(j) * rwm_se(j) +
                                      mala_se(j) * mala_se(j));
    CHECK(std::abs(rwm_mean(j) - mala_mean(j)) <= 3.0 * combined);
  }
}

TEST_CASE("run_chain flags a stalled sampler") {
  const Conjugate c = make_conjugate(54);
  ProposalSpec spec = make_proposal(SamplerKind::RwmEmpirical, c.prob);
  spec.scale = 1e9;
  spec.sample_tau2 = false;
  ChainOptions opts;
  opts.iterations = 3000;
  opts.adapt = false;
  opts.record_trace = false;
  Rng rng(55);
  const ChainState init = make_chain_state(
      c.ridge_mean, c.tau2, c.prob, c.prior, SamplerKind::RwmEmpirical);
  CHECK_THROWS_AS(run_chain(spec, c.prob, c.prior, init, opts, rng),
                  std::runtime_error);
}

TEST_CASE("trace CSV carries the format contract") {
  const Conjugate c = make_conjugate(56);
  ProposalSpec spec = make_proposal(SamplerKind::RwmEmpirical, c.prob);
  ChainOptions opts;
  opts.iterations = 50;
  opts.burn_in = 0.2;
  Rng rng(57);
  const ChainState init = make_chain_state(c.ridge_mean, c.tau2, c.prob,
                                           c.prior, SamplerKind::RwmEmpirical);
  const PosteriorDraws draws =
      run_chain(spec, c.prob, c.prior, init, opts, rng);
  const auto dir = test_support::scratch_dir("trace");
  write_trace_csv(draws, dir / "trace.csv");
  std::ifstream in(dir / "trace.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "iteration,theta_1,theta_2,theta_3,theta_4,tau2,log_posterior,"
        "accepted");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 50);
}
