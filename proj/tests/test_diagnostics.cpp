#include <doctest.h>

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "test_support.hpp"
#include "tsimpute/diagnostics.hpp"

using namespace tsimpute;

namespace {

Eigen::VectorXd normal_draws(std::uint64_t seed, int n, double mean = 0.0,
                             double sd = 1.0) {
  Rng rng(mix_seed(seed, 0xd1a9));
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = mean + sd * rng.normal();
  return v;
}

Eigen::VectorXd ar1_draws(std::uint64_t seed, int n, double phi) {
  Rng rng(mix_seed(seed, 0xa1));
  Eigen::VectorXd v(n);
  double x = rng.normal() / std::sqrt(1.0 - phi * phi);
  for (int i = 0; i < n; ++i) {
    v(i) = x;
    x = phi * x + rng.normal();
  }
  return v;
}

}  // namespace

TEST_CASE("split_rhat is near one for well-mixed chains") {
  const auto r =
      split_rhat({normal_draws(1, 10000), normal_draws(2, 10000)});
  CHECK_FALSE(r.degenerate);
  CHECK(r.value >= 0.99);
  CHECK(r.value <= 1.01);
}

TEST_CASE("split_rhat flags chains stuck in different regions") {
  const auto r = split_rhat(
      {normal_draws(3, 10000, 0.0), normal_draws(4, 10000, 10.0)});
  CHECK(r.value > 3.0);
}

TEST_CASE("split_rhat marks constant chains degenerate") {
  const Eigen::VectorXd flat = Eigen::VectorXd::Constant(100, 2.5);
  const auto r = split_rhat({flat, flat});
  CHECK(r.degenerate);
}

TEST_CASE("split_rhat needs at least four draws") {
  const Eigen::VectorXd tiny = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(split_rhat({tiny}), std::runtime_error);
}

TEST_CASE("ess_bulk is close to the draw count for iid chains") {
  const double ess =
      ess_bulk({normal_draws(5, 10000), normal_draws(6, 10000)});
  CHECK(ess >= 0.9 * 20000);
  CHECK(ess <= 1.05 * 20000);
}

TEST_CASE("ess_bulk matches the analytic AR(1) rate") {
  // Integrated autocorrelation of AR(1): (1+phi)/(1-phi) = 19 at phi = 0.9.
  const double ess = ess_bulk({ar1_draws(7, 20000, 0.9)});
  const double expect = 20000.0 / 19.0;
  CHECK(ess == doctest::Approx(expect).epsilon(0.25));
}

TEST_CASE("duplicated chains add count but no independent information") {
  const Eigen::VectorXd chain = ar1_draws(8, 5000, 0.8);
  const double single = ess_bulk({chain});
  const double doubled = ess_bulk({chain, chain});
  CHECK(doubled <= 2.0 * single * 1.10);
  const auto r = split_rhat({chain, chain});
  CHECK(r.value == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("hdi picks the earliest of tied windows") {
  Eigen::VectorXd samples(100);
  for (int i = 0; i < 100; ++i) samples(i) = i + 1;  // 1..100
  const auto [lo, hi] = hdi(samples, 0.94);
  CHECK(lo == 1.0);
  CHECK(hi == 94.0);
}

TEST_CASE("hdi of a unimodal sample is roughly symmetric about the mode") {
  const Eigen::VectorXd samples = normal_draws(9, 40000);
  const auto [lo, hi] = hdi(samples, 0.94);
  CHECK(std::abs((hi + lo) / 2.0) < 0.08);
}

TEST_CASE("hdi matches the central normal interval") {
  const Eigen::VectorXd samples = normal_draws(10, 100000);
  const auto [lo, hi] = hdi(samples, 0.94);
  CHECK(lo == doctest::Approx(-1.881).epsilon(0.03));
  CHECK(hi == doctest::Approx(1.881).epsilon(0.03));
}

TEST_CASE("hdi always contains the requested mass by construction") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 10 + static_cast<int>(rng.uniform() * 200);
    Eigen::VectorXd samples(n);
    for (int i = 0; i < n; ++i) samples(i) = rng.normal() * rng.uniform();
    const double mass = 0.5 + 0.45 * rng.uniform();
    const auto [lo, hi] = hdi(samples, mass);
    int inside = 0;
    for (int i = 0; i < n; ++i)
      if (samples(i) >= lo && samples(i) <= hi) ++inside;
    CHECK(inside >= static_cast<int>(std::ceil(mass * n)));
  }
  CHECK_THROWS_AS(hdi(Eigen::VectorXd::Zero(5), 0.94), std::runtime_error);
}

TEST_CASE("inverse_normal_cdf matches reference quantiles") {
  CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(inverse_normal_cdf(0.975) == doctest::Approx(1.959964).epsilon(1e-5));
  CHECK(inverse_normal_cdf(0.03) == doctest::Approx(-1.880794).epsilon(1e-5));
  CHECK_THROWS_AS(inverse_normal_cdf(0.0), std::runtime_error);
}

namespace {

PosteriorDraws fake_chain(const Eigen::MatrixXd& draws) {
  PosteriorDraws out;
  out.draws = draws;
  out.proposed_post_burnin = draws.rows();
  out.accepted_post_burnin = draws.rows() / 2;
  return out;
}

}  // namespace

TEST_CASE("summarize flags a constant chain as degenerate") {
  Eigen::MatrixXd draws(100, 2);
  draws.col(0).setConstant(1.0);  // theta (b)
  draws.col(1).setConstant(4.0);  // tau2
  const DiagnosticsSummary summary = summarize({fake_chain(draws)});
  REQUIRE(summary.params.size() == 2);
  CHECK(summary.params[0].param == "b");
  CHECK(summary.params[0].sd == 0.0);
  CHECK(summary.params[0].rhat.degenerate);
  CHECK(summary.params[1].param == "tau");
  CHECK(summary.params[1].mean == doctest::Approx(2.0));  // sqrt(4)
  CHECK_FALSE(summary.converged());
}

TEST_CASE("summarize parameter order matches the trace layout") {
  Eigen::MatrixXd draws = Eigen::MatrixXd::Random(64, 4).array() + 2.0;
  RegressionProblem prob;
  prob.Z = Eigen::MatrixXd::Random(10, 3);
  prob.y = Eigen::VectorXd::Random(10);
  const DiagnosticsSummary summary = summarize({fake_chain(draws)}, &prob);
  REQUIRE(summary.params.size() == 5);
  CHECK(summary.params[0].param == "b");
  CHECK(summary.params[1].param == "w_1");
  CHECK(summary.params[2].param == "w_2");
  CHECK(summary.params[3].param == "tau");
  CHECK(summary.params[4].param == "rmse");
}

TEST_CASE("summary CSV carries the exact column contract") {
  Eigen::MatrixXd draws = Eigen::MatrixXd::Random(64, 2).array() + 2.0;
  const DiagnosticsSummary summary = summarize({fake_chain(draws)});
  const auto dir = test_support::scratch_dir("summary_csv");
  write_summary_csv(summary, dir / "summary.csv");
  std::ifstream in(dir / "summary.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "param,mean,sd,hdi_3,hdi_97,ess,rhat");
}

TEST_CASE("convergence verdict reproduces the thresholds") {
  DiagnosticsSummary summary;
  ParamSummary good;
  good.param = "b";
  good.rhat.value = 1.01;
  good.ess = 1000.0;
  summary.params.push_back(good);
  CHECK(summary.converged());
  summary.params[0].ess = 399.0;
  CHECK_FALSE(summary.converged());
  summary.params[0].ess = 1000.0;
  summary.params[0].rhat.value = 1.06;
  CHECK_FALSE(summary.converged());
}
