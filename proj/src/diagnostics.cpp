#include "tsimpute/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tsimpute/csv.hpp"

namespace tsimpute {

namespace {

void check_chains(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.empty()) throw std::runtime_error("no chains supplied");
  const Eigen::Index S = chains.front().size();
  if (S < 4) throw std::runtime_error("chains must hold at least 4 draws");
  for (const auto& c : chains)
    if (c.size() != S)
      throw std::runtime_error("chains must share a common length");
}

// Halve each chain into two sub-chains of length floor(S/2); with odd S the
// middle draw is dropped.
std::vector<Eigen::VectorXd> split_in_half(
    const std::vector<Eigen::VectorXd>& chains) {
  std::vector<Eigen::VectorXd> out;
  const Eigen::Index S = chains.front().size();
  const Eigen::Index half = S / 2;
  for (const auto& c : chains) {
    out.push_back(c.head(half));
    out.push_back(c.tail(half));
  }
  return out;
}

double sample_variance(const Eigen::VectorXd& x) {
  const double mu = x.mean();
  return (x.array() - mu).square().sum() /
         static_cast<double>(x.size() - 1);
}

}  // namespace

RhatResult split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  check_chains(chains);
  const std::vector<Eigen::VectorXd> sub = split_in_half(chains);
  const auto M = static_cast<double>(sub.size());
  const auto n = static_cast<double>(sub.front().size());

  double W = 0.0;
  Eigen::VectorXd means(sub.size());
  for (std::size_t m = 0; m < sub.size(); ++m) {
    means(static_cast<Eigen::Index>(m)) = sub[m].mean();
    W += sample_variance(sub[m]);
  }
  W /= M;

  RhatResult result;
  if (W <= 0.0) {
    result.degenerate = true;
    result.value = std::numeric_limits<double>::quiet_NaN();
    return result;
  }
  const double B = n * sample_variance(means);
  const double v_hat = (n - 1.0) / n * W + B / n;
  result.value = std::sqrt(v_hat / W);
  return result;
}

double inverse_normal_cdf(double p) {
  // Acklam's rational approximation; |relative error| < 1.2e-9.
  if (!(p > 0.0 && p < 1.0))
    throw std::runtime_error("inverse normal CDF needs p in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > phigh) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

namespace {

// Blom-offset rank normalization over the pooled draws (average ranks on
// ties), returned chain-wise.
std::vector<Eigen::VectorXd> rank_normalize(
    const std::vector<Eigen::VectorXd>& chains) {
  const Eigen::Index S = chains.front().size();
  const std::size_t N = chains.size() * static_cast<std::size_t>(S);

  std::vector<std::pair<double, std::size_t>> pooled;
  pooled.reserve(N);
  for (std::size_t m = 0; m < chains.size(); ++m)
    for (Eigen::Index i = 0; i < S; ++i)
      pooled.emplace_back(chains[m](i),
                          m * static_cast<std::size_t>(S) +
                              static_cast<std::size_t>(i));
  std::sort(pooled.begin(), pooled.end());

  std::vector<double> rank(N);
  std::size_t i = 0;
  while (i < N) {
    std::size_t j = i;
    while (j + 1 < N && pooled[j + 1].first == pooled[i].first) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[pooled[k].second] = avg;
    i = j + 1;
  }

  std::vector<Eigen::VectorXd> z(chains.size(), Eigen::VectorXd(S));
  const double denom = static_cast<double>(N) + 0.25;
  for (std::size_t m = 0; m < chains.size(); ++m)
    for (Eigen::Index k = 0; k < S; ++k)
      z[m](k) = inverse_normal_cdf(
          (rank[m * static_cast<std::size_t>(S) + static_cast<std::size_t>(k)] -
           0.375) /
          denom);
  return z;
}

}  // namespace

double ess_bulk(const std::vector<Eigen::VectorXd>& chains) {
  check_chains(chains);
  const std::vector<Eigen::VectorXd> z = rank_normalize(chains);
  const auto M = static_cast<double>(z.size());
  const Eigen::Index S = z.front().size();
  const double total = M * static_cast<double>(S);

  std::vector<double> chain_means, chain_vars;
  std::vector<Eigen::VectorXd> centered;
  for (const auto& c : z) {
    const double mu = c.mean();
    chain_means.push_back(mu);
    centered.push_back(c.array() - mu);
    chain_vars.push_back(sample_variance(c));
  }
  const double W =
      std::accumulate(chain_vars.begin(), chain_vars.end(), 0.0) / M;
  double var_plus = (static_cast<double>(S) - 1.0) / static_cast<double>(S) * W;
  if (z.size() > 1) {
    Eigen::VectorXd means(static_cast<Eigen::Index>(chain_means.size()));
    for (std::size_t m = 0; m < chain_means.size(); ++m)
      means(static_cast<Eigen::Index>(m)) = chain_means[m];
    var_plus += sample_variance(means);
  }
  if (var_plus <= 0.0) return total;

  auto acov = [&](Eigen::Index lag) {
    double acc = 0.0;
    for (const auto& c : centered) {
      double s = 0.0;
      for (Eigen::Index t = 0; t + lag < S; ++t) s += c(t) * c(t + lag);
      acc += s / static_cast<double>(S);
    }
    return acc / M;
  };

  // Geyer pairs: accumulate rho_{2k} + rho_{2k+1} while positive, enforcing
  // monotone non-increase.
  double tau = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  const Eigen::Index max_lag = S - 4;
  for (Eigen::Index k = 0; 2 * k + 1 <= max_lag; ++k) {
    const double rho_even = 1.0 - (W - acov(2 * k)) / var_plus;
    const double rho_odd = 1.0 - (W - acov(2 * k + 1)) / var_plus;
    double pair = rho_even + rho_odd;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  tau -= 1.0;  // the k = 0 pair double-counts rho_0 = 1
  tau = std::max(tau, 1.0 / total);
  return std::min(total / tau, total);
}

std::pair<double, double> hdi(const Eigen::VectorXd& samples, double mass) {
  if (samples.size() < 10)
    throw std::runtime_error("hdi needs at least 10 samples");
  if (!(mass > 0.0 && mass < 1.0))
    throw std::runtime_error("hdi mass must lie in (0,1)");
  std::vector<double> sorted(samples.data(), samples.data() + samples.size());
  std::sort(sorted.begin(), sorted.end());
  const auto N = sorted.size();
  const auto window =
      static_cast<std::size_t>(std::ceil(mass * static_cast<double>(N)));
  const std::size_t take = std::min(window, N);
  std::size_t best = 0;
  double best_width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + take <= N; ++i) {
    const double width = sorted[i + take - 1] - sorted[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {sorted[best], sorted[best + take - 1]};
}

bool DiagnosticsSummary::converged() const {
  for (const auto& p : params) {
    if (p.rhat.degenerate || !(p.rhat.value < 1.05)) return false;
    if (!(p.ess > 400.0)) return false;
  }
  return !params.empty();
}

DiagnosticsSummary summarize(const std::vector<PosteriorDraws>& chains,
                             const RegressionProblem* prob) {
  if (chains.empty()) throw std::runtime_error("no chains to summarize");
  const Eigen::Index cols = chains.front().draws.cols();
  const Eigen::Index d = cols - 1;

  // Parameter order matches the trace files: b, w_1..w_{d-1}, tau, and a
  // derived fit-RMSE series when the problem is available.
  std::vector<std::string> names;
  names.emplace_back("b");
  for (Eigen::Index i = 1; i < d; ++i)
    names.push_back("w_" + std::to_string(i));
  names.emplace_back("tau");
  if (prob != nullptr) names.emplace_back("rmse");

  DiagnosticsSummary summary;
  for (std::size_t series = 0; series < names.size(); ++series) {
    std::vector<Eigen::VectorXd> per_chain;
    for (const auto& chain : chains) {
      const Eigen::Index S = chain.draws.rows();
      Eigen::VectorXd v(S);
      if (static_cast<Eigen::Index>(series) < d) {
        v = chain.draws.col(static_cast<Eigen::Index>(series));
      } else if (static_cast<Eigen::Index>(series) == d) {
        v = chain.draws.col(d).array().sqrt();  // tau = sqrt(tau2)
      } else {
        for (Eigen::Index s = 0; s < S; ++s) {
          const Eigen::VectorXd theta =
              chain.draws.row(s).head(d).transpose();
          v(s) = std::sqrt((prob->y - prob->Z * theta).squaredNorm() /
                           static_cast<double>(prob->n_obs()));
        }
      }
      per_chain.push_back(std::move(v));
    }

    Eigen::Index total = 0;
    for (const auto& c : per_chain) total += c.size();
    Eigen::VectorXd all(total);
    Eigen::Index at = 0;
    for (const auto& c : per_chain) {
      all.segment(at, c.size()) = c;
      at += c.size();
    }

    ParamSummary row;
    row.param = names[series];
    row.mean = all.mean();
    row.sd = std::sqrt((all.array() - row.mean).square().sum() /
                       static_cast<double>(all.size() - 1));
    const auto interval = hdi(all, 0.94);
    row.hdi_low = interval.first;
    row.hdi_high = interval.second;
    row.rhat = split_rhat(per_chain);
    row.ess = ess_bulk(per_chain);
    summary.params.push_back(std::move(row));
  }

  for (const auto& chain : chains)
    summary.chain_acceptance.push_back(chain.acceptance_rate());
  return summary;
}

void write_summary_csv(const DiagnosticsSummary& summary,
                       const std::filesystem::path& path) {
  std::ostringstream out;
  out << "param,mean,sd,hdi_3,hdi_97,ess,rhat\n";
  for (const auto& p : summary.params) {
    out << p.param << ',' << csv::format_short(p.mean) << ','
        << csv::format_short(p.sd) << ',' << csv::format_short(p.hdi_low)
        << ',' << csv::format_short(p.hdi_high) << ','
        << csv::format_short(p.ess) << ',';
    if (p.rhat.degenerate)
      out << "nan";
    else
      out << csv::format_short(p.rhat.value);
    out << '\n';
  }
  csv::write_text_atomic(path, out.str());
}

}  // namespace tsimpute
