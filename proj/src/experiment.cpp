#include "tsimpute/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tsimpute/baselines.hpp"
#include "tsimpute/csv.hpp"
#include "tsimpute/diagnostics.hpp"
#include "tsimpute/metrics.hpp"
#include "tsimpute/mice.hpp"

namespace tsimpute {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

void write_manifest(const ExperimentConfig& cfg, const fs::path& dir,
                    const std::vector<std::string>& extra) {
  std::ostringstream out;
  out << cfg.serialize();
  for (const auto& line : extra) out << line << '\n';
  csv::write_text_atomic(dir / "manifest.txt", out.str());
}

}  // namespace

std::string ExperimentConfig::serialize() const {
  std::ostringstream out;
  out << "data=" << data << '\n';
  out << "timestamp_column=" << (timestamp_column ? *timestamp_column : "")
      << '\n';
  out << "sentinel=" << (sentinel ? csv::format_full(*sentinel) : "") << '\n';
  out << "na_tokens=" << join(na_tokens, ';') << '\n';
  out << "mechanism=" << mechanism << '\n';
  out << "rate=" << csv::format_full(rate) << '\n';
  out << "masked_vars=" << join(masked_vars, ';') << '\n';
  out << "methods=" << join(methods, ';') << '\n';
  out << "sampler=" << sampler << '\n';
  out << "lags=" << lags << '\n';
  out << "iters=" << iters << '\n';
  out << "burn_in=" << csv::format_full(burn_in) << '\n';
  out << "chains=" << chains << '\n';
  out << "sweeps=" << sweeps << '\n';
  out << "imputations=" << imputations << '\n';
  out << "init=" << init << '\n';
  out << "inner_draws=" << inner_draws << '\n';
  out << "knn_k=" << knn_k << '\n';
  out << "period=" << (period ? std::to_string(*period) : "") << '\n';
  out << "sigma2=" << csv::format_full(sigma2) << '\n';
  out << "v1=" << csv::format_full(v1) << '\n';
  out << "v2=" << csv::format_full(v2) << '\n';
  out << "adapt=" << (adapt ? 1 : 0) << '\n';
  out << "mala_variance_convention=" << (mala_variance_convention ? 1 : 0)
      << '\n';
  out << "time_features=" << join(time_features, ';') << '\n';
  out << "proposal_scale=" << csv::format_full(proposal_scale) << '\n';
  out << "runs=" << runs << '\n';
  out << "seed=" << seed << '\n';
  out << "out=" << this->out << '\n';
  out << "workers=" << workers << '\n';
  out << "target_var=" << target_var << '\n';
  out << "write_traces=" << (write_traces ? 1 : 0) << '\n';
  return out.str();
}

ExperimentConfig load_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  ExperimentConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("malformed config line: " + line);
    apply_config_entry(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value) {
  auto as_long = [&] { return std::stol(value); };
  auto as_double = [&] { return std::stod(value); };
  if (key == "data") cfg.data = value;
  else if (key == "timestamp_column")
    cfg.timestamp_column = value.empty() ? std::nullopt
                                         : std::optional<std::string>(value);
  else if (key == "sentinel")
    cfg.sentinel = value.empty() ? std::nullopt
                                 : std::optional<double>(as_double());
  else if (key == "na_tokens") cfg.na_tokens = split(value, ';');
  else if (key == "mechanism") cfg.mechanism = value;
  else if (key == "rate") cfg.rate = as_double();
  else if (key == "masked_vars")
    cfg.masked_vars = value.empty() ? std::vector<std::string>{}
                                    : split(value, ';');
  else if (key == "methods")
    cfg.methods = value.empty() ? std::vector<std::string>{} : split(value, ';');
  else if (key == "sampler") cfg.sampler = value;
  else if (key == "lags") cfg.lags = static_cast<int>(as_long());
  else if (key == "iters") cfg.iters = as_long();
  else if (key == "burn_in") cfg.burn_in = as_double();
  else if (key == "chains") cfg.chains = static_cast<int>(as_long());
  else if (key == "sweeps") cfg.sweeps = static_cast<int>(as_long());
  else if (key == "imputations") cfg.imputations = static_cast<int>(as_long());
  else if (key == "init") cfg.init = value;
  else if (key == "inner_draws") cfg.inner_draws = static_cast<int>(as_long());
  else if (key == "knn_k") cfg.knn_k = static_cast<int>(as_long());
  else if (key == "period")
    cfg.period = value.empty() ? std::nullopt
                               : std::optional<int>(static_cast<int>(as_long()));
  else if (key == "sigma2") cfg.sigma2 = as_double();
  else if (key == "v1") cfg.v1 = as_double();
  else if (key == "v2") cfg.v2 = as_double();
  else if (key == "adapt") cfg.adapt = as_long() != 0;
  else if (key == "mala_variance_convention")
    cfg.mala_variance_convention = as_long() != 0;
  else if (key == "time_features")
    cfg.time_features = value.empty() ? std::vector<std::string>{}
                                      : split(value, ';');
  else if (key == "proposal_scale") cfg.proposal_scale = as_double();
  else if (key == "runs") cfg.runs = static_cast<int>(as_long());
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(as_long());
  else if (key == "out") cfg.out = value;
  else if (key == "workers") cfg.workers = static_cast<int>(as_long());
  else if (key == "target_var") cfg.target_var = value;
  else if (key == "write_traces") cfg.write_traces = as_long() != 0;
  else throw std::runtime_error("unknown config key: " + key);
}

const std::vector<std::string>& registered_methods() {
  static const std::vector<std::string> methods = {
      "linear", "locf",  "mean",       "median",     "knn",
      "seasonal", "mice", "tbayes", "tbayes-rwm", "tbayes-mala"};
  return methods;
}

TimeSeriesDataset load_experiment_data(const ExperimentConfig& cfg) {
  LoadOptions opts;
  opts.sentinel = cfg.sentinel;
  opts.timestamp_column = cfg.timestamp_column;
  opts.na_tokens = std::set<std::string>(cfg.na_tokens.begin(),
                                         cfg.na_tokens.end());
  return load_csv(cfg.data, opts);
}

TimeFeatureSpec make_time_features(const ExperimentConfig& cfg) {
  TimeFeatureSpec tf;
  for (const auto& name : cfg.time_features) {
    if (name == "hour") tf.hour_of_day = true;
    else if (name == "dow") tf.day_of_week = true;
    else if (name == "index") tf.linear_index = true;
    else throw std::runtime_error("unknown time feature: " + name);
  }
  return tf;
}

TbmConfig make_tbm_config(const ExperimentConfig& cfg, std::uint64_t seed,
                          const std::string& sampler) {
  TbmConfig tbm;
  tbm.sampler =
      sampler == "mala" ? SamplerKind::Mala : SamplerKind::RwmEmpirical;
  tbm.chains = cfg.chains;
  tbm.iterations = cfg.iters;
  tbm.burn_in = cfg.burn_in;
  tbm.sweeps = cfg.sweeps;
  tbm.imputations = cfg.imputations;
  const int lags = cfg.lags >= 0 ? cfg.lags : 2;
  tbm.lags_past = lags;
  tbm.lags_future = lags;
  tbm.init = cfg.init == "mean" ? InitKind::Mean : InitKind::TimeAware;
  tbm.prior.sigma2 = cfg.sigma2;
  tbm.prior.v1 = cfg.v1;
  tbm.prior.v2 = cfg.v2;
  tbm.seed = seed;
  tbm.inner_draws = cfg.inner_draws;
  tbm.period_hint = cfg.period;
  tbm.adapt = cfg.adapt;
  tbm.initial_scale = cfg.proposal_scale;
  tbm.mala_variance_convention = cfg.mala_variance_convention;
  tbm.time_features = make_time_features(cfg);
  return tbm;
}

Eigen::MatrixXd run_method_completed(const std::string& method,
                                     const TimeSeriesDataset& ds,
                                     const ExperimentConfig& cfg,
                                     std::uint64_t seed,
                                     ImputationResult* result_out) {
  if (method == "linear") return impute_linear(ds).values;
  if (method == "locf") return impute_locf(ds).values;
  if (method == "mean") return impute_mean(ds).values;
  if (method == "median") return impute_median(ds).values;
  if (method == "knn") return impute_knn(ds, cfg.knn_k).values;
  if (method == "seasonal") return impute_seasonal(ds, cfg.period).values;
  if (method == "mice") {
    MiceConfig mice;
    mice.sweeps = cfg.sweeps;
    mice.imputations = cfg.imputations;
    mice.time_features = make_time_features(cfg);
    const int lags = cfg.lags >= 0 ? cfg.lags : (ds.cols() == 1 ? 1 : 0);
    mice.lags_past = lags;
    mice.lags_future = lags;
    mice.seed = seed;
    ImputationResult result = run_mice(ds, mice);
    Eigen::MatrixXd pooled = result.pooled;
    if (result_out) *result_out = std::move(result);
    return pooled;
  }
  if (method == "tbayes" || method == "tbayes-rwm" || method == "tbayes-mala") {
    const std::string sampler = method == "tbayes-mala"
                                    ? "mala"
                                    : method == "tbayes-rwm" ? "rwm"
                                                             : cfg.sampler;
    const TbmConfig tbm = make_tbm_config(cfg, seed, sampler);
    ImputationResult result = run_tbayes_mice(ds, tbm);
    Eigen::MatrixXd pooled = result.pooled;
    if (result_out) *result_out = std::move(result);
    return pooled;
  }
  throw std::runtime_error("unknown method: " + method);
}

namespace {

void require_methods(const ExperimentConfig& cfg) {
  if (cfg.methods.empty())
    throw std::runtime_error("no methods configured (use --method)");
  const auto& known = registered_methods();
  for (const auto& m : cfg.methods)
    if (std::find(known.begin(), known.end(), m) == known.end())
      throw std::runtime_error("unregistered method: " + m);
}

std::pair<TimeSeriesDataset, GroundTruthMask> inject_for(
    const ExperimentConfig& cfg, const TimeSeriesDataset& ds,
    std::uint64_t seed) {
  if (cfg.mechanism == "mcar") return inject_mcar(ds, cfg.rate, seed);
  if (cfg.mechanism == "mar") {
    std::vector<int> masked;
    for (const auto& name : cfg.masked_vars)
      masked.push_back(ds.column_index(name));
    return inject_mar(ds, masked, cfg.rate, seed);
  }
  throw std::runtime_error("unknown mechanism: " + cfg.mechanism);
}

void write_uncertainty_csv(const ImputationResult& result,
                           const fs::path& path) {
  const int m = result.imputation_count();
  std::ostringstream out;
  out << "row,column,predictive_mean,predictive_sd,within_var,between_var,"
         "total_var\n";
  for (Eigen::Index t = 0; t < result.base.rows(); ++t) {
    for (Eigen::Index j = 0; j < result.base.cols(); ++j) {
      if (!result.base.mask.flags(t, j)) continue;
      double pm = 0.0;
      for (int r = 0; r < m; ++r) pm += result.predictive_mean[r](t, j);
      pm /= m;
      out << t << ',' << result.base.names[static_cast<std::size_t>(j)] << ','
          << csv::format_short(pm) << ','
          << csv::format_short(std::sqrt(result.total_var(t, j))) << ','
          << csv::format_short(result.within_var(t, j)) << ','
          << csv::format_short(result.between_var(t, j)) << ','
          << csv::format_short(result.total_var(t, j)) << '\n';
    }
  }
  csv::write_text_atomic(path, out.str());
}

}  // namespace

int cmd_inject(const ExperimentConfig& cfg) {
  const double t0 = now_seconds();
  const TimeSeriesDataset ds = load_experiment_data(cfg);
  auto [masked, truth] = inject_for(cfg, ds, cfg.seed);

  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  save_csv(masked, dir / "masked.csv");
  save_ground_truth_csv(truth, ds.names, dir / "ground_truth.csv");

  const double realized =
      static_cast<double>(truth.injected.cast<Eigen::Index>().sum()) /
      static_cast<double>(ds.rows() * ds.cols());
  write_manifest(cfg, dir,
                 {"realized_rate=" + csv::format_full(realized),
                  "wall_time_s=" + csv::format_short(now_seconds() - t0)});
  std::cout << "injected " << truth.injected.cast<Eigen::Index>().sum()
            << " cells, realized rate " << csv::format_short(realized)
            << '\n';
  return 0;
}

int cmd_impute(const ExperimentConfig& cfg) {
  const double t0 = now_seconds();
  require_methods(cfg);
  const TimeSeriesDataset ds = load_experiment_data(cfg);
  const fs::path dir(cfg.out);
  fs::create_directories(dir);

  std::vector<std::string> manifest_extra;
  for (const auto& method : cfg.methods) {
    ImputationResult result;
    const Eigen::MatrixXd completed =
        run_method_completed(method, ds, cfg, cfg.seed, &result);

    if (result.imputation_count() > 0) {
      for (int r = 0; r < result.imputation_count(); ++r)
        save_completed_csv(ds, result.completed[static_cast<std::size_t>(r)],
                           dir / (method + "_imp" + std::to_string(r + 1) +
                                  ".csv"));
      save_completed_csv(ds, result.pooled, dir / (method + "_pooled.csv"));
      write_uncertainty_csv(result, dir / (method + "_uncertainty.csv"));
    } else {
      save_completed_csv(ds, completed, dir / (method + ".csv"));
    }

    if (cfg.write_traces && method.rfind("tbayes", 0) == 0 &&
        ds.mask.any_missing()) {
      const std::string sampler = method == "tbayes-mala"
                                      ? "mala"
                                      : method == "tbayes-rwm" ? "rwm"
                                                               : cfg.sampler;
      TbmConfig tbm = make_tbm_config(cfg, cfg.seed, sampler);
      const auto diags = run_diagnostic_chains(ds, tbm);
      for (const auto& diag : diags) {
        for (std::size_t c = 0; c < diag.chains.size(); ++c)
          write_trace_csv(diag.chains[c],
                          dir / "traces" /
                              (method + "_" + diag.variable + "_chain" +
                               std::to_string(c + 1) + ".csv"));
      }
    }
    manifest_extra.push_back("completed_method=" + method);
  }
  manifest_extra.push_back("wall_time_s=" +
                           csv::format_short(now_seconds() - t0));
  write_manifest(cfg, dir, manifest_extra);
  return 0;
}

namespace {

struct RunOutcome {
  bool ok = false;
  std::string error;
  MetricsReport report;
  std::uint64_t seed = 0;
};

}  // namespace

int cmd_benchmark(const ExperimentConfig& cfg) {
  const double t0 = now_seconds();
  require_methods(cfg);
  if (cfg.runs < 1) throw std::runtime_error("run count must be >= 1");
  const TimeSeriesDataset ds = load_experiment_data(cfg);

  std::vector<RunOutcome> outcomes(static_cast<std::size_t>(cfg.runs));
  auto execute_run = [&](int r) {
    RunOutcome& slot = outcomes[static_cast<std::size_t>(r - 1)];
    slot.seed = cfg.seed + 1000ULL * static_cast<std::uint64_t>(r);
    try {
      auto [masked, truth] = inject_for(cfg, ds, slot.seed);
      MetricsReport merged;
      merged.mask_hash = mask_identity_hash(truth);
      for (const auto& method : cfg.methods) {
        const Eigen::MatrixXd completed =
            run_method_completed(method, masked, cfg, slot.seed);
        const std::string sampler =
            method == "tbayes-mala" ? "mala"
            : method == "tbayes-rwm" ? "rwm"
            : method == "tbayes" ? cfg.sampler : "";
        MetricsReport report =
            score_imputation(completed, truth, ds.names, method, sampler);
        for (auto& row : report.rows) merged.rows.push_back(std::move(row));
      }
      slot.report = std::move(merged);
      slot.ok = true;
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  };

  const int workers = std::max(1, cfg.workers);
  if (workers == 1) {
    for (int r = 1; r <= cfg.runs; ++r) execute_run(r);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{1};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r <= cfg.runs;
             r = next.fetch_add(1))
          execute_run(r);
      });
    }
    for (auto& t : pool) t.join();
  }

  const fs::path dir(cfg.out);
  fs::create_directories(dir);

  // Per-run rows.
  std::ostringstream runs_csv;
  runs_csv << "run,variable,method,sampler,rmse,mae,nmae,nrmse\n";
  std::vector<MetricsReport> ok_reports;
  int aborted = 0;
  std::vector<std::string> manifest_extra;
  for (int r = 1; r <= cfg.runs; ++r) {
    const RunOutcome& slot = outcomes[static_cast<std::size_t>(r - 1)];
    manifest_extra.push_back("run_" + std::to_string(r) +
                             "_seed=" + std::to_string(slot.seed));
    if (!slot.ok) {
      ++aborted;
      manifest_extra.push_back("run_" + std::to_string(r) +
                               "_error=" + slot.error);
      continue;
    }
    ok_reports.push_back(slot.report);
    for (const auto& row : slot.report.rows)
      runs_csv << r << ',' << row.variable << ',' << row.method << ','
               << row.sampler << ',' << csv::format_short(row.rmse) << ','
               << csv::format_short(row.mae) << ','
               << csv::format_short(row.nmae) << ','
               << csv::format_short(row.nrmse) << '\n';
  }
  csv::write_text_atomic(dir / "report_runs.csv", runs_csv.str());

  if (!ok_reports.empty()) {
    const AggregatedReport agg = aggregate_runs(ok_reports);
    std::ostringstream report_csv;
    report_csv << "variable,method,sampler,metric,mean,sd,runs\n";
    for (const auto& row : agg.rows)
      report_csv << row.variable << ',' << row.method << ',' << row.sampler
                 << ',' << row.metric << ',' << csv::format_short(row.mean)
                 << ',' << csv::format_short(row.sd) << ',' << row.runs
                 << '\n';
    csv::write_text_atomic(dir / "report.csv", report_csv.str());
  }

  manifest_extra.push_back("aborted_runs=" + std::to_string(aborted));
  manifest_extra.push_back("wall_time_s=" +
                           csv::format_short(now_seconds() - t0));
  write_manifest(cfg, dir, manifest_extra);

  const double abort_frac =
      static_cast<double>(aborted) / static_cast<double>(cfg.runs);
  if (abort_frac > 0.10) {
    std::cerr << aborted << " of " << cfg.runs << " runs aborted\n";
    return 1;
  }
  std::cout << "benchmark complete: " << (cfg.runs - aborted) << '/'
            << cfg.runs << " runs, report at "
            << (dir / "report.csv").string() << '\n';
  return 0;
}

int cmd_diagnose(const ExperimentConfig& cfg) {
  const double t0 = now_seconds();
  if (cfg.chains < 2)
    throw std::runtime_error("diagnose needs at least 2 chains");
  TimeSeriesDataset ds = load_experiment_data(cfg);

  // Fully observed input: inject per the config first so there is an
  // imputation problem to diagnose.
  if (!ds.mask.any_missing()) {
    auto [masked, truth] = inject_for(cfg, ds, cfg.seed);
    ds = std::move(masked);
  }

  TbmConfig tbm = make_tbm_config(cfg, cfg.seed, cfg.sampler);
  const auto diags = run_diagnostic_chains(ds, tbm);

  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  bool all_pass = true;
  std::vector<std::string> manifest_extra;
  for (const auto& diag : diags) {
    if (!cfg.target_var.empty() && diag.variable != cfg.target_var) continue;
    const DiagnosticsSummary summary = summarize(diag.chains, &diag.problem);
    write_summary_csv(summary, dir / ("diagnostics_" + diag.variable + ".csv"));
    if (cfg.write_traces)
      for (std::size_t c = 0; c < diag.chains.size(); ++c)
        write_trace_csv(diag.chains[c],
                        dir / "traces" /
                            (diag.variable + "_chain" + std::to_string(c + 1) +
                             ".csv"));
    const bool pass = summary.converged();
    all_pass = all_pass && pass;
    std::cout << diag.variable << ": "
              << (pass ? "PASS" : "FAIL")
              << " (R-hat < 1.05 and bulk ESS > 400)\n";
    manifest_extra.push_back("diagnose_" + diag.variable + "=" +
                             (pass ? "pass" : "fail"));
  }
  manifest_extra.push_back("wall_time_s=" +
                           csv::format_short(now_seconds() - t0));
  write_manifest(cfg, dir, manifest_extra);
  std::cout << (all_pass ? "all variables converged"
                         : "convergence FAILED for at least one variable")
            << '\n';
  return 0;
}

}  // namespace tsimpute
