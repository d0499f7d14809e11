#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "tsimpute/experiment.hpp"

namespace {

using tsimpute::ExperimentConfig;

void add_common_options(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--data", cfg.data, "input CSV path");
  cmd->add_option("--timestamp-column",
                  [&cfg](const std::vector<std::string>& vals) {
                    cfg.timestamp_column = vals.back();
                    return true;
                  },
                  "column holding ISO-8601 stamps or an integer index");
  cmd->add_option("--sentinel",
                  [&cfg](const std::vector<std::string>& vals) {
                    cfg.sentinel = std::stod(vals.back());
                    return true;
                  },
                  "numeric code marking missing cells (e.g. -200)");
  cmd->add_option("--na-tokens", cfg.na_tokens,
                  "strings marking missing cells")
      ->delimiter(',');
  cmd->add_option("--mechanism", cfg.mechanism, "mcar | mar");
  cmd->add_option("--rate", cfg.rate, "injection rate in (0,1)");
  cmd->add_option("--masked-vars", cfg.masked_vars,
                  "MAR: variables to mask")
      ->delimiter(',');
  cmd->add_option("--method", cfg.methods,
                  "imputation method (repeatable): linear|locf|mean|median|"
                  "knn|seasonal|mice|tbayes|tbayes-rwm|tbayes-mala");
  cmd->add_option("--sampler", cfg.sampler, "rwm | mala");
  cmd->add_option("--lags", cfg.lags,
                  "past/future lag order (-1 = method default)");
  cmd->add_option("--iters", cfg.iters, "sampler iterations per chain");
  cmd->add_option("--burn-in", cfg.burn_in, "burn-in fraction");
  cmd->add_option("--chains", cfg.chains, "diagnostic chain count");
  cmd->add_option("--sweeps", cfg.sweeps, "MICE sweeps K");
  cmd->add_option("--imputations", cfg.imputations, "imputation count m");
  cmd->add_option("--init", cfg.init, "mean | time-aware");
  cmd->add_option("--inner-draws", cfg.inner_draws,
                  "sampler budget per variable and sweep");
  cmd->add_option("--knn-k", cfg.knn_k, "neighbour count for knn");
  cmd->add_option("--period",
                  [&cfg](const std::vector<std::string>& vals) {
                    cfg.period = std::stoi(vals.back());
                    return true;
                  },
                  "seasonal period (auto-detected when absent)");
  cmd->add_option("--sigma2", cfg.sigma2, "prior variance of theta");
  cmd->add_option("--v1", cfg.v1, "inverse-gamma shape for tau2");
  cmd->add_option("--v2", cfg.v2, "inverse-gamma scale for tau2");
  cmd->add_flag("--no-adapt", [&cfg](std::int64_t) { cfg.adapt = false; },
                "disable burn-in proposal adaptation");
  cmd->add_option("--proposal-scale", cfg.proposal_scale,
                  "initial proposal scale multiplier");
  cmd->add_option("--time-features", cfg.time_features,
                  "time covariates to add: hour, dow, index")
      ->delimiter(',');
  cmd->add_option("--runs", cfg.runs, "benchmark repetitions R");
  cmd->add_option("--seed", cfg.seed, "base seed");
  cmd->add_option("--out", cfg.out, "output directory");
  cmd->add_option("--workers", cfg.workers, "concurrent benchmark runs");
  cmd->add_option("--target-var", cfg.target_var,
                  "diagnose only this variable");
  cmd->add_flag("--no-traces", [&cfg](std::int64_t) { cfg.write_traces = false; },
                "skip trace CSV output");
}

}  // namespace

int main(int argc, char** argv) {
  // A config file, when given, supplies defaults; explicit flags override.
  ExperimentConfig cfg;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        cfg = tsimpute::load_config_file(argv[i + 1]);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
      }
    }
  }

  CLI::App app{"time-series imputation toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key=value config file");

  CLI::App* inject = app.add_subcommand(
      "inject", "write a masked dataset plus its ground truth");
  CLI::App* impute =
      app.add_subcommand("impute", "impute a dataset with chosen methods");
  CLI::App* benchmark = app.add_subcommand(
      "benchmark", "repeated inject-impute-score experiment");
  CLI::App* diagnose = app.add_subcommand(
      "diagnose", "MCMC convergence summaries and traces");
  for (CLI::App* cmd : {inject, impute, benchmark, diagnose}) {
    cmd->add_option("--config", config_path, "key=value config file");
    add_common_options(cmd, cfg);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (inject->parsed()) return tsimpute::cmd_inject(cfg);
    if (impute->parsed()) return tsimpute::cmd_impute(cfg);
    if (benchmark->parsed()) return tsimpute::cmd_benchmark(cfg);
    if (diagnose->parsed()) return tsimpute::cmd_diagnose(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
