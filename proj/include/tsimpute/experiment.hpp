#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsimpute/dataset.hpp"
#include "tsimpute/imputation.hpp"
#include "tsimpute/tbayes.hpp"

namespace tsimpute {

/// Flat experiment configuration shared by every subcommand. Expressible
/// as a key=value file or command-line flags; flags override file values.
struct ExperimentConfig {
  // Input data.
  std::string data;
  std::optional<std::string> timestamp_column;
  std::optional<double> sentinel;
  std::vector<std::string> na_tokens = {"NA", "NaN", ""};

  // Missingness injection.
  std::string mechanism = "mcar";  // mcar | mar
  double rate = 0.2;
  std::vector<std::string> masked_vars;

  // Methods and sampler settings.
  std::vector<std::string> methods;
  std::string sampler = "rwm";  // rwm | mala
  int lags = -1;                // -1: per-method default (tbayes 2, mice 0/1)
  long iters = 5000;
  double burn_in = 0.2;
  int chains = 2;
  int sweeps = 10;
  int imputations = 5;
  std::string init = "time-aware";  // mean | time-aware
  int inner_draws = 300;
  int knn_k = 5;
  std::optional<int> period;
  double sigma2 = 100.0;
  double v1 = 2.0;
  double v2 = 1.0;
  bool adapt = true;
  double proposal_scale = 1.0;
  bool mala_variance_convention = false;
  std::vector<std::string> time_features;  // subset of {hour,dow,index}

  // Harness.
  int runs = 5;
  std::uint64_t seed = 42;
  std::string out = "out";
  int workers = 1;
  std::string target_var;  // diagnose: restrict to one variable
  bool write_traces = true;

  /// Deterministic key=value rendering (the manifest's config echo).
  std::string serialize() const;
};

/// Reads a key=value config file (one pair per line; '#' comments).
ExperimentConfig load_config_file(const std::filesystem::path& path);

/// Applies one key=value pair; throws on unknown keys.
void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value);

/// Registered method names accepted by --method.
const std::vector<std::string>& registered_methods();

/// Loads cfg.data with the configured NA handling.
TimeSeriesDataset load_experiment_data(const ExperimentConfig& cfg);

/// Runs one method end to end and returns the completed matrix used for
/// scoring (the pooled dataset for multiple-imputation methods).
Eigen::MatrixXd run_method_completed(const std::string& method,
                                     const TimeSeriesDataset& ds,
                                     const ExperimentConfig& cfg,
                                     std::uint64_t seed,
                                     ImputationResult* result_out = nullptr);

/// tbayes configuration derived from an experiment config.
TbmConfig make_tbm_config(const ExperimentConfig& cfg, std::uint64_t seed,
                          const std::string& sampler);

/// Resolves the configured time-feature names (hour, dow, index).
TimeFeatureSpec make_time_features(const ExperimentConfig& cfg);

int cmd_inject(const ExperimentConfig& cfg);
int cmd_impute(const ExperimentConfig& cfg);
int cmd_benchmark(const ExperimentConfig& cfg);
int cmd_diagnose(const ExperimentConfig& cfg);

}  // namespace tsimpute
