#pragma once

// Experiment configuration, sweeps over (K, seed), exponent fits and the
// CSV / JSON artifacts.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "linmdp/env_suite.hpp"
#include "linmdp/exp_weights.hpp"
#include "linmdp/ledger.hpp"
#include "linmdp/logdet_ftrl.hpp"

namespace linmdp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Algorithm { kLogdetFtrl, kExpWeights, kUniform, kGreedy };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct ExperimentConfig {
  EnvSpec env = desk_spec();
  /// Instance JSON to load instead of generating one from `env`.
  std::string env_path;
  Algorithm algorithm = Algorithm::kLogdetFtrl;
  std::vector<long> K;
  std::vector<std::uint64_t> seeds;
  /// Parameter overrides by name (eta, gamma, beta, alpha, tau, delta, rho, eps_cov).
  nlohmann::json overrides = nlohmann::json::object();
  bool obme_per_epoch = false;
  bool oracle_features = false;
  std::string estom_fallback = "uniform";
  int policy_grid = 2;
  int max_policies = 16;
  bool diagnostics = true;
  std::string output_dir;

  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
  int dropped = 0;
};

/// OLS on (log K, log regret); nonpositive regrets are dropped and counted.
/// Throws std::invalid_argument with fewer than 3 usable points.
ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& points);

struct RunRecord {
  long K = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double final_regret = 0.0;
  std::string comparator_set;
  std::string comparator_identity;
  std::map<std::string, double> summary;
  std::string csv_path;
};

struct SweepReport {
  std::string algorithm;
  std::vector<RunRecord> runs;
  std::vector<long> K;
  std::vector<double> median_regret;  // per K, over completed runs
  std::optional<ExponentFit> fit;
  std::string fit_error;
  bool all_ok = true;
};

/// Instance for a config (generated from the env seed or loaded).
LinearMDP build_instance(const ExperimentConfig& config);
/// Schedule of length K; the profile draws do not depend on K.
LossSchedule build_schedule(const ExperimentConfig& config, const LinearMDP& mdp, long K);

/// One run of the configured algorithm.
RegretLedger run_single(const ExperimentConfig& config, const LinearMDP& mdp, long K, std::uint64_t seed);

/// Runs every (K, seed) pair on LINMDP_WORKERS threads (default 1). Writes
/// one CSV per run and summary.json when output_dir is set.
SweepReport run_experiment(const ExperimentConfig& config);

void write_ledger_csv(const std::filesystem::path& path, const RegretLedger& ledger);
nlohmann::json report_to_json(const SweepReport& report);

double median(std::vector<double> values);
int worker_count();

}  // namespace linmdp
