#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "linmdp/harness.hpp"
#include "linmdp/serialization.hpp"

using namespace linmdp;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRunFailed = 3;

ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  nlohmann::json j;
  try {
    j = read_json_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  // A config without K/seeds is allowed for single runs; fill placeholders.
  if (!j.contains("K")) j["K"] = std::vector<long>{1};
  if (!j.contains("seeds")) j["seeds"] = std::vector<std::uint64_t>{0};
  return config_from_json(j);
}

void print_report(const nlohmann::json& j) {
  std::printf("algorithm: %s\n", j.at("algorithm").get<std::string>().c_str());
  for (const auto& e : j.at("per_K")) {
    const auto& m = e.at("median_regret");
    std::printf("  K=%-8ld median regret %s\n", e.at("K").get<long>(), m.is_number() ? std::to_string(m.get<double>()).c_str() : "n/a");
  }
  for (const auto& r : j.at("runs")) {
    if (!r.at("ok").get<bool>()) {
      std::printf("  FAILED K=%ld seed=%llu: %s\n", r.at("K").get<long>(),
                  static_cast<unsigned long long>(r.at("seed").get<std::uint64_t>()), r.at("error").get<std::string>().c_str());
    }
  }
  if (j.at("fit").is_object()) {
    const auto& f = j.at("fit");
    std::printf("  slope %.4f  intercept %.4f  R2 %.4f  (%d points, %d dropped)\n", f.at("slope").get<double>(),
                f.at("intercept").get<double>(), f.at("r2").get<double>(), f.at("points").get<int>(), f.at("dropped").get<int>());
  } else {
    std::printf("  no fit: %s\n", j.at("fit_error").get<std::string>().c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial linear MDP experiments"};
  app.require_subcommand(1);

  std::string config_path, out, algo;
  std::uint64_t seed = 0;
  long K = 1024;
  bool oracle = false, per_epoch = false;

  auto* gen = app.add_subcommand("gen-env", "Generate an instance and loss schedule as JSON");
  gen->add_option("--config", config_path, "Experiment config (env section is used)");
  gen->add_option("--seed", seed, "Instance seed (overrides the config)");
  gen->add_option("--K", K, "Schedule length");
  gen->add_option("--out", out, "Output JSON path")->required();

  auto* run = app.add_subcommand("run", "Single run; writes the ledger CSV");
  run->add_option("--config", config_path, "Experiment config");
  run->add_option("--algo", algo, "logdet-ftrl | exp-weights | uniform-baseline | greedy-baseline");
  run->add_option("--K", K, "Number of episodes");
  run->add_option("--seed", seed, "Algorithm seed");
  run->add_option("--out", out, "Output CSV path")->required();
  run->add_flag("--oracle-features", oracle, "exp-weights: exact occupancy measures instead of EstOM");
  run->add_flag("--obme-per-epoch", per_epoch, "logdet-ftrl: one bonus solve per epoch half");

  auto* sweep = app.add_subcommand("sweep", "Run every (K, seed) of a config");
  sweep->add_option("--config", config_path, "Experiment config")->required();
  sweep->add_option("--algo", algo, "Override the config algorithm");
  sweep->add_option("--out", out, "Output directory (overrides the config)");
  sweep->add_flag("--oracle-features", oracle, "exp-weights: exact occupancy measures");

  auto* report = app.add_subcommand("report", "Summarize a sweep directory");
  report->add_option("--out", out, "Sweep output directory or summary.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      ExperimentConfig c = load_config(config_path);
      if (gen->count("--seed") > 0) c.env.seed = seed;
      const LinearMDP mdp = build_instance(c);
      nlohmann::json j;
      j["mdp"] = mdp_to_json(mdp);
      j["schedule"] = schedule_to_json(build_schedule(c, mdp, K));
      write_json_file(out, j);
      return 0;
    }
    if (*run) {
      ExperimentConfig c = load_config(config_path);
      if (!algo.empty()) c.algorithm = parse_algorithm(algo);
      if (oracle) c.oracle_features = true;
      if (per_epoch) c.obme_per_epoch = true;
      if (K <= 0) throw ConfigError("--K must be positive");
      const LinearMDP mdp = build_instance(c);
      RegretLedger ledger;
      try {
        ledger = run_single(c, mdp, K, seed);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return kExitRunFailed;
      }
      write_ledger_csv(out, ledger);
      std::printf("%s K=%ld seed=%llu regret %.6f vs %s (%s)\n", ledger.algorithm.c_str(), K,
                  static_cast<unsigned long long>(seed), ledger.final_regret(), ledger.comparator_identity.c_str(),
                  ledger.comparator_set.c_str());
      return 0;
    }
    if (*sweep) {
      ExperimentConfig c = load_config(config_path);
      if (!algo.empty()) c.algorithm = parse_algorithm(algo);
      if (oracle) c.oracle_features = true;
      if (!out.empty()) c.output_dir = out;
      if (c.output_dir.empty()) throw ConfigError("sweep needs an output directory");
      const SweepReport r = run_experiment(c);
      print_report(report_to_json(r));
      return r.all_ok ? 0 : kExitRunFailed;
    }
    if (*report) {
      std::filesystem::path p = out;
      if (std::filesystem::is_directory(p)) p /= "summary.json";
      const nlohmann::json j = read_json_file(p);
      print_report(j);
      return j.value("all_ok", true) ? 0 : kExitRunFailed;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
