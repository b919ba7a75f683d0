#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "linmdp/baselines.hpp"
#include "linmdp/harness.hpp"
#include "test_util.hpp"

using namespace linmdp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("linmdp_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("exponent fit") {
  std::vector<std::pair<double, double>> lin, root, noisy;
  Rng rng(4);
  for (int e = 10; e <= 16; ++e) {
    const double K = std::ldexp(1.0, e);
    lin.emplace_back(K, K);
    root.emplace_back(K, std::sqrt(K));
    noisy.emplace_back(K, 3.0 * std::pow(K, 0.75) * (1.0 + 0.01 * rng.normal()));
  }
  const ExponentFit a = fit_exponent(lin);
  CHECK(a.slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(a.intercept) < 1e-9);
  CHECK(std::abs(fit_exponent(root).slope - 0.5) < 1e-12);
  const ExponentFit n = fit_exponent(noisy);
  CHECK(n.slope >= 0.73);
  CHECK(n.slope <= 0.77);
  CHECK(n.points == 7);

  std::vector<std::pair<double, double>> mixed = lin;
  mixed[0].second = -3.0;
  mixed[1].second = 0.0;
  const ExponentFit m = fit_exponent(mixed);
  CHECK(m.dropped == 2);
  CHECK(m.points == 5);
  CHECK_THROWS_AS(fit_exponent({{2.0, 1.0}, {4.0, -1.0}, {8.0, 3.0}}), std::invalid_argument);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("config parsing and validation") {
  using nlohmann::json;
  CHECK_THROWS_AS(config_from_json(json{{"K", json::array()}, {"seeds", {1}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"K", {8}}, {"seeds", json::array()}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"K", {16, 8}}, {"seeds", {1}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"K", {8}}, {"seeds", {1}}, {"algorithm", "nope"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"K", "eight"}, {"seeds", {1}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"K", {8}}, {"seeds", {1}}, {"env", {{"d", 0}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"K", {8}}, {"seeds", {1}}, {"env", {{"schedule", "weekly"}}}}), ConfigError);

  const ExperimentConfig c = config_from_json(json::parse(R"({
    "algorithm": "exp-weights", "K": [8, 16], "seeds": [1, 2],
    "env": {"d": 3, "anchors": 3, "H": 2, "A": 2, "layer_sizes": [1, 3], "schedule": "iid", "seed": 9},
    "params": {"gamma": 0.25}, "oracle_features": true, "max_policies": 4})"));
  CHECK(c.algorithm == Algorithm::kExpWeights);
  CHECK(c.env.d == 3);
  CHECK(c.env.kind == ScheduleKind::kIid);
  CHECK(c.overrides.at("gamma") == 0.25);
  const ExperimentConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
}

TEST_CASE("baselines") {
  EnvSpec spec = desk_spec(5);
  spec.num_actions = 1;
  Rng g(1);
  const LinearMDP one = gen_linear_mdp(spec, g);
  Rng r0(2);
  const LossSchedule s1 = gen_loss_schedule(spec, one, 200, r0);
  Rng rng(3);
  CHECK(std::abs(run_uniform_baseline(one, s1, rng).final_regret()) < 1e-9);

  const LinearMDP m = testutil::desk();
  EnvSpec cs = desk_spec();
  cs.kind = ScheduleKind::kConstant;
  Rng r1(4);
  const LossSchedule s2 = gen_loss_schedule(cs, m, 300, r1);
  Rng r2(5);
  const RegretLedger greedy = run_greedy_baseline(m, s2, r2);
  // Only the first, uniform episode can lose anything on constant losses.
  CHECK(greedy.cumulative_regret.back() == doctest::Approx(greedy.cumulative_regret.front()).epsilon(1e-9));
  CHECK(greedy.cumulative_regret.front() >= 0.0);

  Rng r3(6);
  const RegretLedger uni = run_uniform_baseline(m, s2, r3);
  CHECK(uni.final_regret() > 0.0);
  CHECK(uni.comparator_set == "all-policies-dp");
}

TEST_CASE("sweeps are reproducible byte for byte") {
  ExperimentConfig c;
  c.algorithm = Algorithm::kLogdetFtrl;
  c.K = {256, 512};
  c.seeds = {1, 2};
  const fs::path a = scratch("rep_a"), b = scratch("rep_b");
  c.output_dir = a.string();
  const SweepReport ra = run_experiment(c);
  setenv("LINMDP_WORKERS", "3", 1);
  c.output_dir = b.string();
  const SweepReport rb = run_experiment(c);
  unsetenv("LINMDP_WORKERS");
  CHECK(ra.all_ok);
  CHECK(rb.all_ok);
  int files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    ++files;
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  }
  CHECK(files == 4);
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));

  const std::string csv = slurp(a / "logdet-ftrl_K256_seed1.csv");
  CHECK(csv.rfind("# linmdp-ledger v1 algorithm=logdet-ftrl comparator_set=all-policies-dp comparator=\"", 0) == 0);
  CHECK(csv.find("\nk,realized_loss,expected_value,comparator_value,cum_regret,epoch,ftrl_gap_max,bonus_max\n") != std::string::npos);
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 2 + 256);
}

TEST_CASE("summary json shape") {
  ExperimentConfig c;
  c.algorithm = Algorithm::kUniform;
  c.K = {128, 256, 512, 1024};
  c.seeds = {1, 2, 3};
  const fs::path dir = scratch("summary");
  c.output_dir = dir.string();
  const SweepReport r = run_experiment(c);
  const nlohmann::json j = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(j.at("format") == "linmdp-summary v1");
  CHECK(j.at("algorithm") == "uniform-baseline");
  CHECK(j.at("runs").size() == 12);
  for (const auto& run : j.at("runs")) {
    for (const char* key : {"K", "seed", "ok", "error", "final_regret", "comparator_set", "comparator", "csv", "diagnostics"}) {
      CHECK(run.contains(key));
    }
    CHECK(fs::exists(dir / run.at("csv").get<std::string>()));
  }
  CHECK(j.at("per_K").size() == 4);
  for (const char* key : {"slope", "intercept", "r2", "points", "dropped"}) CHECK(j.at("fit").contains(key));
  CHECK(j.at("all_ok") == true);
  CHECK(j.at("config").at("K").size() == 4);
  // The uniform baseline on a switching schedule loses a constant per episode.
  REQUIRE(r.fit.has_value());
  CHECK(r.fit->slope == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("failed runs are reported, not fatal") {
  ExperimentConfig c;
  c.algorithm = Algorithm::kUniform;
  c.env_path = "/nonexistent/instance.json";
  c.K = {8};
  c.seeds = {1};
  CHECK_THROWS(run_experiment(c));

  ExperimentConfig bad;
  bad.algorithm = Algorithm::kLogdetFtrl;
  bad.K = {64};
  bad.seeds = {1};
  bad.overrides = {{"tau", -5}};
  const SweepReport r = run_experiment(bad);
  CHECK_FALSE(r.all_ok);
  CHECK_FALSE(r.runs[0].ok);
  CHECK_FALSE(r.runs[0].error.empty());
  CHECK_FALSE(r.fit.has_value());
}
