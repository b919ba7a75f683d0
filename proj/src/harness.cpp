#include "linmdp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "linmdp/baselines.hpp"
#include "linmdp/serialization.hpp"

namespace linmdp {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kLogdetFtrl: return "logdet-ftrl";
    case Algorithm::kExpWeights: return "exp-weights";
    case Algorithm::kUniform: return "uniform-baseline";
    case Algorithm::kGreedy: return "greedy-baseline";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "logdet-ftrl") return Algorithm::kLogdetFtrl;
  if (name == "exp-weights") return Algorithm::kExpWeights;
  if (name == "uniform-baseline" || name == "uniform") return Algorithm::kUniform;
  if (name == "greedy-baseline" || name == "greedy") return Algorithm::kGreedy;
  throw ConfigError("unknown algorithm: " + name);
}

void ExperimentConfig::validate() const {
  if (K.empty()) throw ConfigError("config: empty K list");
  if (seeds.empty()) throw ConfigError("config: empty seed list");
  for (std::size_t i = 0; i < K.size(); ++i) {
    if (K[i] <= 0) throw ConfigError("config: K values must be positive");
    if (i > 0 && K[i] <= K[i - 1]) throw ConfigError("config: K values must be strictly ascending");
  }
  if (estom_fallback != "uniform" && estom_fallback != "min-violation") {
    throw ConfigError("config: estom_fallback must be uniform or min-violation");
  }
  if (policy_grid < 1 || max_policies < 0) throw ConfigError("config: bad policy grid");
  try {
    env.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("env")) {
      const auto& e = j.at("env");
      c.env.d = e.value("d", c.env.d);
      c.env.horizon = e.value("H", c.env.horizon);
      c.env.num_actions = e.value("A", c.env.num_actions);
      c.env.layer_sizes = e.value("layer_sizes", c.env.layer_sizes);
      c.env.anchors = e.value("anchors", c.env.anchors);
      c.env.feature_concentration = e.value("concentration", c.env.feature_concentration);
      c.env.kind = parse_schedule_kind(e.value("schedule", to_string(c.env.kind)));
      c.env.zeta = e.value("zeta", c.env.zeta);
      c.env.seed = e.value("seed", c.env.seed);
    }
    c.env_path = j.value("env_path", std::string());
    c.algorithm = parse_algorithm(j.value("algorithm", to_string(c.algorithm)));
    c.K = j.value("K", std::vector<long>{});
    c.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    if (j.contains("params")) c.overrides = j.at("params");
    c.obme_per_epoch = j.value("obme_per_epoch", false);
    c.oracle_features = j.value("oracle_features", false);
    c.estom_fallback = j.value("estom_fallback", c.estom_fallback);
    c.policy_grid = j.value("policy_grid", c.policy_grid);
    c.max_policies = j.value("max_policies", c.max_policies);
    c.diagnostics = j.value("diagnostics", c.diagnostics);
    c.output_dir = j.value("output_dir", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["env"] = {{"d", c.env.d},
              {"H", c.env.horizon},
              {"A", c.env.num_actions},
              {"layer_sizes", c.env.layer_sizes},
              {"anchors", c.env.anchors},
              {"concentration", c.env.feature_concentration},
              {"schedule", to_string(c.env.kind)},
              {"zeta", c.env.zeta},
              {"seed", c.env.seed}};
  if (!c.env_path.empty()) j["env_path"] = c.env_path;
  j["algorithm"] = to_string(c.algorithm);
  j["K"] = c.K;
  j["seeds"] = c.seeds;
  j["params"] = c.overrides;
  j["obme_per_epoch"] = c.obme_per_epoch;
  j["oracle_features"] = c.oracle_features;
  j["estom_fallback"] = c.estom_fallback;
  j["policy_grid"] = c.policy_grid;
  j["max_policies"] = c.max_policies;
  j["diagnostics"] = c.diagnostics;
  return j;
}

ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& points) {
  ExponentFit fit;
  std::vector<double> xs, ys;
  for (const auto& [k, r] : points) {
    if (!(r > 0.0) || !(k > 0.0)) {
      ++fit.dropped;
      continue;
    }
    xs.push_back(std::log(k));
    ys.push_back(std::log(r));
  }
  fit.points = static_cast<int>(xs.size());
  if (xs.size() < 3) throw std::invalid_argument("fit_exponent: need at least 3 positive points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_exponent: K values must differ");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    sse += e * e;
  }
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

int worker_count() {
  const char* v = std::getenv("LINMDP_WORKERS");
  if (v == nullptr) return 1;
  const int n = std::atoi(v);
  return n > 0 ? n : 1;
}

LinearMDP build_instance(const ExperimentConfig& config) {
  if (!config.env_path.empty()) return mdp_from_json(read_json_file(config.env_path));
  Rng rng = Rng::derive(config.env.seed, 0);
  return gen_linear_mdp(config.env, rng);
}

LossSchedule build_schedule(const ExperimentConfig& config, const LinearMDP& mdp, long K) {
  Rng rng = Rng::derive(config.env.seed, 1);
  return gen_loss_schedule(config.env, mdp, K, rng);
}

namespace {

double override_or(const nlohmann::json& o, const char* key, double fallback) {
  return o.contains(key) ? o.at(key).get<double>() : fallback;
}

}  // namespace

RegretLedger run_single(const ExperimentConfig& config, const LinearMDP& mdp, long K, std::uint64_t seed) {
  const LossSchedule schedule = build_schedule(config, mdp, K);
  Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(K));
  const nlohmann::json& o = config.overrides;
  switch (config.algorithm) {
    case Algorithm::kLogdetFtrl: {
      AlgoParams p = default_params(mdp.dim(), mdp.horizon(), K);
      p.eta = override_or(o, "eta", p.eta);
      p.gamma = override_or(o, "gamma", p.gamma);
      p.beta = override_or(o, "beta", p.beta);
      p.alpha = override_or(o, "alpha", p.alpha);
      p.tau = static_cast<long>(override_or(o, "tau", static_cast<double>(p.tau)));
      p.delta = override_or(o, "delta", p.delta);
      p.rho = override_or(o, "rho", p.rho);
      p.eps_cov = override_or(o, "eps_cov", p.eps_cov);
      p.obme_per_epoch = config.obme_per_epoch;
      p.diagnostics = config.diagnostics;
      p.serial = true;
      return run_logdet_ftrl(mdp, schedule, p, rng).ledger;
    }
    case Algorithm::kExpWeights: {
      ExpwParams p = expw_params(mdp.dim(), mdp.horizon(), K, config.oracle_features,
                                 override_or(o, "delta", 0.01));
      p.gamma = override_or(o, "gamma", p.gamma);
      p.eta = override_or(o, "eta", p.eta);
      p.c_bonus = override_or(o, "c_bonus", p.c_bonus);
      p.zeta = override_or(o, "zeta", p.zeta);
      if (o.contains("estimation_bonus")) p.estimation_bonus = o.at("estimation_bonus").get<bool>();
      p.fallback = config.estom_fallback == "min-violation" ? EstomFallback::kMinViolation : EstomFallback::kUniform;
      p.serial = true;
      Rng prng = Rng::derive(config.env.seed, 2);
      const PolicySet set = build_policy_set(mdp, config.policy_grid, prng, static_cast<std::size_t>(config.max_policies));
      return run_exp_weights(mdp, schedule, set, p, rng).ledger;
    }
    case Algorithm::kUniform: return run_uniform_baseline(mdp, schedule, rng);
    case Algorithm::kGreedy: return run_greedy_baseline(mdp, schedule, rng);
  }
  throw ConfigError("unknown algorithm");
}

namespace {

void put_number(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

void write_ledger_csv(const std::filesystem::path& path, const RegretLedger& ledger) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# linmdp-ledger v1 algorithm=" << ledger.algorithm << " comparator_set=" << ledger.comparator_set
      << " comparator=\"" << ledger.comparator_identity << "\"\n";
  out << "k,realized_loss,expected_value,comparator_value,cum_regret";
  for (const auto& c : ledger.column_order) out << ',' << c;
  out << '\n';
  for (std::size_t k = 0; k < ledger.episodes(); ++k) {
    out << k + 1;
    for (double v : {ledger.realized_loss[k], ledger.expected_value[k], ledger.comparator_value[k], ledger.cumulative_regret[k]}) {
      out << ',';
      put_number(out, v);
    }
    for (const auto& c : ledger.column_order) {
      out << ',';
      put_number(out, ledger.columns.at(c)[k]);
    }
    out << '\n';
  }
}

SweepReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const LinearMDP mdp = build_instance(config);
  SweepReport report;
  report.algorithm = to_string(config.algorithm);
  report.K = config.K;
  std::vector<std::pair<long, std::uint64_t>> jobs;
  for (long K : config.K) {
    for (std::uint64_t s : config.seeds) jobs.emplace_back(K, s);
  }
  report.runs.resize(jobs.size());
  const std::filesystem::path out_dir = config.output_dir;

#pragma omp parallel for num_threads(worker_count()) schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(jobs.size()); ++i) {
    RunRecord& rec = report.runs[static_cast<std::size_t>(i)];
    rec.K = jobs[static_cast<std::size_t>(i)].first;
    rec.seed = jobs[static_cast<std::size_t>(i)].second;
    try {
      const RegretLedger ledger = run_single(config, mdp, rec.K, rec.seed);
      rec.final_regret = ledger.final_regret();
      rec.comparator_set = ledger.comparator_set;
      rec.comparator_identity = ledger.comparator_identity;
      rec.summary = ledger.summary;
      if (!config.output_dir.empty()) {
        const auto path = out_dir / (report.algorithm + "_K" + std::to_string(rec.K) + "_seed" + std::to_string(rec.seed) + ".csv");
        write_ledger_csv(path, ledger);
        rec.csv_path = path.filename().string();
      }
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  }

  std::vector<std::pair<double, double>> points;
  for (long K : config.K) {
    std::vector<double> regrets;
    bool complete = true;
    for (const RunRecord& r : report.runs) {
      if (r.K != K) continue;
      if (r.ok) {
        regrets.push_back(r.final_regret);
      } else {
        complete = false;
        report.all_ok = false;
      }
    }
    const double med = regrets.empty() ? std::nan("") : median(regrets);
    report.median_regret.push_back(med);
    if (complete && !regrets.empty()) points.emplace_back(static_cast<double>(K), med);
  }
  try {
    report.fit = fit_exponent(points);
  } catch (const std::invalid_argument& e) {
    report.fit_error = e.what();
  }
  if (!config.output_dir.empty()) {
    nlohmann::json j = report_to_json(report);
    j["config"] = config_to_json(config);
    write_json_file(out_dir / "summary.json", j);
  }
  return report;
}

nlohmann::json report_to_json(const SweepReport& report) {
  nlohmann::json j;
  j["format"] = "linmdp-summary v1";
  j["algorithm"] = report.algorithm;
  nlohmann::json runs = nlohmann::json::array();
  for (const RunRecord& r : report.runs) {
    nlohmann::json jr;
    jr["K"] = r.K;
    jr["seed"] = r.seed;
    jr["ok"] = r.ok;
    jr["error"] = r.error;
    jr["final_regret"] = r.final_regret;
    jr["comparator_set"] = r.comparator_set;
    jr["comparator"] = r.comparator_identity;
    jr["csv"] = r.csv_path;
    jr["diagnostics"] = r.summary;
    runs.push_back(std::move(jr));
  }
  j["runs"] = std::move(runs);
  nlohmann::json per_k = nlohmann::json::array();
  for (std::size_t i = 0; i < report.K.size(); ++i) {
    nlohmann::json e;
    e["K"] = report.K[i];
    e["median_regret"] = report.median_regret[i];
    per_k.push_back(std::move(e));
  }
  j["per_K"] = std::move(per_k);
  if (report.fit) {
    j["fit"] = {{"slope", report.fit->slope},
                {"intercept", report.fit->intercept},
                {"r2", report.fit->r2},
                {"points", report.fit->points},
                {"dropped", report.fit->dropped}};
  } else {
    j["fit"] = nullptr;
  }
  j["fit_error"] = report.fit_error;
  j["all_ok"] = report.all_ok;
  return j;
}

}  // namespace linmdp
