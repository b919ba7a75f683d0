#include <doctest.h>

#include <cmath>

#include "linmdp/logdet_ftrl.hpp"
#include "test_util.hpp"

using namespace linmdp;

TEST_CASE("parameter schedule") {
  const AlgoParams p = default_params(4, 3, 4096);
  CHECK(p.eta == doctest::Approx(0.125 / (3328.0 * 2.0 * 9.0)).epsilon(1e-14));
  CHECK(p.gamma == doctest::Approx(20.0 * std::log(72.0 * std::pow(4096.0, 4)) / 64.0).epsilon(1e-14));
  CHECK(p.beta == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(p.alpha == doctest::Approx(3.0 * 512.0).epsilon(1e-14));
  CHECK(p.tau == 64);
  CHECK(p.delta == doctest::Approx(std::pow(4096.0, -3)).epsilon(1e-14));
  CHECK(p.rho == doctest::Approx(1.0 / (std::sqrt(3.0) * std::sqrt(2.0) * 8.0)).epsilon(1e-14));
  CHECK(p.eps_cov == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(default_params(4, 3, 1000).tau == 31);
}

namespace {

LogdetRun short_run(const LinearMDP& m, long K, AlgoParams p, std::uint64_t seed = 3) {
  Rng r0(11);
  const LossSchedule sch = gen_loss_schedule(desk_spec(), m, K, r0);
  Rng rng(seed);
  return run_logdet_ftrl(m, sch, p, rng);
}

}  // namespace

TEST_CASE("exploration budget covering K leaves no learning episodes") {
  const LinearMDP m = testutil::desk();
  AlgoParams p = default_params(4, 3, 64);
  p.rho = 0.01;  // unreachable threshold, exploration runs out its budget
  const LogdetRun run = short_run(m, 64, p);
  CHECK(run.exploration.episodes_used == 64);
  CHECK(run.epochs == 0);
  CHECK(run.ledger.episodes() == 64);
  CHECK(run.ledger.summary.at("K0") == 64.0);
}

TEST_CASE("single action instance has zero regret") {
  EnvSpec spec = desk_spec(4);
  spec.num_actions = 1;
  Rng g(1);
  const LinearMDP m = gen_linear_mdp(spec, g);
  Rng r0(2);
  const LossSchedule sch = gen_loss_schedule(spec, m, 300, r0);
  Rng rng(3);
  const LogdetRun run = run_logdet_ftrl(m, sch, default_params(4, 3, 300), rng);
  CHECK(std::abs(run.ledger.final_regret()) < 1e-9);
}

TEST_CASE("short run at the default schedule keeps its invariants") {
  const LinearMDP m = testutil::desk();
  AlgoParams p = default_params(4, 3, 1024);
  p.serial = true;
  const LogdetRun run = short_run(m, 1024, p);
  const auto& sm = run.ledger.summary;
  REQUIRE(run.ledger.episodes() == 1024);
  CHECK(run.exploration.certificate_passed);
  CHECK(sm.at("K0") < 1024.0);
  CHECK(run.epochs >= 1);
  CHECK(sm.at("ftrl_unconverged") == 0.0);
  CHECK(sm.at("ftrl_gap_max") <= 1e-6);
  CHECK(sm.at("dilated_violations") == 0.0);
  CHECK(sm.at("w_bound_violations") == 0.0);
  CHECK(sm.at("qhat_bound_violations") == 0.0);
  // Regret bookkeeping matches the value columns.
  double sum = 0.0;
  for (std::size_t k = 0; k < 1024; ++k) sum += run.ledger.expected_value[k] - run.ledger.comparator_value[k];
  CHECK(sum == doctest::Approx(run.ledger.final_regret()).epsilon(1e-10));
  for (double v : run.ledger.expected_value) CHECK((v >= 0.0 && v <= 3.0));

  // Same seed, parallel solves: identical trajectory.
  p.serial = false;
  const LogdetRun par = short_run(m, 1024, p);
  CHECK(par.ledger.realized_loss == run.ledger.realized_loss);
  CHECK(par.ledger.expected_value == run.ledger.expected_value);
}

TEST_CASE("per-epoch bonus matrices") {
  const LinearMDP m = testutil::desk();
  AlgoParams p = default_params(4, 3, 1024);
  const LogdetRun every = short_run(m, 1024, p);
  p.obme_per_epoch = true;
  const LogdetRun per_epoch = short_run(m, 1024, p);
  CHECK(per_epoch.ledger.summary.at("obme_per_epoch") == 1.0);
  CHECK(per_epoch.ledger.summary.at("obme_calls") < every.ledger.summary.at("obme_calls"));
  CHECK(per_epoch.ledger.summary.at("obme_calls") <= 2.0 * static_cast<double>(per_epoch.epochs));
  CHECK(per_epoch.ledger.episodes() == 1024);
}
