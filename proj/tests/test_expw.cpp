#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "linmdp/design.hpp"
#include "linmdp/exp_weights.hpp"
#include "linmdp/policy_set.hpp"
#include "test_util.hpp"

using namespace linmdp;

TEST_CASE("policy set construction") {
  const LinearMDP m = testutil::desk();
  Rng r1(3), r2(3);
  const PolicySet a = build_policy_set(m, 2, r1, 16);
  const PolicySet b = build_policy_set(m, 2, r2, 16);
  REQUIRE(a.size() == b.size());
  CHECK(a.size() <= 16);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.policies[i].table() == b.policies[i].table());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) CHECK(a.policies[i].table() != a.policies[j].table());
  }
  Rng r3(4);
  CHECK(build_policy_set(m, 1, r3).size() == 1);

  // One action: a single policy whatever the grid.
  EnvSpec spec = desk_spec(2);
  spec.num_actions = 1;
  Rng g(2);
  const LinearMDP one = gen_linear_mdp(spec, g);
  Rng r4(5);
  CHECK(build_policy_set(one, 3, r4).size() == 1);

  // d = 2, two opposite parameters on a two-action instance give two distinct tables.
  const LinearMDP c2 = testutil::chain2();
  Mat t1(2, 2), t2(2, 2);
  t1 << 1, 0, 1, 0;
  t2 = -t1;
  const PolicySet opp = policies_from_parameters(c2, {t1, t2});
  REQUIRE(opp.size() == 2);
  CHECK(opp.policies[0].prob(0, 1) == 1.0);  // argmin of <e_a, (1, 0)> is action 1
  CHECK(opp.policies[1].prob(0, 0) == 1.0);
  // Ties break to the lowest index.
  const Policy tie = argmin_policy(c2, Mat::Zero(2, 2));
  CHECK(tie.prob(0, 0) == 1.0);
}

TEST_CASE("G-optimal design examples") {
  const DesignResult orth = g_optimal_design(Mat::Identity(3, 3));
  CHECK(orth.converged);
  CHECK(orth.dimension == 3);
  CHECK(orth.certificate == doctest::Approx(3.0).epsilon(1e-9));
  CHECK((orth.weights.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-6);

  Mat one(3, 1);
  one << 0.3, -0.2, 0.5;
  const DesignResult single = g_optimal_design(one);
  CHECK(single.weights(0) == doctest::Approx(1.0));
  CHECK(single.certificate == doctest::Approx(1.0).epsilon(1e-12));

  Mat dup(3, 2);
  dup.col(0) = one;
  dup.col(1) = one;
  const DesignResult d2 = g_optimal_design(dup);
  CHECK(d2.certificate == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d2.weights.sum() == doctest::Approx(1.0));

  Rng rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    Mat v(6, 12);
    for (int i = 0; i < 72; ++i) v(i / 12, i % 12) = rng.normal();
    if (rep % 2) v.row(5) = v.row(0);  // rank 5
    const DesignResult r = g_optimal_design(v);
    CHECK(r.converged);
    CHECK(r.certificate <= r.dimension * (1.0 + 1e-3));
    CHECK(r.dimension == (rep % 2 ? 5 : 6));
    // Independent certificate: max ||v||^2 in the pseudo-inverse of the design matrix.
    const Mat M = v * r.weights.asDiagonal() * v.transpose();
    const Mat Mp = M.completeOrthogonalDecomposition().pseudoInverse();
    double cert = 0.0;
    for (int i = 0; i < 12; ++i) cert = std::max(cert, v.col(i).dot(Mp * v.col(i)));
    CHECK(cert == doctest::Approx(r.certificate).epsilon(1e-6));
  }
}

TEST_CASE("exponential weights step") {
  const Vec design = Vec::Constant(2, 0.5);
  const ExpWeightsStep empty = exp_weights_step(Vec::Zero(2), 0.3, 0.0, design);
  CHECK(empty.q(0) == doctest::Approx(0.5));
  Vec scores(2);
  const double eta = 0.7;
  scores << 0.0, 0.6931471805599453 / eta;
  const ExpWeightsStep s = exp_weights_step(scores, eta, 0.25, design);
  CHECK(s.q(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(s.q(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(s.mixed(0) == doctest::Approx(0.75 * 2.0 / 3.0 + 0.125).epsilon(1e-14));
  CHECK(s.mixed.sum() == doctest::Approx(1.0).epsilon(1e-15));
  Vec j(2);
  j << 0.1, 0.9;
  CHECK((exp_weights_step(scores, eta, 1.0, j).mixed - j).norm() < 1e-15);
  // Huge scores do not overflow.
  scores << 1e308, 0.0;
  const ExpWeightsStep big = exp_weights_step(scores, 1.0, 0.0, design);
  CHECK(big.q(1) == 1.0);
}

TEST_CASE("parameters and bonus constant") {
  CHECK(bonus_constant(4, 3, 4096.0, 0.01) == doctest::Approx(717.851788314108).epsilon(1e-13));
  const ExpwParams p = expw_params(4, 3, 4096, false);
  CHECK(p.gamma == doctest::Approx(0.4330127018922193).epsilon(1e-14));
  CHECK(p.eta == doctest::Approx(0.018042195912175804).epsilon(1e-14));
  CHECK(p.zeta == 4.0 / 4096.0);
  CHECK(expw_params(4, 3, 1024, false).gamma == 0.5);
}

TEST_CASE("estimate and bonus") {
  Mat phis(3, 1);
  phis << 0.5, -1.0, 2.0;
  const EstimateAndBonus eb = estimate_and_bonus(Vec::Ones(1), phis, 0, 1.7, Vec::Zero(1), 0.0, 0.1);
  CHECK(eb.rank == 1);
  CHECK(eb.rank_deficient);
  CHECK(phis.col(0).dot(eb.theta) == doctest::Approx(1.7).epsilon(1e-12));
  // Rank-one pseudo-inverse: theta = phi L / ||phi||^2.
  CHECK((eb.theta - phis.col(0) * 1.7 / phis.squaredNorm()).norm() < 1e-12);
  CHECK(eb.bonus(0) == doctest::Approx(0.1 * 1.0).epsilon(1e-12));

  Rng rng(1);
  Mat v(4, 6);
  for (int i = 0; i < 24; ++i) v(i / 6, i % 6) = rng.normal();
  Vec q = Vec::Constant(6, 1.0 / 6.0);
  Vec unc(6);
  for (int i = 0; i < 6; ++i) unc(i) = rng.uniform();
  const EstimateAndBonus zero = estimate_and_bonus(q, v, 2, 0.0, unc, 3.0, 0.5);
  CHECK(zero.theta.norm() == 0.0);
  CHECK(zero.bonus.minCoeff() >= 0.0);
  const Mat Minv = (v * q.asDiagonal() * v.transpose()).inverse();
  for (int i = 0; i < 6; ++i) CHECK(zero.bonus(i) == doctest::Approx(3.0 * unc(i) + 0.5 * v.col(i).dot(Minv * v.col(i))).epsilon(1e-10));
}

TEST_CASE("single policy has zero regret against itself") {
  const LinearMDP m = testutil::desk();
  Rng r0(2);
  const LossSchedule sch = gen_loss_schedule(desk_spec(), m, 40, r0);
  PolicySet set;
  set.policies.push_back(Policy::uniform(m.num_states(), 3));
  for (bool oracle : {true, false}) {
    Rng rng(3);
    const ExpwRun run = run_exp_weights(m, sch, set, expw_params(4, 3, 40, oracle), rng);
    CHECK(std::abs(run.ledger.final_regret()) < 1e-12);
  }
}

TEST_CASE("oracle mode on constant losses: the best policy's weight keeps rising") {
  const LinearMDP m = testutil::desk();
  EnvSpec spec = desk_spec();
  spec.kind = ScheduleKind::kConstant;
  Rng r0(5);
  const long K = 2000;
  const LossSchedule sch = gen_loss_schedule(spec, m, K, r0);
  Rng r1(6);
  const PolicySet set = build_policy_set(m, 2, r1, 16);
  ExpwParams p = expw_params(4, 3, K, true);
  p.record_weights = true;
  Rng rng(7);
  const ExpwRun run = run_exp_weights(m, sch, set, p, rng);
  REQUIRE(run.weights.size() == static_cast<std::size_t>(K));
  int best = 0;
  double best_v = 1e300;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double v = value_and_q(m, set.policies[i], sch.at(0)).value(0);
    if (v < best_v) {
      best_v = v;
      best = static_cast<int>(i);
    }
  }
  const long burn_in = K / 4;
  CHECK(run.weights.back()(best) > 0.5);
  // Bandit noise makes individual blocks wobble; the trend after burn-in rises.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(K - burn_in);
  for (long k = burn_in; k < K; ++k) {
    const double x = static_cast<double>(k), y = run.weights[static_cast<std::size_t>(k)](best);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  CHECK((n * sxy - sx * sy) / (n * sxx - sx * sx) > 0.0);
  double first = 0.0, last = 0.0;
  for (long k = 0; k < 250; ++k) {
    first += run.weights[static_cast<std::size_t>(burn_in + k)](best) / 250.0;
    last += run.weights[static_cast<std::size_t>(K - 250 + k)](best) / 250.0;
  }
  CHECK(last > first);
}

TEST_CASE("full mode records EstOM and design diagnostics") {
  const LinearMDP m = testutil::desk();
  Rng r0(5);
  const LossSchedule sch = gen_loss_schedule(desk_spec(), m, 64, r0);
  Rng r1(6);
  const PolicySet set = build_policy_set(m, 2, r1, 16);
  Rng rng(7);
  ExpwParams p = expw_params(4, 3, 64, false);
  p.diagnostic_stride = 8;
  const ExpwRun run = run_exp_weights(m, sch, set, p, rng);
  CHECK(run.estom_calls == 64 * static_cast<long>(set.size()));
  CHECK(run.lp_failures == 0);
  CHECK(run.accuracy_checks > 0);
  const auto& cert = run.ledger.columns.at("design_certificate");
  for (double c : cert) CHECK(c <= 12.0 * (1.0 + 1e-3));
  for (double f : run.ledger.columns.at("estom_feasible_frac")) CHECK((f >= 0.0 && f <= 1.0));
}
