#include <doctest.h>

#include <cmath>

#include "linmdp/estom.hpp"
#include "linmdp/policy_set.hpp"
#include "test_util.hpp"

using namespace linmdp;

namespace {

void check_layer_sums(const LinearMDP& m, const Vec& mu) {
  CHECK(mu.minCoeff() >= 0.0);
  CHECK(mu.maxCoeff() <= 1.0);
  for (int h = 0; h < m.horizon(); ++h) CHECK(std::abs(mu.segment(m.layer_begin(h), m.layer_size(h)).sum() - 1.0) <= 1e-12);
}

}  // namespace

TEST_CASE("sampled functions stay in range") {
  const LinearMDP m = testutil::desk();
  Rng rng(1);
  const Policy pol = testutil::random_policy(m, rng);
  const SampledFunctions f = sample_functions(m, pol, 32, 32, rng);
  CHECK(f.values.cols() == 64);
  CHECK(f.values.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(f.kind.front() == 1);
  CHECK(f.kind.back() == 2);
}

TEST_CASE("ball-constrained least squares against a projected-gradient oracle") {
  Rng rng(2);
  for (int rep = 0; rep < 30; ++rep) {
    Mat X(6, 4);
    for (int i = 0; i < 24; ++i) X(i / 4, i % 4) = rng.normal();
    if (rep % 3 == 0) X.col(3) = X.col(0);  // rank deficient
    const Mat G = X.transpose() * X;
    Vec y(6);
    for (int i = 0; i < 6; ++i) y(i) = rng.normal() * (rep % 2 == 0 ? 0.3 : 30.0);
    const Vec c = X.transpose() * y;
    const double radius = 2.0;
    const Vec xi = LayerSolver(G, radius).solve(c);
    CHECK(xi.norm() <= radius + 1e-12);
    // Projected gradient on the objective x^T G x - 2 c^T x.
    Vec x = Vec::Zero(4);
    const double L = 2.0 * std::max(1.0, Eigen::SelfAdjointEigenSolver<Mat>(G).eigenvalues().maxCoeff());
    for (int it = 0; it < 200000; ++it) {
      x -= (2.0 * (G * x - c)) / L;
      if (x.norm() > radius) x *= radius / x.norm();
    }
    auto obj = [&](const Vec& v) { return v.dot(G * v) - 2.0 * c.dot(v); };
    CHECK(obj(xi) <= obj(x) + 1e-8 * (1.0 + std::abs(obj(x))));
  }
  // No data: the minimum-norm minimizer is zero.
  CHECK(LayerSolver(Mat::Zero(3, 3), 1.0).solve(Vec::Ones(3)).norm() == 0.0);
}

TEST_CASE("saturated tabular data certifies the true occupancy") {
  const LinearMDP m = testutil::desk();
  Rng rng(3);
  const long K = 4096;
  const double zeta = 4.0 / K;
  const RegressionData data = saturated_data(m, 1000.0);
  const auto solvers = layer_solvers(m, data);
  PolicySet set = build_policy_set(m, 2, rng, 16);
  set.policies.push_back(testutil::random_policy(m, rng));
  for (const Policy& pol : set.policies) {
    const SampledFunctions f = sample_functions(m, pol, 32, 32, rng);
    const Vec mu = occupancy(m, pol);
    const auto xi = estom_regressions(m, solvers, data, f);
    for (int h = 0; h + 1 < m.horizon(); ++h) {
      for (Eigen::Index k = 0; k < f.values.cols(); ++k) {
        CHECK(std::abs(estom_residual(m, pol, f.values.col(k), xi[static_cast<std::size_t>(h)][static_cast<std::size_t>(k)], h, mu)) <= zeta);
      }
    }
    const EstomSolution sol = estom(m, pol, solvers, data, f, EstomOptions{zeta, EstomFallback::kUniform});
    CHECK(sol.feasible);
    CHECK(sol.status == "feasible");
    CHECK(sol.max_violation <= zeta + 1e-8);
    check_layer_sums(m, sol.mu);
    for (const auto& layer : sol.xi) {
      for (const Vec& x : layer) CHECK(x.norm() <= 2.0 + 1e-12);
    }
  }
}

TEST_CASE("empty data falls back to the uniform occupancy") {
  const LinearMDP m = testutil::desk();
  Rng rng(4);
  const Policy pol = testutil::random_policy(m, rng);
  const RegressionData data = regression_data(m, std::vector<std::vector<Triple>>(3));
  const auto solvers = layer_solvers(m, data);
  const SampledFunctions f = sample_functions(m, pol, 32, 32, rng);
  const EstomSolution sol = estom(m, pol, solvers, data, f, EstomOptions{4.0 / 4096, EstomFallback::kUniform});
  for (const auto& layer : sol.xi) {
    for (const Vec& x : layer) CHECK(x.norm() == 0.0);
  }
  CHECK_FALSE(sol.feasible);
  CHECK(sol.status == "fallback-uniform");
  check_layer_sums(m, sol.mu);
  CHECK(sol.mu(1) == doctest::Approx(0.2));

  const EstomSolution mv = estom(m, pol, solvers, data, f, EstomOptions{4.0 / 4096, EstomFallback::kMinViolation});
  CHECK(mv.status == "fallback-min-violation");
  check_layer_sums(m, mv.mu);
}

TEST_CASE("single-state layers force mu = 1") {
  Mat phi = Mat::Ones(1, 6);
  Mat psi(1, 3);
  psi << 0, 1, 1;
  const LinearMDP chain({1, 1, 1}, 2, phi, psi);
  Rng rng(5);
  const Policy pol = Policy::uniform(3, 2);
  const RegressionData data = saturated_data(chain, 3.0);
  const EstomSolution sol = estom(chain, pol, layer_solvers(chain, data), data, sample_functions(chain, pol, 4, 4, rng),
                                  EstomOptions{0.01, EstomFallback::kUniform});
  CHECK(sol.mu == Vec::Ones(3));
}

TEST_CASE("outputs satisfy the layer constraints on partial data") {
  const LinearMDP m = testutil::desk();
  Rng rng(6);
  const Policy behaviour = Policy::uniform(m.num_states(), 3);
  const Mat zero = Mat::Zero(m.num_states(), 3);
  for (int n : {1, 5, 20, 200}) {
    std::vector<std::vector<Triple>> ds(3);
    for (int i = 0; i < n; ++i) {
      const Trajectory t = sample_episode_table(m, behaviour, zero, rng);
      for (int h = 0; h < 3; ++h) {
        ds[static_cast<std::size_t>(h)].push_back({t.steps[static_cast<std::size_t>(h)].state, t.steps[static_cast<std::size_t>(h)].action,
                                                   h + 1 < 3 ? t.steps[static_cast<std::size_t>(h + 1)].state : -1});
      }
    }
    const RegressionData data = regression_data(m, ds);
    const auto solvers = layer_solvers(m, data);
    const Policy pol = testutil::random_policy(m, rng);
    for (EstomFallback fb : {EstomFallback::kUniform, EstomFallback::kMinViolation}) {
      const EstomSolution sol = estom(m, pol, solvers, data, sample_functions(m, pol, 32, 32, rng), EstomOptions{4.0 / 4096, fb});
      CHECK_FALSE(sol.lp_failed);
      check_layer_sums(m, sol.mu);
    }
  }
}

TEST_CASE("feature estimate") {
  const LinearMDP m = testutil::desk();
  Rng rng(7);
  const Policy pol = testutil::random_policy(m, rng);
  const Vec mu = occupancy(m, pol);
  const Vec est = feature_estimate(m, pol, mu);
  const Mat exact = feature_expectations(m, pol, mu);
  for (int h = 0; h < 3; ++h) CHECK((est.segment(4 * h, 4) - exact.col(h)).cwiseAbs().maxCoeff() <= 1e-12);
  // Mass on a single state of layer 1.
  Vec point = Vec::Zero(m.num_states());
  point(0) = 1.0;
  point(2) = 1.0;
  const Vec ep = feature_estimate(m, pol, point);
  Vec expect = Vec::Zero(4);
  for (int a = 0; a < 3; ++a) expect += pol.prob(2, a) * m.feature(2, a);
  CHECK((ep.segment(4, 4) - expect).cwiseAbs().maxCoeff() <= 1e-15);
}
