#pragma once

// Occupancy-measure estimation from historical transitions: per-(h, f)
// ball-constrained least squares, then a linear program for mu_hat.

#include <string>
#include <vector>

#include "linmdp/explore.hpp"
#include "linmdp/mdp.hpp"
#include "linmdp/policy_set.hpp"

namespace linmdp {

/// Sampled members of F^pi: values on every state, all in [-1, 1].
struct SampledFunctions {
  Mat values;              // N x F
  std::vector<int> kind;   // 1 or 2
};

/// n1 functions sum_a pi(a|s) clip(phi^T theta) with theta uniform in the
/// ball of radius sqrt(d), and n2 functions sum_a pi(a|s) ||phi||_Gamma with
/// diagonal Gamma, entries uniform in [0, 1].
SampledFunctions sample_functions(const LinearMDP& mdp, const Policy& policy, int n1, int n2, Rng& rng);

/// Regression statistics per layer: gram[h] = sum w phi phi^T (no identity),
/// next_sums[h] (d x |S_{h+1}|) = sum w phi over triples landing in each s'.
struct RegressionData {
  std::vector<Mat> gram;
  std::vector<Mat> next_sums;
  std::vector<double> count;
};

RegressionData regression_data(const LinearMDP& mdp, const std::vector<std::vector<Triple>>& datasets);
/// Every (s, a) weighted by n, next states by n P(s'|s,a).
RegressionData saturated_data(const LinearMDP& mdp, double n);
void add_triple(RegressionData& data, const LinearMDP& mdp, int h, const Triple& t, double weight = 1.0);

/// Eigendecomposition of a layer's Gram, shared across functions.
struct LayerSolver {
  Mat vectors;
  Vec values;
  double radius;

  LayerSolver(const Mat& gram, double radius);
  /// argmin_{||xi|| <= radius} xi^T G xi - 2 c^T xi, minimum norm among minimizers.
  /// c must lie in the range of G (c = X^T y for the regression data).
  Vec solve(const Vec& c) const;
};

enum class EstomFallback { kUniform, kMinViolation };

struct EstomOptions {
  double zeta = 0.0;
  EstomFallback fallback = EstomFallback::kUniform;
};

struct EstomSolution {
  Vec mu;                              // N
  std::vector<std::vector<Vec>> xi;    // [h][f] for h < H-1
  bool feasible = false;
  bool lp_failed = false;
  double max_violation = 0.0;          // max_i |residual_i| of the LP solution
  double total_violation = 0.0;
  std::string status;
};

/// Residual of the consistency constraint for (h, f) at mu:
/// sum_{s'} mu(s') f(s') - sum_{s,a} mu(s) pi(a|s) clip(phi^T xi).
double estom_residual(const LinearMDP& mdp, const Policy& policy, const Vec& f, const Vec& xi, int h, const Vec& mu);

/// Stage 1 solutions for every (h, f).
std::vector<std::vector<Vec>> estom_regressions(const LinearMDP& mdp, const std::vector<LayerSolver>& solvers,
                                                const RegressionData& data, const SampledFunctions& funcs);

EstomSolution estom(const LinearMDP& mdp, const Policy& policy, const std::vector<LayerSolver>& solvers,
                    const RegressionData& data, const SampledFunctions& funcs, const EstomOptions& opts);

std::vector<LayerSolver> layer_solvers(const LinearMDP& mdp, const RegressionData& data);

/// sum_s sum_a mu(s) pi(a|s) phi(s,a) per layer, stacked into R^{dH}.
Vec feature_estimate(const LinearMDP& mdp, const Policy& policy, const Vec& mu);

}  // namespace linmdp
