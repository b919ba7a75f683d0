#pragma once

// Finite sets of argmin-linear policies pi(s) = argmin_a <phi(s,a), theta_h>.

#include <vector>

#include "linmdp/mdp.hpp"

namespace linmdp {

struct PolicySet {
  std::vector<Policy> policies;
  /// Per policy the H x d parameters it was generated from (empty for explicit policies).
  std::vector<Mat> parameters;

  std::size_t size() const { return policies.size(); }
};

/// Deterministic argmin policy, lowest action index on ties.
Policy argmin_policy(const LinearMDP& mdp, const Mat& theta);

/// Distinct policies (by action table) in the given order.
PolicySet policies_from_parameters(const LinearMDP& mdp, const std::vector<Mat>& thetas);

/// G grid values per coordinate on a random 2-D subspace of R^d per layer.
/// Keeps at most max_policies distinct policies (0 keeps all), chosen in a
/// seeded random order.
PolicySet build_policy_set(const LinearMDP& mdp, int grid, Rng& rng, std::size_t max_policies = 0);

}  // namespace linmdp
