#pragma once

// Pure-exploration warm-up: collects per-layer data until every policy reaches
// unknown states with small probability.

#include <string>
#include <vector>

#include <json.hpp>

#include "linmdp/env_suite.hpp"
#include "linmdp/gram.hpp"
#include "linmdp/mdp.hpp"

namespace linmdp {

/// One observed transition; next is -1 on the last layer.
struct Triple {
  int state;
  int action;
  int next;
};

struct ExploreParams {
  double rho = 0.3;
  double eps_cov = 0.1;
  double delta = 0.01;
  long budget = 2000;
  /// Enumerate all deterministic policies for the certificate when A^N is at most this.
  long enumerate_limit = 4096;
  int sampled_policies = 256;
};

struct KnownStateReport {
  ExploreParams params;
  long episodes_used = 0;  // K0
  std::vector<std::vector<Triple>> datasets;  // D_h
  std::vector<Mat> gram;                      // Lambda_h
  std::vector<std::vector<int>> known;        // Z_h as state ids
  std::vector<char> is_known;                 // per state
  bool certificate_passed = false;
  std::string certificate_kind;
  /// Largest unknown mass over the certificate set, per layer.
  Vec worst_unknown_mass;
  std::vector<Policy> certificate_policies;
  std::vector<Vec> certificate_masses;
  /// Episodes actually played: the policy index into `policies` and the trajectory.
  std::vector<Policy> policies;
  std::vector<int> episode_policy;
  std::vector<Trajectory> trajectories;
};

/// sum_{s in S_h, s not known} mu^pi(s) for every layer h.
Vec unknown_mass(const LinearMDP& mdp, const Policy& policy, const std::vector<char>& is_known);

/// Deterministic policy maximizing the mass of unknown states on layer h, and
/// that mass; exact over all policies.
BestResponse worst_unknown_policy(const LinearMDP& mdp, const std::vector<char>& is_known, int h);

/// Z_h membership from a Gram matrix: every action has ||phi||_{Lambda^{-1}} <= rho.
std::vector<char> known_states(const LinearMDP& mdp, const std::vector<Mat>& gram_inverse, double rho);

/// Runs the explorer on the simulator. When a schedule is supplied, realized
/// losses of exploration episodes are read from it (episode index = position).
KnownStateReport pure_explore(const LinearMDP& mdp, const ExploreParams& params, Rng& rng,
                              const LossSchedule* schedule = nullptr);

nlohmann::json report_to_json(const KnownStateReport& report);

}  // namespace linmdp
