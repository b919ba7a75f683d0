#pragma once

#include <vector>

#include "linmdp/env_suite.hpp"
#include "linmdp/mdp.hpp"

namespace testutil {

inline linmdp::LinearMDP desk(std::uint64_t seed = 7) {
  linmdp::EnvSpec spec = linmdp::desk_spec(seed);
  linmdp::Rng rng = linmdp::Rng::derive(seed, 0);
  return linmdp::gen_linear_mdp(spec, rng);
}

/// Random stochastic policy with full support.
inline linmdp::Policy random_policy(const linmdp::LinearMDP& mdp, linmdp::Rng& rng) {
  linmdp::Mat t(mdp.num_states(), mdp.num_actions());
  for (int s = 0; s < mdp.num_states(); ++s) {
    const auto w = rng.dirichlet(mdp.num_actions(), 1.0);
    for (int a = 0; a < mdp.num_actions(); ++a) t(s, a) = w[static_cast<std::size_t>(a)];
  }
  return linmdp::Policy(t);
}

/// All deterministic action tables of the instance.
inline std::vector<linmdp::Policy> all_deterministic(const linmdp::LinearMDP& mdp) {
  const int N = mdp.num_states();
  const int A = mdp.num_actions();
  std::vector<linmdp::Policy> out;
  std::vector<int> acts(static_cast<std::size_t>(N), 0);
  while (true) {
    out.push_back(linmdp::Policy::deterministic(acts, A));
    int i = 0;
    while (i < N && ++acts[static_cast<std::size_t>(i)] == A) acts[static_cast<std::size_t>(i++)] = 0;
    if (i == N) break;
  }
  return out;
}

/// Tiny hand-built instance: d = 2, two layers, states {0} -> {1, 2}.
/// phi(0, a) = e_a, psi(1) = (1, 0), psi(2) = (0, 1), second layer features
/// are the standard simplex corners too.
inline linmdp::LinearMDP chain2() {
  linmdp::Mat phi(2, 6);
  phi << 1, 0, 1, 0, 1, 0,
         0, 1, 0, 1, 0, 1;
  linmdp::Mat psi(2, 3);
  psi << 0, 1, 0,
         0, 0, 1;
  return linmdp::LinearMDP({1, 2}, 2, phi, psi);
}

}  // namespace testutil
