#pragma once

#include "linmdp/env_suite.hpp"
#include "linmdp/ledger.hpp"

namespace linmdp {

/// Uniformly random actions every episode.
RegretLedger run_uniform_baseline(const LinearMDP& mdp, const LossSchedule& schedule, Rng& rng);

/// Follow-the-leader: best response to the sum of all past loss functions
/// (full information); the first episode plays uniformly.
RegretLedger run_greedy_baseline(const LinearMDP& mdp, const LossSchedule& schedule, Rng& rng);

}  // namespace linmdp
