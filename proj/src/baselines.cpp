#include "linmdp/baselines.hpp"

namespace linmdp {

RegretLedger run_uniform_baseline(const LinearMDP& mdp, const LossSchedule& schedule, Rng& rng) {
  RegretLedger ledger;
  ledger.algorithm = "uniform-baseline";
  const Policy pol = Policy::uniform(mdp.num_states(), mdp.num_actions());
  const PolicyEvaluator eval(mdp, pol);
  for (long k = 0; k < schedule.num_episodes; ++k) {
    ledger.realized_loss.push_back(sample_episode(mdp, pol, schedule.at(k), rng, k).total_loss());
    ledger.expected_value.push_back(eval.value(schedule.at(k)));
  }
  finalize_against_best_policy(ledger, mdp, schedule.theta);
  return ledger;
}

RegretLedger run_greedy_baseline(const LinearMDP& mdp, const LossSchedule& schedule, Rng& rng) {
  RegretLedger ledger;
  ledger.algorithm = "greedy-baseline";
  Mat cumulative = Mat::Zero(mdp.num_states(), mdp.num_actions());
  for (long k = 0; k < schedule.num_episodes; ++k) {
    const Policy pol = k == 0 ? Policy::uniform(mdp.num_states(), mdp.num_actions()) : best_response(mdp, cumulative).policy;
    const Mat losses = loss_table(mdp, schedule.at(k));
    ledger.realized_loss.push_back(sample_episode_table(mdp, pol, losses, rng, k).total_loss());
    ledger.expected_value.push_back(expected_loss(mdp, occupancy(mdp, pol), pol, losses));
    cumulative += losses;
  }
  finalize_against_best_policy(ledger, mdp, schedule.theta);
  return ledger;
}

}  // namespace linmdp
