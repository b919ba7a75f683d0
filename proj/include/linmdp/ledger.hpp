#pragma once

#include <map>
#include <string>
#include <vector>

#include "linmdp/mdp.hpp"

namespace linmdp {

/// Per-episode record of a run plus named diagnostic columns.
///
/// Regret is always measured against a fixed comparator: the policy that is
/// best in hindsight over `comparator_set` for the realized loss sequence.
struct RegretLedger {
  std::string algorithm;
  std::string comparator_set;       // e.g. "all-policies-dp", "policy-set"
  std::string comparator_identity;  // description of the chosen comparator

  std::vector<double> realized_loss;     // L_k
  std::vector<double> expected_value;    // V^{pi_k}(s_1; l_k)
  std::vector<double> comparator_value;  // V^{pi*}(s_1; l_k)
  std::vector<double> cumulative_regret;

  /// Extra per-episode columns in insertion order (e.g. epoch, ftrl_gap_max).
  std::vector<std::string> column_order;
  std::map<std::string, std::vector<double>> columns;
  /// Run-level counters and summary values.
  std::map<std::string, double> summary;

  std::size_t episodes() const { return expected_value.size(); }
  void add_column(const std::string& name);
  void push(const std::string& column, double value);
  /// Fills comparator_value and cumulative_regret given per-episode comparator values.
  void finalize(std::vector<double> comparator_values);
  double final_regret() const;
};

/// sum_k learner_k - min over comparators of sum_k comparator_values[c][k].
double regret_against(const std::vector<double>& learner_values,
                      const std::vector<std::vector<double>>& comparator_values);

/// Final cumulative regret of a finalized ledger.
double regret(const RegretLedger& ledger);

/// Exact best fixed policy in hindsight over all policies, via dynamic
/// programming on the cumulative loss table.
BestResponse hindsight_best_policy(const LinearMDP& mdp, const std::vector<LossVectors>& schedule,
                                   long first_episode, long num_episodes);

/// Finalizes against the exact hindsight-best policy over all policies and
/// records its action table as the comparator identity.
void finalize_against_best_policy(RegretLedger& ledger, const LinearMDP& mdp, const std::vector<LossVectors>& schedule);

/// "a0 a1 ..." for deterministic policies, "stochastic" otherwise.
std::string describe_policy(const Policy& policy);

/// Per-episode exact values of a fixed policy over a range of the schedule.
std::vector<double> policy_values(const LinearMDP& mdp, const Policy& policy,
                                  const std::vector<LossVectors>& schedule, long first_episode,
                                  long num_episodes);

/// Evaluates per-episode values of fixed policies quickly by caching their
/// feature expectations; perturbed instances fall back to the loss table.
class PolicyEvaluator {
 public:
  PolicyEvaluator(const LinearMDP& mdp, const Policy& policy);
  double value(const LossVectors& theta) const;
  const Vec& occupancy() const { return mu_; }

 private:
  const LinearMDP* mdp_;
  Policy policy_;
  Vec mu_;
  Mat features_;
};

}  // namespace linmdp
