#include "linmdp/ledger.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>

namespace linmdp {

void RegretLedger::add_column(const std::string& name) {
  if (columns.contains(name)) return;
  column_order.push_back(name);
  columns[name];
}

void RegretLedger::push(const std::string& column, double value) {
  auto it = columns.find(column);
  if (it == columns.end()) throw std::invalid_argument("unknown ledger column: " + column);
  it->second.push_back(value);
}

void RegretLedger::finalize(std::vector<double> comparator_values) {
  if (comparator_values.size() != expected_value.size()) {
    throw std::invalid_argument("comparator values must cover every episode");
  }
  comparator_value = std::move(comparator_values);
  cumulative_regret.resize(expected_value.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < expected_value.size(); ++k) {
    acc += expected_value[k] - comparator_value[k];
    cumulative_regret[k] = acc;
  }
}

double RegretLedger::final_regret() const {
  if (cumulative_regret.empty()) throw std::logic_error("empty ledger");
  return cumulative_regret.back();
}

double regret_against(const std::vector<double>& learner_values,
                      const std::vector<std::vector<double>>& comparator_values) {
  if (learner_values.empty()) throw std::invalid_argument("regret of an empty ledger");
  if (comparator_values.empty()) throw std::invalid_argument("empty comparator set");
  const double learner = std::accumulate(learner_values.begin(), learner_values.end(), 0.0);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : comparator_values) {
    if (c.size() != learner_values.size()) throw std::invalid_argument("comparator length mismatch");
    best = std::min(best, std::accumulate(c.begin(), c.end(), 0.0));
  }
  return learner - best;
}

double regret(const RegretLedger& ledger) {
  if (ledger.episodes() == 0) throw std::invalid_argument("regret of an empty ledger");
  if (ledger.comparator_value.size() != ledger.episodes()) throw std::logic_error("ledger not finalized");
  double r = 0.0;
  for (std::size_t k = 0; k < ledger.episodes(); ++k) r += ledger.expected_value[k] - ledger.comparator_value[k];
  return r;
}

BestResponse hindsight_best_policy(const LinearMDP& mdp, const std::vector<LossVectors>& schedule,
                                   long first_episode, long num_episodes) {
  Mat total = Mat::Zero(mdp.num_states(), mdp.num_actions());
  if (mdp.exact()) {
    LossVectors sum = LossVectors::Zero(mdp.horizon(), mdp.dim());
    for (long k = first_episode; k < first_episode + num_episodes; ++k) sum += schedule[static_cast<std::size_t>(k)];
    total = loss_table(mdp, sum);
  } else {
    for (long k = first_episode; k < first_episode + num_episodes; ++k) {
      total += loss_table(mdp, schedule[static_cast<std::size_t>(k)]);
    }
  }
  return best_response(mdp, total);
}

std::vector<double> policy_values(const LinearMDP& mdp, const Policy& policy,
                                  const std::vector<LossVectors>& schedule, long first_episode,
                                  long num_episodes) {
  PolicyEvaluator eval(mdp, policy);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(num_episodes));
  for (long k = first_episode; k < first_episode + num_episodes; ++k) {
    out.push_back(eval.value(schedule[static_cast<std::size_t>(k)]));
  }
  return out;
}

void finalize_against_best_policy(RegretLedger& ledger, const LinearMDP& mdp, const std::vector<LossVectors>& schedule) {
  const long K = static_cast<long>(ledger.episodes());
  const BestResponse best = hindsight_best_policy(mdp, schedule, 0, K);
  ledger.comparator_set = "all-policies-dp";
  ledger.comparator_identity = describe_policy(best.policy);
  ledger.finalize(policy_values(mdp, best.policy, schedule, 0, K));
}

std::string describe_policy(const Policy& policy) {
  std::string out;
  for (int s = 0; s < policy.num_states(); ++s) {
    Eigen::Index a;
    if (policy.row(s).maxCoeff(&a) != 1.0) return "stochastic";
    if (!out.empty()) out += ' ';
    out += std::to_string(a);
  }
  return out;
}

PolicyEvaluator::PolicyEvaluator(const LinearMDP& mdp, const Policy& policy)
    : mdp_(&mdp), policy_(policy), mu_(linmdp::occupancy(mdp, policy)) {
  features_ = feature_expectations(mdp, policy, mu_);
}

double PolicyEvaluator::value(const LossVectors& theta) const {
  if (mdp_->exact()) return value_from_features(features_, theta);
  return expected_loss(*mdp_, mu_, policy_, loss_table(*mdp_, theta));
}

}  // namespace linmdp
