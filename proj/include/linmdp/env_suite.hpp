#pragma once

// Random generators for valid linear MDPs, oblivious loss schedules and
// misspecified simulators.

#include <cstdint>
#include <string>
#include <vector>

#include "linmdp/mdp.hpp"
#include "linmdp/rng.hpp"

namespace linmdp {

enum class ScheduleKind { kConstant, kIid, kDrift, kSwitching };

std::string to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(const std::string& name);

struct EnvSpec {
  int d = 4;
  int horizon = 3;
  int num_actions = 3;
  /// States per layer; the first entry is forced to 1 (the initial state).
  std::vector<int> layer_sizes{1, 5, 5};
  int anchors = 4;
  /// Dirichlet concentration of the anchor weights inside phi.
  double feature_concentration = 0.5;
  ScheduleKind kind = ScheduleKind::kSwitching;
  double zeta = 0.0;
  std::uint64_t seed = 7;

  void validate() const;
};

/// The desk-scale instance used throughout the test suites.
EnvSpec desk_spec(std::uint64_t seed = 7);

struct LossSchedule {
  long num_episodes = 0;
  ScheduleKind kind = ScheduleKind::kConstant;
  std::vector<LossVectors> theta;  // one H x d matrix per episode

  const LossVectors& at(long k) const { return theta[static_cast<std::size_t>(k)]; }
};

/// Throws InvalidInstance naming the first violating (episode, state, action).
void validate_schedule(const LinearMDP& mdp, const LossSchedule& schedule);

/// Anchor-mixture instance. anchors[h] is m x |S_{h+1}| with rows on the
/// simplex; weights is m x (N*A) with columns on the simplex. Features are
/// rescaled per layer to unit maximum norm (psi inversely) when rescale is set.
LinearMDP build_anchor_mdp(const std::vector<int>& layer_sizes, int num_actions, int d,
                           const std::vector<Mat>& anchors, const Mat& weights, bool rescale = true);

LinearMDP gen_linear_mdp(const EnvSpec& spec, Rng& rng);

/// Vector u_h with <phi(s,a), u_h> = 1 for every pair of layer h, if one exists.
bool constant_loss_direction(const LinearMDP& mdp, int h, Vec& out);

/// Affinely maps <phi, raw> into [lo, hi] over layer h, returning theta.
Vec rescale_loss_vector(const LinearMDP& mdp, int h, const Vec& raw, double lo = 0.05, double hi = 0.95);

LossSchedule gen_loss_schedule(const EnvSpec& spec, const LinearMDP& mdp, long num_episodes, Rng& rng);

/// Simulator whose transitions and losses deviate from the linear model by at
/// most zeta; the learner-visible features are unchanged.
LinearMDP misspecify(const LinearMDP& mdp, double zeta, Rng& rng);

/// Maximum L1 distance of a simulator row from <phi(s,a), psi(.)>.
double max_transition_deviation(const LinearMDP& mdp);

}  // namespace linmdp
