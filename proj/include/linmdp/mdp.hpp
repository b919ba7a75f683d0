#pragma once

// Layered finite linear MDPs and their exact oracles.
//
// Conventions: layers are 0-based (h = 0 .. H-1), states carry global integer
// ids partitioned contiguously by layer, and layer 0 holds the single initial
// state. Feature vectors are stored as columns of a d x (N*A) matrix.

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "linmdp/rng.hpp"

namespace linmdp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when an instance violates a structural invariant.
class InvalidInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-layer loss vectors of one episode: row h is theta_h (H x d).
using LossVectors = Mat;

/// Per-state action distributions, one row per state (N x A).
class Policy {
 public:
  Policy() = default;
  explicit Policy(Mat table);
  static Policy uniform(int num_states, int num_actions);
  /// One action per state.
  static Policy deterministic(std::span<const int> actions, int num_actions);

  const Mat& table() const { return table_; }
  double prob(int s, int a) const { return table_(s, a); }
  auto row(int s) const { return table_.row(s); }
  int num_states() const { return static_cast<int>(table_.rows()); }
  int num_actions() const { return static_cast<int>(table_.cols()); }

 private:
  Mat table_;
};

class LinearMDP {
 public:
  /// features: d x (N*A), column s*A + a holds phi(s, a).
  /// psi: d x N, column s holds psi(s); columns of layer-0 states must be zero.
  LinearMDP(std::vector<int> layer_sizes, int num_actions, Mat features, Mat psi);

  int horizon() const { return static_cast<int>(layer_sizes_.size()); }
  int dim() const { return static_cast<int>(features_.rows()); }
  int num_actions() const { return num_actions_; }
  int num_states() const { return layer_begin_.back(); }
  int layer_size(int h) const { return layer_sizes_[static_cast<std::size_t>(h)]; }
  int layer_begin(int h) const { return layer_begin_[static_cast<std::size_t>(h)]; }
  int layer_end(int h) const { return layer_begin_[static_cast<std::size_t>(h) + 1]; }
  int layer_of(int s) const { return layer_of_[static_cast<std::size_t>(s)]; }
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int initial_state() const { return 0; }

  auto feature(int s, int a) const { return features_.col(s * num_actions_ + a); }
  const Mat& features() const { return features_; }
  auto psi(int s) const { return psi_.col(s); }
  const Mat& psi_matrix() const { return psi_; }

  /// True transition rows out of layer h: (|S_h|*A) x |S_{h+1}|, row
  /// (s - layer_begin(h))*A + a.
  const Mat& transitions(int h) const { return transitions_[static_cast<std::size_t>(h)]; }
  double transition(int s, int a, int next) const;
  /// Model transition <phi(s,a), psi(next)> ignoring any misspecification.
  double linear_transition(int s, int a, int next) const;

  /// Additive loss perturbation (zero for exact instances), N x A.
  const Mat& loss_offsets() const { return loss_offsets_; }
  /// Declared misspecification level; zero means exact linear MDP.
  double misspecification() const { return zeta_; }
  bool exact() const { return zeta_ == 0.0; }

  /// Copy with replaced simulator dynamics and loss offsets. Rows must stay
  /// stochastic and deviate from the linear model by at most zeta in L1.
  LinearMDP with_true_dynamics(std::vector<Mat> transitions, Mat loss_offsets, double zeta) const;

 private:
  void build_index();
  void validate_features() const;
  void build_linear_transitions();
  void validate_dynamics() const;

  std::vector<int> layer_sizes_;
  std::vector<int> layer_begin_;
  std::vector<int> layer_of_;
  int num_actions_;
  Mat features_;
  Mat psi_;
  std::vector<Mat> transitions_;
  Mat loss_offsets_;
  double zeta_ = 0.0;
};

/// Loss of every (s, a) under the episode's loss vectors (N x A).
Mat loss_table(const LinearMDP& mdp, const LossVectors& theta);

/// State occupancy by exact forward recursion; sums to one on every layer.
Vec occupancy(const LinearMDP& mdp, const Policy& policy);

struct ValueTables {
  Vec value;  // N
  Mat q;      // N x A
};

/// Exact backward recursion for V and Q of a policy under one episode's losses.
ValueTables value_and_q(const LinearMDP& mdp, const Policy& policy, const LossVectors& theta);
ValueTables value_and_q_table(const LinearMDP& mdp, const Policy& policy, const Mat& losses);

/// Sum over (s, a) of mu(s) pi(a|s) loss(s, a).
double expected_loss(const LinearMDP& mdp, const Vec& mu, const Policy& policy, const Mat& losses);

/// Expected feature per layer under the policy: column h = sum_s mu(s) sum_a pi(a|s) phi(s,a).
Mat feature_expectations(const LinearMDP& mdp, const Policy& policy, const Vec& mu);

/// Exact policy value from precomputed feature expectations, valid for exact
/// instances (the loss offset term is added from offset_value).
double value_from_features(const Mat& feature_expectation, const LossVectors& theta,
                           double offset_value = 0.0);

struct QVectorResult {
  std::vector<Vec> q;         // per layer, length d
  double max_residual = 0.0;  // max |Q(s,a) - <phi(s,a), q_h>|
  double max_norm = 0.0;      // max_h ||q_h||_2
  bool flagged = false;       // residual above tolerance
};

/// Linear Q representation q_h = theta_h + sum_{s'} psi(s') V(s'); flags
/// instances whose Q fails to be linear in the features.
QVectorResult q_vector(const LinearMDP& mdp, const Policy& policy, const LossVectors& theta,
                       double tolerance = 1e-9);

struct Step {
  int state;
  int action;
  double loss;
};

struct Trajectory {
  long episode = 0;
  std::vector<Step> steps;  // one per layer
  double total_loss() const;
};

Trajectory sample_episode(const LinearMDP& mdp, const Policy& policy, const LossVectors& theta,
                          Rng& rng, long episode = 0);
/// Samples actions/transitions only; losses are filled from a precomputed table.
Trajectory sample_episode_table(const LinearMDP& mdp, const Policy& policy, const Mat& losses,
                                Rng& rng, long episode = 0);

struct BestResponse {
  Policy policy;  // deterministic, lowest action index on ties
  double value;   // value at the initial state
};

/// Deterministic policy minimizing the expected sum of the given loss table.
BestResponse best_response(const LinearMDP& mdp, const Mat& losses);

/// clip[x] = max(min(x, 1), -1).
constexpr double clip(double x) { return x > 1.0 ? 1.0 : (x < -1.0 ? -1.0 : x); }

void validate_policy(const LinearMDP& mdp, const Policy& policy);

}  // namespace linmdp
