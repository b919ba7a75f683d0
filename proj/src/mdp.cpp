#include "linmdp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace linmdp {

namespace {

constexpr double kStochasticTol = 1e-10;
constexpr double kClampTol = 1e-12;

// Inverse-CDF draw from a probability row; falls back to the last positive
// entry when rounding leaves the target above the accumulated mass.
template <typename Row>
int sample_index(Rng& rng, const Row& row) {
  const double target = rng.uniform();
  double acc = 0.0;
  int last = -1;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    if (row(i) <= 0.0) continue;
    acc += row(i);
    last = static_cast<int>(i);
    if (target < acc) return last;
  }
  if (last < 0) throw std::runtime_error("sampling from an all-zero probability row");
  return last;
}

std::string describe(const char* what, int s, int a) {
  std::ostringstream os;
  os << what << " at state " << s << ", action " << a;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Policy

Policy::Policy(Mat table) : table_(std::move(table)) {
  for (Eigen::Index s = 0; s < table_.rows(); ++s) {
    double total = 0.0;
    for (Eigen::Index a = 0; a < table_.cols(); ++a) {
      if (!(table_(s, a) >= -1e-12)) throw std::invalid_argument("policy: negative probability");
      table_(s, a) = std::max(table_(s, a), 0.0);
      total += table_(s, a);
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("policy: row does not sum to one");
    table_.row(s) /= total;
  }
}

Policy Policy::uniform(int num_states, int num_actions) {
  return Policy(Mat::Constant(num_states, num_actions, 1.0 / num_actions));
}

Policy Policy::deterministic(std::span<const int> actions, int num_actions) {
  Mat t = Mat::Zero(static_cast<Eigen::Index>(actions.size()), num_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) t(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
  return Policy(std::move(t));
}

void validate_policy(const LinearMDP& mdp, const Policy& policy) {
  if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions()) {
    throw std::invalid_argument("policy shape does not match the MDP");
  }
}

// ---------------------------------------------------------------------------
// LinearMDP

LinearMDP::LinearMDP(std::vector<int> layer_sizes, int num_actions, Mat features, Mat psi)
    : layer_sizes_(std::move(layer_sizes)),
      num_actions_(num_actions),
      features_(std::move(features)),
      psi_(std::move(psi)) {
  if (layer_sizes_.empty()) throw InvalidInstance("horizon must be positive");
  if (layer_sizes_.front() != 1) throw InvalidInstance("first layer must hold exactly one state");
  for (int n : layer_sizes_) {
    if (n <= 0) throw InvalidInstance("every layer needs at least one state");
  }
  if (num_actions_ <= 0) throw InvalidInstance("action set must be nonempty");
  if (features_.rows() <= 0) throw InvalidInstance("dimension must be positive");
  build_index();
  if (features_.cols() != static_cast<Eigen::Index>(num_states()) * num_actions_) {
    throw InvalidInstance("feature matrix must have N*A columns");
  }
  if (psi_.rows() != features_.rows() || psi_.cols() != num_states()) {
    throw InvalidInstance("psi matrix must be d x N");
  }
  validate_features();
  build_linear_transitions();
  loss_offsets_ = Mat::Zero(num_states(), num_actions_);
}

void LinearMDP::build_index() {
  layer_begin_.assign(1, 0);
  layer_of_.clear();
  for (std::size_t h = 0; h < layer_sizes_.size(); ++h) {
    layer_begin_.push_back(layer_begin_.back() + layer_sizes_[h]);
    for (int i = 0; i < layer_sizes_[h]; ++i) layer_of_.push_back(static_cast<int>(h));
  }
}

void LinearMDP::validate_features() const {
  const double sqrt_d = std::sqrt(static_cast<double>(dim()));
  for (Eigen::Index c = 0; c < features_.cols(); ++c) {
    if (!features_.col(c).allFinite()) throw InvalidInstance("non-finite feature");
    if (features_.col(c).norm() > 1.0 + 1e-12) {
      throw InvalidInstance(describe("feature norm exceeds one", static_cast<int>(c) / num_actions_,
                                     static_cast<int>(c) % num_actions_));
    }
  }
  if (!psi_.allFinite()) throw InvalidInstance("non-finite psi");
  if (psi_.col(0).cwiseAbs().maxCoeff() != 0.0) throw InvalidInstance("psi of the initial state must be zero");
  for (int h = 1; h < horizon(); ++h) {
    Vec abs_sum = psi_.middleCols(layer_begin(h), layer_size(h)).cwiseAbs().rowwise().sum();
    if (abs_sum.norm() > sqrt_d * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "layer " << h << ": ||sum |psi|||_2 = " << abs_sum.norm() << " exceeds sqrt(d)";
      throw InvalidInstance(os.str());
    }
  }
}

void LinearMDP::build_linear_transitions() {
  transitions_.clear();
  for (int h = 0; h + 1 < horizon(); ++h) {
    const int n = layer_size(h);
    const int m = layer_size(h + 1);
    Mat phi = features_.middleCols(static_cast<Eigen::Index>(layer_begin(h)) * num_actions_,
                                   static_cast<Eigen::Index>(n) * num_actions_);
    Mat rows = phi.transpose() * psi_.middleCols(layer_begin(h + 1), m);
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      const int s = layer_begin(h) + static_cast<int>(r) / num_actions_;
      const int a = static_cast<int>(r) % num_actions_;
      bool clamped = false;
      for (Eigen::Index c = 0; c < m; ++c) {
        if (rows(r, c) < 0.0) {
          if (rows(r, c) < -kClampTol) throw InvalidInstance(describe("negative transition probability", s, a));
          rows(r, c) = 0.0;
          clamped = true;
        }
      }
      const double total = rows.row(r).sum();
      if (std::abs(total - 1.0) > kStochasticTol) {
        throw InvalidInstance(describe("transition row does not sum to one", s, a));
      }
      if (clamped) rows.row(r) /= total;
    }
    transitions_.push_back(std::move(rows));
  }
}

double LinearMDP::transition(int s, int a, int next) const {
  const int h = layer_of(s);
  if (h + 1 >= horizon() || layer_of(next) != h + 1) return 0.0;
  return transitions_[static_cast<std::size_t>(h)]((s - layer_begin(h)) * num_actions_ + a,
                                                   next - layer_begin(h + 1));
}

double LinearMDP::linear_transition(int s, int a, int next) const {
  return feature(s, a).dot(psi(next));
}

void LinearMDP::validate_dynamics() const {
  for (int h = 0; h + 1 < horizon(); ++h) {
    const Mat& rows = transitions_[static_cast<std::size_t>(h)];
    if (rows.rows() != static_cast<Eigen::Index>(layer_size(h)) * num_actions_ || rows.cols() != layer_size(h + 1)) {
      throw InvalidInstance("transition table has the wrong shape");
    }
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      const int s = layer_begin(h) + static_cast<int>(r) / num_actions_;
      const int a = static_cast<int>(r) % num_actions_;
      if (rows.row(r).minCoeff() < 0.0) throw InvalidInstance(describe("negative transition probability", s, a));
      if (std::abs(rows.row(r).sum() - 1.0) > kStochasticTol) {
        throw InvalidInstance(describe("transition row does not sum to one", s, a));
      }
      double dev = 0.0;
      for (int c = 0; c < layer_size(h + 1); ++c) {
        dev += std::abs(rows(r, c) - linear_transition(s, a, layer_begin(h + 1) + c));
      }
      if (dev > zeta_ + 1e-12) throw InvalidInstance(describe("transition deviates from the linear model beyond zeta", s, a));
    }
  }
  if (loss_offsets_.rows() != num_states() || loss_offsets_.cols() != num_actions_) {
    throw InvalidInstance("loss offsets must be N x A");
  }
  if (loss_offsets_.size() > 0 && loss_offsets_.cwiseAbs().maxCoeff() > zeta_ + 1e-12) {
    throw InvalidInstance("loss offset exceeds zeta");
  }
}

LinearMDP LinearMDP::with_true_dynamics(std::vector<Mat> transitions, Mat loss_offsets, double zeta) const {
  if (zeta < 0.0) throw InvalidInstance("zeta must be nonnegative");
  LinearMDP copy = *this;
  copy.transitions_ = std::move(transitions);
  copy.loss_offsets_ = std::move(loss_offsets);
  copy.zeta_ = zeta;
  copy.validate_dynamics();
  return copy;
}

// ---------------------------------------------------------------------------
// Oracles

Mat loss_table(const LinearMDP& mdp, const LossVectors& theta) {
  if (theta.rows() != mdp.horizon() || theta.cols() != mdp.dim()) {
    throw std::invalid_argument("loss vectors must be H x d");
  }
  const int A = mdp.num_actions();
  Mat out(mdp.num_states(), A);
  for (int s = 0; s < mdp.num_states(); ++s) {
    const int h = mdp.layer_of(s);
    for (int a = 0; a < A; ++a) {
      double l = mdp.feature(s, a).dot(theta.row(h).transpose());
      if (!mdp.exact()) l = std::clamp(l + mdp.loss_offsets()(s, a), 0.0, 1.0);
      out(s, a) = l;
    }
  }
  return out;
}

Vec occupancy(const LinearMDP& mdp, const Policy& policy) {
  validate_policy(mdp, policy);
  const int A = mdp.num_actions();
  Vec mu = Vec::Zero(mdp.num_states());
  mu(mdp.initial_state()) = 1.0;
  for (int h = 0; h + 1 < mdp.horizon(); ++h) {
    const Mat& P = mdp.transitions(h);
    const int base = mdp.layer_begin(h);
    const int next_base = mdp.layer_begin(h + 1);
    for (int i = 0; i < mdp.layer_size(h); ++i) {
      const double m = mu(base + i);
      if (m == 0.0) continue;
      for (int a = 0; a < A; ++a) {
        const double w = m * policy.prob(base + i, a);
        if (w == 0.0) continue;
        mu.segment(next_base, mdp.layer_size(h + 1)) += w * P.row(i * A + a).transpose();
      }
    }
  }
  return mu;
}

ValueTables value_and_q_table(const LinearMDP& mdp, const Policy& policy, const Mat& losses) {
  validate_policy(mdp, policy);
  const int A = mdp.num_actions();
  ValueTables out{Vec::Zero(mdp.num_states()), Mat::Zero(mdp.num_states(), A)};
  for (int h = mdp.horizon() - 1; h >= 0; --h) {
    for (int s = mdp.layer_begin(h); s < mdp.layer_end(h); ++s) {
      for (int a = 0; a < A; ++a) {
        double q = losses(s, a);
        if (h + 1 < mdp.horizon()) {
          const auto row = mdp.transitions(h).row((s - mdp.layer_begin(h)) * A + a);
          q += row.dot(out.value.segment(mdp.layer_begin(h + 1), mdp.layer_size(h + 1)));
        }
        out.q(s, a) = q;
      }
      out.value(s) = policy.row(s).dot(out.q.row(s));
    }
  }
  return out;
}

ValueTables value_and_q(const LinearMDP& mdp, const Policy& policy, const LossVectors& theta) {
  return value_and_q_table(mdp, policy, loss_table(mdp, theta));
}

double expected_loss(const LinearMDP& mdp, const Vec& mu, const Policy& policy, const Mat& losses) {
  double total = 0.0;
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mu(s) == 0.0) continue;
    total += mu(s) * policy.row(s).dot(losses.row(s));
  }
  return total;
}

Mat feature_expectations(const LinearMDP& mdp, const Policy& policy, const Vec& mu) {
  Mat out = Mat::Zero(mdp.dim(), mdp.horizon());
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mu(s) == 0.0) continue;
    const int h = mdp.layer_of(s);
    for (int a = 0; a < mdp.num_actions(); ++a) {
      const double w = mu(s) * policy.prob(s, a);
      if (w != 0.0) out.col(h) += w * mdp.feature(s, a);
    }
  }
  return out;
}

double value_from_features(const Mat& feature_expectation, const LossVectors& theta, double offset_value) {
  double v = offset_value;
  for (Eigen::Index h = 0; h < theta.rows(); ++h) v += feature_expectation.col(h).dot(theta.row(h).transpose());
  return v;
}

QVectorResult q_vector(const LinearMDP& mdp, const Policy& policy, const LossVectors& theta, double tolerance) {
  const ValueTables vt = value_and_q(mdp, policy, theta);
  QVectorResult out;
  out.q.resize(static_cast<std::size_t>(mdp.horizon()));
  for (int h = 0; h < mdp.horizon(); ++h) {
    Vec q = theta.row(h).transpose();
    if (h + 1 < mdp.horizon()) {
      for (int s = mdp.layer_begin(h + 1); s < mdp.layer_end(h + 1); ++s) q += mdp.psi(s) * vt.value(s);
    }
    for (int s = mdp.layer_begin(h); s < mdp.layer_end(h); ++s) {
      for (int a = 0; a < mdp.num_actions(); ++a) {
        out.max_residual = std::max(out.max_residual, std::abs(vt.q(s, a) - mdp.feature(s, a).dot(q)));
      }
    }
    out.max_norm = std::max(out.max_norm, q.norm());
    out.q[static_cast<std::size_t>(h)] = std::move(q);
  }
  out.flagged = out.max_residual > tolerance;
  return out;
}

double Trajectory::total_loss() const {
  double t = 0.0;
  for (const auto& st : steps) t += st.loss;
  return t;
}

Trajectory sample_episode_table(const LinearMDP& mdp, const Policy& policy, const Mat& losses, Rng& rng,
                                long episode) {
  const int A = mdp.num_actions();
  Trajectory traj;
  traj.episode = episode;
  traj.steps.reserve(static_cast<std::size_t>(mdp.horizon()));
  int s = mdp.initial_state();
  for (int h = 0; h < mdp.horizon(); ++h) {
    const int a = sample_index(rng, policy.row(s));
    traj.steps.push_back({s, a, losses(s, a)});
    if (h + 1 < mdp.horizon()) {
      const Eigen::Index r = static_cast<Eigen::Index>(s - mdp.layer_begin(h)) * A + a;
      s = mdp.layer_begin(h + 1) + sample_index(rng, mdp.transitions(h).row(r));
    }
  }
  return traj;
}

Trajectory sample_episode(const LinearMDP& mdp, const Policy& policy, const LossVectors& theta, Rng& rng,
                          long episode) {
  validate_policy(mdp, policy);
  return sample_episode_table(mdp, policy, loss_table(mdp, theta), rng, episode);
}

BestResponse best_response(const LinearMDP& mdp, const Mat& losses) {
  const int A = mdp.num_actions();
  Vec value = Vec::Zero(mdp.num_states());
  std::vector<int> choice(static_cast<std::size_t>(mdp.num_states()), 0);
  for (int h = mdp.horizon() - 1; h >= 0; --h) {
    for (int s = mdp.layer_begin(h); s < mdp.layer_end(h); ++s) {
      double best = std::numeric_limits<double>::infinity();
      for (int a = 0; a < A; ++a) {
        double q = losses(s, a);
        if (h + 1 < mdp.horizon()) {
          q += mdp.transitions(h).row((s - mdp.layer_begin(h)) * A + a).dot(
              value.segment(mdp.layer_begin(h + 1), mdp.layer_size(h + 1)));
        }
        if (q < best) {
          best = q;
          choice[static_cast<std::size_t>(s)] = a;
        }
      }
      value(s) = best;
    }
  }
  return {Policy::deterministic(choice, A), value(mdp.initial_state())};
}

}  // namespace linmdp
