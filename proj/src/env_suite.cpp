#include "linmdp/env_suite.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace linmdp {

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kConstant: return "constant";
    case ScheduleKind::kIid: return "iid";
    case ScheduleKind::kDrift: return "drift";
    case ScheduleKind::kSwitching: return "switching";
  }
  return "unknown";
}

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "constant") return ScheduleKind::kConstant;
  if (name == "iid") return ScheduleKind::kIid;
  if (name == "drift") return ScheduleKind::kDrift;
  if (name == "switching") return ScheduleKind::kSwitching;
  throw std::invalid_argument("unknown loss schedule kind: " + name);
}

void EnvSpec::validate() const {
  if (d <= 0 || horizon <= 0 || num_actions <= 0) throw std::invalid_argument("env spec: sizes must be positive");
  if (static_cast<int>(layer_sizes.size()) != horizon) throw std::invalid_argument("env spec: need one size per layer");
  for (int n : layer_sizes) {
    if (n <= 0) throw std::invalid_argument("env spec: layer sizes must be positive");
  }
  if (anchors <= 0 || anchors > d) throw std::invalid_argument("env spec: need 1 <= anchors <= d");
  if (zeta < 0.0) throw std::invalid_argument("env spec: zeta must be nonnegative");
  if (feature_concentration <= 0.0) throw std::invalid_argument("env spec: concentration must be positive");
}

EnvSpec desk_spec(std::uint64_t seed) {
  EnvSpec spec;
  spec.seed = seed;
  return spec;
}

void validate_schedule(const LinearMDP& mdp, const LossSchedule& schedule) {
  const double sqrt_d = std::sqrt(static_cast<double>(mdp.dim()));
  if (static_cast<long>(schedule.theta.size()) != schedule.num_episodes) {
    throw InvalidInstance("schedule length does not match its episode count");
  }
  for (long k = 0; k < schedule.num_episodes; ++k) {
    const LossVectors& th = schedule.at(k);
    if (th.rows() != mdp.horizon() || th.cols() != mdp.dim()) throw InvalidInstance("loss vectors must be H x d");
    for (int h = 0; h < mdp.horizon(); ++h) {
      if (th.row(h).norm() > sqrt_d * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "episode " << k << ", layer " << h << ": ||theta|| exceeds sqrt(d)";
        throw InvalidInstance(os.str());
      }
      for (int s = mdp.layer_begin(h); s < mdp.layer_end(h); ++s) {
        for (int a = 0; a < mdp.num_actions(); ++a) {
          const double l = mdp.feature(s, a).dot(th.row(h).transpose());
          if (l < -1e-12 || l > 1.0 + 1e-12) {
            std::ostringstream os;
            os << "episode " << k << ": loss " << l << " outside [0,1] at state " << s << ", action " << a;
            throw InvalidInstance(os.str());
          }
        }
      }
    }
  }
}

LinearMDP build_anchor_mdp(const std::vector<int>& layer_sizes, int num_actions, int d,
                           const std::vector<Mat>& anchors, const Mat& weights, bool rescale) {
  const int H = static_cast<int>(layer_sizes.size());
  int N = 0;
  for (int n : layer_sizes) N += n;
  const Eigen::Index m = weights.rows();
  if (m > d) throw InvalidInstance("more anchors than dimensions");
  if (weights.cols() != static_cast<Eigen::Index>(N) * num_actions) throw InvalidInstance("weights must be m x (N*A)");
  if (static_cast<int>(anchors.size()) != H - 1) throw InvalidInstance("need one anchor matrix per transition layer");

  Mat features = Mat::Zero(d, static_cast<Eigen::Index>(N) * num_actions);
  features.topRows(m) = weights;
  Mat psi = Mat::Zero(d, N);
  int begin = 0;
  std::vector<int> starts;
  for (int n : layer_sizes) {
    starts.push_back(begin);
    begin += n;
  }
  for (int h = 0; h + 1 < H; ++h) {
    const Mat& nu = anchors[static_cast<std::size_t>(h)];
    if (nu.rows() != m || nu.cols() != layer_sizes[static_cast<std::size_t>(h) + 1]) {
      throw InvalidInstance("anchor matrix has the wrong shape");
    }
    psi.block(0, starts[static_cast<std::size_t>(h) + 1], m, nu.cols()) = nu;
  }
  if (rescale) {
    for (int h = 0; h < H; ++h) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(starts[static_cast<std::size_t>(h)]) * num_actions;
      const Eigen::Index nc = static_cast<Eigen::Index>(layer_sizes[static_cast<std::size_t>(h)]) * num_actions;
      const double max_norm = features.middleCols(c0, nc).colwise().norm().maxCoeff();
      if (max_norm <= 0.0) continue;
      const double scale = 1.0 / max_norm;
      features.middleCols(c0, nc) *= scale;
      if (h + 1 < H) {
        psi.middleCols(starts[static_cast<std::size_t>(h) + 1], layer_sizes[static_cast<std::size_t>(h) + 1]) /= scale;
      }
    }
  }
  return LinearMDP(layer_sizes, num_actions, std::move(features), std::move(psi));
}

LinearMDP gen_linear_mdp(const EnvSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<int> sizes = spec.layer_sizes;
  sizes.front() = 1;
  const int H = spec.horizon;
  const int m = spec.anchors;
  int N = 0;
  for (int n : sizes) N += n;

  std::vector<Mat> anchors;
  for (int h = 0; h + 1 < H; ++h) {
    const int next = sizes[static_cast<std::size_t>(h) + 1];
    Mat nu(m, next);
    for (int i = 0; i < m; ++i) {
      const auto p = rng.dirichlet(next, 1.0);
      for (int j = 0; j < next; ++j) nu(i, j) = p[static_cast<std::size_t>(j)];
    }
    anchors.push_back(std::move(nu));
  }
  Mat weights(m, static_cast<Eigen::Index>(N) * spec.num_actions);
  for (Eigen::Index c = 0; c < weights.cols(); ++c) {
    const auto w = rng.dirichlet(m, spec.feature_concentration);
    for (int i = 0; i < m; ++i) weights(i, c) = w[static_cast<std::size_t>(i)];
  }
  LinearMDP mdp = build_anchor_mdp(sizes, spec.num_actions, spec.d, anchors, weights, true);
  if (spec.zeta > 0.0) return misspecify(mdp, spec.zeta, rng);
  return mdp;
}

bool constant_loss_direction(const LinearMDP& mdp, int h, Vec& out) {
  const int A = mdp.num_actions();
  const Eigen::Index n = static_cast<Eigen::Index>(mdp.layer_size(h)) * A;
  Mat phi_t = mdp.features().middleCols(static_cast<Eigen::Index>(mdp.layer_begin(h)) * A, n).transpose();
  Vec ones = Vec::Ones(n);
  out = phi_t.completeOrthogonalDecomposition().solve(ones);
  return (phi_t * out - ones).cwiseAbs().maxCoeff() < 1e-9;
}

namespace {

// Largest lambda in [0, 1] with ||center + lambda * (theta - center)|| <= radius.
Vec shrink_to_ball(const Vec& theta, const Vec& center, double radius) {
  if (theta.norm() <= radius) return theta;
  const Vec dir = theta - center;
  const double a = dir.squaredNorm();
  const double b = 2.0 * center.dot(dir);
  const double c = center.squaredNorm() - radius * radius;
  if (c > 0.0 || a == 0.0) return center;
  const double lambda = std::clamp((-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a), 0.0, 1.0);
  return center + lambda * dir;
}

Mat layer_features(const LinearMDP& mdp, int h) {
  const int A = mdp.num_actions();
  return mdp.features().middleCols(static_cast<Eigen::Index>(mdp.layer_begin(h)) * A,
                                   static_cast<Eigen::Index>(mdp.layer_size(h)) * A);
}

Vec random_direction(Rng& rng, int d) {
  Vec g(d);
  for (int i = 0; i < d; ++i) g(i) = rng.normal();
  return g;
}

}  // namespace

Vec rescale_loss_vector(const LinearMDP& mdp, int h, const Vec& raw, double lo, double hi) {
  Vec u;
  if (!constant_loss_direction(mdp, h, u)) {
    throw InvalidInstance("layer " + std::to_string(h) + " has no constant-loss direction; cannot rescale losses");
  }
  const Vec r = layer_features(mdp, h).transpose() * raw;
  const double rmin = r.minCoeff();
  const double rmax = r.maxCoeff();
  const double mid = 0.5 * (lo + hi);
  const double sqrt_d = std::sqrt(static_cast<double>(mdp.dim()));
  if (rmax - rmin < 1e-12) return shrink_to_ball(mid * u, Vec::Zero(mdp.dim()), sqrt_d);
  const double scale = (hi - lo) / (rmax - rmin);
  const Vec theta = scale * raw + (lo - scale * rmin) * u;
  return shrink_to_ball(theta, mid * u, sqrt_d);
}

LossSchedule gen_loss_schedule(const EnvSpec& spec, const LinearMDP& mdp, long num_episodes, Rng& rng) {
  if (num_episodes <= 0) throw std::invalid_argument("loss schedule needs at least one episode");
  const int H = mdp.horizon();
  const int d = mdp.dim();
  LossSchedule out;
  out.num_episodes = num_episodes;
  out.kind = spec.kind;
  out.theta.reserve(static_cast<std::size_t>(num_episodes));

  auto draw_profile = [&]() {
    LossVectors th(H, d);
    for (int h = 0; h < H; ++h) th.row(h) = rescale_loss_vector(mdp, h, random_direction(rng, d)).transpose();
    return th;
  };

  switch (spec.kind) {
    case ScheduleKind::kConstant: {
      const LossVectors th = draw_profile();
      out.theta.assign(static_cast<std::size_t>(num_episodes), th);
      break;
    }
    case ScheduleKind::kIid: {
      for (long k = 0; k < num_episodes; ++k) out.theta.push_back(draw_profile());
      break;
    }
    case ScheduleKind::kDrift: {
      std::vector<Vec> g1, g2, u;
      std::vector<double> gain;
      for (int h = 0; h < H; ++h) {
        g1.push_back(random_direction(rng, d));
        g2.push_back(random_direction(rng, d));
        Vec uh;
        if (!constant_loss_direction(mdp, h, uh)) throw InvalidInstance("no constant-loss direction for drift schedule");
        u.push_back(uh);
        const Mat phi = layer_features(mdp, h);
        const Vec a = phi.transpose() * g1.back();
        const Vec b = phi.transpose() * g2.back();
        const double amp = (a.array().square() + b.array().square()).sqrt().maxCoeff();
        gain.push_back(amp > 0.0 ? 0.45 / amp : 0.0);
      }
      const double sqrt_d = std::sqrt(static_cast<double>(d));
      for (long k = 0; k < num_episodes; ++k) {
        const double angle = std::numbers::pi * static_cast<double>(k) / static_cast<double>(num_episodes);
        LossVectors th(H, d);
        for (int hh = 0; hh < H; ++hh) {
          const auto h = static_cast<std::size_t>(hh);
          const Vec theta = gain[h] * (std::cos(angle) * g1[h] + std::sin(angle) * g2[h]) + 0.5 * u[h];
          th.row(hh) = shrink_to_ball(theta, 0.5 * u[h], sqrt_d).transpose();
        }
        out.theta.push_back(std::move(th));
      }
      break;
    }
    case ScheduleKind::kSwitching: {
      // Profile B reverses the ordering of profile A, blended with an
      // independent direction so that fixed policies do not all tie.
      LossVectors a(H, d), b(H, d);
      for (int h = 0; h < H; ++h) {
        const Vec ga = random_direction(rng, d);
        const Vec gc = random_direction(rng, d);
        a.row(h) = rescale_loss_vector(mdp, h, ga).transpose();
        b.row(h) = rescale_loss_vector(mdp, h, -0.7 * ga / ga.norm() + 0.3 * gc / gc.norm()).transpose();
      }
      const long phase_len = std::max(1L, num_episodes / 4);
      for (long k = 0; k < num_episodes; ++k) out.theta.push_back(((k / phase_len) % 2 == 0) ? a : b);
      break;
    }
  }
  validate_schedule(mdp, out);
  return out;
}

LinearMDP misspecify(const LinearMDP& mdp, double zeta, Rng& rng) {
  if (zeta < 0.0) throw std::invalid_argument("zeta must be nonnegative");
  if (zeta > 0.1) throw std::invalid_argument("zeta above the 0.1 desk-scale cap");
  if (zeta == 0.0) return mdp;
  const int A = mdp.num_actions();
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<Mat> rows;
    for (int h = 0; h + 1 < mdp.horizon(); ++h) {
      Mat P = mdp.transitions(h);
      for (Eigen::Index r = 0; r < P.rows(); ++r) {
        const auto q = rng.dirichlet(static_cast<int>(P.cols()), 1.0);
        const double eps = 0.5 * zeta * rng.uniform(0.5, 1.0);
        for (Eigen::Index c = 0; c < P.cols(); ++c) P(r, c) = (1.0 - eps) * P(r, c) + eps * q[static_cast<std::size_t>(c)];
        P.row(r) /= P.row(r).sum();
      }
      rows.push_back(std::move(P));
    }
    Mat offsets(mdp.num_states(), A);
    for (int s = 0; s < mdp.num_states(); ++s) {
      for (int a = 0; a < A; ++a) offsets(s, a) = zeta * rng.uniform(-1.0, 1.0);
    }
    try {
      return mdp.with_true_dynamics(std::move(rows), std::move(offsets), zeta);
    } catch (const InvalidInstance&) {
      continue;
    }
  }
  throw InvalidInstance("misspecification broke row stochasticity after 100 attempts");
}

double max_transition_deviation(const LinearMDP& mdp) {
  double worst = 0.0;
  const int A = mdp.num_actions();
  for (int h = 0; h + 1 < mdp.horizon(); ++h) {
    for (int s = mdp.layer_begin(h); s < mdp.layer_end(h); ++s) {
      for (int a = 0; a < A; ++a) {
        double dev = 0.0;
        for (int n = mdp.layer_begin(h + 1); n < mdp.layer_end(h + 1); ++n) {
          dev += std::abs(mdp.transition(s, a, n) - mdp.linear_transition(s, a, n));
        }
        worst = std::max(worst, dev);
      }
    }
  }
  return worst;
}

}  // namespace linmdp
