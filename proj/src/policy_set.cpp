#include "linmdp/policy_set.hpp"

#include <set>
#include <stdexcept>

namespace linmdp {

Policy argmin_policy(const LinearMDP& mdp, const Mat& theta) {
  if (theta.rows() != mdp.horizon() || theta.cols() != mdp.dim()) throw std::invalid_argument("theta must be H x d");
  std::vector<int> actions(static_cast<std::size_t>(mdp.num_states()));
  for (int s = 0; s < mdp.num_states(); ++s) {
    const int h = mdp.layer_of(s);
    int best = 0;
    double best_v = mdp.feature(s, 0).dot(theta.row(h).transpose());
    for (int a = 1; a < mdp.num_actions(); ++a) {
      const double v = mdp.feature(s, a).dot(theta.row(h).transpose());
      if (v < best_v) {
        best_v = v;
        best = a;
      }
    }
    actions[static_cast<std::size_t>(s)] = best;
  }
  return Policy::deterministic(actions, mdp.num_actions());
}

PolicySet policies_from_parameters(const LinearMDP& mdp, const std::vector<Mat>& thetas) {
  PolicySet out;
  std::set<std::vector<double>> seen;
  for (const Mat& th : thetas) {
    Policy p = argmin_policy(mdp, th);
    std::vector<double> key(p.table().data(), p.table().data() + p.table().size());
    if (!seen.insert(std::move(key)).second) continue;
    out.policies.push_back(std::move(p));
    out.parameters.push_back(th);
  }
  return out;
}

PolicySet build_policy_set(const LinearMDP& mdp, int grid, Rng& rng, std::size_t max_policies) {
  if (grid < 1) throw std::invalid_argument("grid size must be at least 1");
  const int H = mdp.horizon();
  const int d = mdp.dim();
  std::vector<double> values;
  if (grid == 1) {
    values.push_back(1.0);
  } else {
    for (int i = 0; i < grid; ++i) values.push_back(-1.0 + 2.0 * i / (grid - 1));
  }
  // Orthonormal 2-D basis per layer.
  std::vector<Mat> bases;
  for (int h = 0; h < H; ++h) {
    Mat g(d, 2);
    for (int i = 0; i < d; ++i) {
      g(i, 0) = rng.normal();
      g(i, 1) = rng.normal();
    }
    Eigen::HouseholderQR<Mat> qr(g);
    bases.push_back(qr.householderQ() * Mat::Identity(d, std::min(2, d)));
  }
  const int dims = std::min(2, d);
  std::vector<Vec> layer_points;
  const int per_coord = static_cast<int>(values.size());
  const int points = dims == 2 ? per_coord * per_coord : per_coord;
  for (int i = 0; i < points; ++i) {
    Vec c(dims);
    c(0) = values[static_cast<std::size_t>(i % per_coord)];
    if (dims == 2) c(1) = values[static_cast<std::size_t>(i / per_coord)];
    layer_points.push_back(c);
  }
  long total = 1;
  for (int h = 0; h < H; ++h) total *= points;
  if (total > 1000000) throw std::invalid_argument("policy grid too large");
  std::vector<long> order(static_cast<std::size_t>(total));
  for (long i = 0; i < total; ++i) order[static_cast<std::size_t>(i)] = i;
  for (long i = total - 1; i > 0; --i) std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i + 1)))]);

  std::vector<Mat> thetas;
  for (long idx : order) {
    Mat th(H, d);
    long rem = idx;
    for (int h = 0; h < H; ++h) {
      th.row(h) = (bases[static_cast<std::size_t>(h)] * layer_points[static_cast<std::size_t>(rem % points)]).transpose();
      rem /= points;
    }
    thetas.push_back(std::move(th));
  }
  PolicySet all = policies_from_parameters(mdp, thetas);
  if (max_policies > 0 && all.size() > max_policies) {
    all.policies.resize(max_policies);
    all.parameters.resize(max_policies);
  }
  return all;
}

}  // namespace linmdp
