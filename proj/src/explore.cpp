#include "linmdp/explore.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace linmdp {

Vec unknown_mass(const LinearMDP& mdp, const Policy& policy, const std::vector<char>& is_known) {
  const Vec mu = occupancy(mdp, policy);
  Vec out = Vec::Zero(mdp.horizon());
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (!is_known[static_cast<std::size_t>(s)]) out(mdp.layer_of(s)) += mu(s);
  }
  return out;
}

BestResponse worst_unknown_policy(const LinearMDP& mdp, const std::vector<char>& is_known, int h) {
  Mat losses = Mat::Zero(mdp.num_states(), mdp.num_actions());
  for (int s = mdp.layer_begin(h); s < mdp.layer_end(h); ++s) {
    if (!is_known[static_cast<std::size_t>(s)]) losses.row(s).setConstant(-1.0);
  }
  BestResponse br = best_response(mdp, losses);
  br.value = -br.value;
  return br;
}

std::vector<char> known_states(const LinearMDP& mdp, const std::vector<Mat>& gram_inverse, double rho) {
  std::vector<char> known(static_cast<std::size_t>(mdp.num_states()), 1);
  const double rho_sq = rho * rho;
  for (int s = 0; s < mdp.num_states(); ++s) {
    const Mat& inv = gram_inverse[static_cast<std::size_t>(mdp.layer_of(s))];
    for (int a = 0; a < mdp.num_actions(); ++a) {
      const auto phi = mdp.feature(s, a);
      if (phi.dot(inv * phi) > rho_sq) {
        known[static_cast<std::size_t>(s)] = 0;
        break;
      }
    }
  }
  return known;
}

namespace {

std::vector<int> actions_of(const Policy& p) {
  std::vector<int> out(static_cast<std::size_t>(p.num_states()));
  for (int s = 0; s < p.num_states(); ++s) {
    Eigen::Index a;
    p.row(s).maxCoeff(&a);
    out[static_cast<std::size_t>(s)] = static_cast<int>(a);
  }
  return out;
}

// Deterministic policy steering towards the layer with the largest reachable
// one-step uncertainty, then taking the most uncertain action from there on.
Policy greedy_policy(const LinearMDP& mdp, const std::vector<GramInverse>& grams) {
  const int A = mdp.num_actions();
  Mat unc(mdp.num_states(), A);
  std::vector<int> argmax_action(static_cast<std::size_t>(mdp.num_states()));
  for (int s = 0; s < mdp.num_states(); ++s) {
    const GramInverse& g = grams[static_cast<std::size_t>(mdp.layer_of(s))];
    for (int a = 0; a < A; ++a) unc(s, a) = g.norm_sq(mdp.feature(s, a));
    Eigen::Index best;
    unc.row(s).maxCoeff(&best);
    argmax_action[static_cast<std::size_t>(s)] = static_cast<int>(best);
  }
  BestResponse chosen;
  double best_value = -1.0;
  int target = 0;
  for (int h = 0; h < mdp.horizon(); ++h) {
    Mat losses = Mat::Zero(mdp.num_states(), A);
    for (int s = mdp.layer_begin(h); s < mdp.layer_end(h); ++s) losses.row(s) = -unc.row(s);
    BestResponse br = best_response(mdp, losses);
    if (-br.value > best_value + 1e-15) {
      best_value = -br.value;
      chosen = std::move(br);
      target = h;
    }
  }
  std::vector<int> actions = actions_of(chosen.policy);
  for (int s = mdp.layer_begin(target); s < mdp.num_states(); ++s) {
    actions[static_cast<std::size_t>(s)] = argmax_action[static_cast<std::size_t>(s)];
  }
  return Policy::deterministic(actions, A);
}

std::vector<Policy> base_certificate_set(const LinearMDP& mdp, const ExploreParams& params, Rng& rng,
                                         std::string& kind) {
  const int N = mdp.num_states();
  const int A = mdp.num_actions();
  double count = 1.0;
  for (int s = 0; s < N; ++s) count *= A;
  std::vector<Policy> out;
  if (count <= static_cast<double>(params.enumerate_limit)) {
    kind = "enumerated";
    std::vector<int> actions(static_cast<std::size_t>(N), 0);
    for (long idx = 0; idx < static_cast<long>(count); ++idx) {
      long rem = idx;
      for (int s = 0; s < N; ++s) {
        actions[static_cast<std::size_t>(s)] = static_cast<int>(rem % A);
        rem /= A;
      }
      out.push_back(Policy::deterministic(actions, A));
    }
  } else {
    kind = "sampled+exact-dp";
    std::vector<int> actions(static_cast<std::size_t>(N));
    for (int i = 0; i < params.sampled_policies; ++i) {
      for (int s = 0; s < N; ++s) actions[static_cast<std::size_t>(s)] = rng.uniform_int(A);
      out.push_back(Policy::deterministic(actions, A));
    }
  }
  return out;
}

}  // namespace

KnownStateReport pure_explore(const LinearMDP& mdp, const ExploreParams& params, Rng& rng,
                              const LossSchedule* schedule) {
  if (params.budget < 0) throw std::invalid_argument("exploration budget must be nonnegative");
  if (params.rho <= 0.0 || params.eps_cov < 0.0) throw std::invalid_argument("rho must be positive, eps_cov nonnegative");
  const int H = mdp.horizon();
  const int d = mdp.dim();

  KnownStateReport rep;
  rep.params = params;
  rep.datasets.resize(static_cast<std::size_t>(H));
  std::vector<GramInverse> grams(static_cast<std::size_t>(H), GramInverse(d));
  std::vector<Policy> base = base_certificate_set(mdp, params, rng, rep.certificate_kind);
  std::map<std::vector<int>, int> policy_index;

  auto current_inverses = [&]() {
    std::vector<Mat> inv;
    for (const auto& g : grams) inv.push_back(g.inverse());
    return inv;
  };

  // Exact over every policy: the layerwise worst-case policies attain the
  // supremum, so adding them to the set makes the check exhaustive.
  auto certify = [&](const std::vector<char>& known) {
    std::vector<Policy> set = base;
    for (const Policy& p : rep.policies) set.push_back(p);
    for (int h = 0; h < H; ++h) set.push_back(worst_unknown_policy(mdp, known, h).policy);
    Vec worst = Vec::Zero(H);
    std::vector<Vec> masses;
    masses.reserve(set.size());
    for (const Policy& p : set) {
      masses.push_back(unknown_mass(mdp, p, known));
      worst = worst.cwiseMax(masses.back());
    }
    rep.worst_unknown_mass = worst;
    rep.certificate_policies = std::move(set);
    rep.certificate_masses = std::move(masses);
    return worst.maxCoeff() <= params.eps_cov;
  };

  std::vector<char> known = known_states(mdp, current_inverses(), params.rho);
  bool passed = certify(known);
  long k = 0;
  while (!passed && k < params.budget) {
    Policy pol = greedy_policy(mdp, grams);
    const std::vector<int> key = actions_of(pol);
    auto [it, inserted] = policy_index.try_emplace(key, static_cast<int>(rep.policies.size()));
    if (inserted) rep.policies.push_back(pol);
    rep.episode_policy.push_back(it->second);

    Trajectory traj = schedule != nullptr ? sample_episode(mdp, pol, schedule->at(k), rng, k)
                                          : sample_episode_table(mdp, pol, Mat::Zero(mdp.num_states(), mdp.num_actions()), rng, k);
    for (int h = 0; h < H; ++h) {
      const Step& st = traj.steps[static_cast<std::size_t>(h)];
      const int next = h + 1 < H ? traj.steps[static_cast<std::size_t>(h) + 1].state : -1;
      rep.datasets[static_cast<std::size_t>(h)].push_back({st.state, st.action, next});
      grams[static_cast<std::size_t>(h)].add(mdp.feature(st.state, st.action));
    }
    rep.trajectories.push_back(std::move(traj));
    ++k;

    std::vector<char> now = known_states(mdp, current_inverses(), params.rho);
    if (now != known) {
      known = std::move(now);
      passed = certify(known);
    }
  }
  if (!passed) certify(known);

  rep.episodes_used = k;
  rep.certificate_passed = passed;
  rep.is_known = known;
  rep.known.resize(static_cast<std::size_t>(H));
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (known[static_cast<std::size_t>(s)]) rep.known[static_cast<std::size_t>(mdp.layer_of(s))].push_back(s);
  }
  for (const auto& g : grams) rep.gram.push_back(g.gram());
  return rep;
}

nlohmann::json report_to_json(const KnownStateReport& report) {
  nlohmann::json j;
  j["K0"] = report.episodes_used;
  j["rho"] = report.params.rho;
  j["eps_cov"] = report.params.eps_cov;
  j["delta"] = report.params.delta;
  nlohmann::json lambda = nlohmann::json::array();
  for (const Mat& g : report.gram) {
    nlohmann::json flat = nlohmann::json::array();
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      for (Eigen::Index c = 0; c < g.cols(); ++c) flat.push_back(g(r, c));
    }
    lambda.push_back(std::move(flat));
  }
  j["Lambda"] = std::move(lambda);
  j["Z"] = report.known;
  j["certificate"] = report.certificate_passed ? "passed" : "failed";
  j["certificate_kind"] = report.certificate_kind;
  std::vector<double> worst(report.worst_unknown_mass.data(),
                            report.worst_unknown_mass.data() + report.worst_unknown_mass.size());
  j["worst_unknown_mass"] = worst;
  return j;
}

}  // namespace linmdp
