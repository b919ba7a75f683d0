#include "linmdp/exp_weights.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "linmdp/gram.hpp"
#include "linmdp/parallel.hpp"

namespace linmdp {

double bonus_constant(int d, int H, double K, double delta) {
  return 10.0 * std::pow(d, 1.25) * H * std::sqrt(std::log(18.0 * std::pow(d, 1.5) * K / delta));
}

ExpwParams expw_params(int d, int H, long K, bool oracle_features, double delta) {
  ExpwParams p;
  const double k = static_cast<double>(K);
  p.gamma = std::min(static_cast<double>(d) * d * std::sqrt(static_cast<double>(H) / k), 0.5);
  p.eta = p.gamma / (2.0 * d * H);
  p.delta = delta;
  p.c_bonus = bonus_constant(d, H, k, delta);
  p.zeta = static_cast<double>(d) / k;
  p.oracle_features = oracle_features;
  p.estimation_bonus = !oracle_features;
  return p;
}

ExpWeightsStep exp_weights_step(const Vec& scores, double eta, double gamma, const Vec& design) {
  ExpWeightsStep out;
  const Eigen::Index n = scores.size();
  if (n == 0) throw std::invalid_argument("exp_weights_step: empty policy set");
  const double lo = scores.minCoeff();
  out.q = (-eta * (scores.array() - lo)).exp().matrix();
  out.q /= out.q.sum();
  out.mixed = (1.0 - gamma) * out.q + gamma * design;
  out.mixed = out.mixed.cwiseMax(0.0);
  out.mixed /= out.mixed.sum();
  return out;
}

EstimateAndBonus estimate_and_bonus(const Vec& mixed, const Mat& phis, int chosen, double total_loss,
                                    const Vec& uncertainty, double c_bonus, double eta) {
  const Eigen::Index dim = phis.rows();
  const Eigen::Index n = phis.cols();
  const Mat m = phis * mixed.asDiagonal() * phis.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
  const Vec& ev = es.eigenvalues();
  const double top = ev.size() > 0 ? std::max(ev.maxCoeff(), 0.0) : 0.0;
  Vec inv_ev = Vec::Zero(dim);
  int rank = 0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (top > 0.0 && ev(i) > 1e-10 * top) {
      inv_ev(i) = 1.0 / ev(i);
      ++rank;
    }
  }
  const Mat pinv = es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose();
  EstimateAndBonus out;
  out.rank = rank;
  out.rank_deficient = rank < dim;
  out.theta = pinv * phis.col(chosen) * total_loss;
  out.bonus.resize(n);
  for (Eigen::Index p = 0; p < n; ++p) {
    out.bonus(p) = c_bonus * uncertainty(p) + eta * phis.col(p).dot(pinv * phis.col(p));
  }
  return out;
}

ExpwRun run_exp_weights(const LinearMDP& mdp, const LossSchedule& schedule, const PolicySet& policies,
                        const ExpwParams& params, Rng& rng) {
  const long K = schedule.num_episodes;
  const int H = mdp.horizon();
  const int d = mdp.dim();
  const int A = mdp.num_actions();
  const int N = mdp.num_states();
  const auto P = static_cast<Eigen::Index>(policies.size());
  if (P == 0) throw std::invalid_argument("run_exp_weights: empty policy set");
  if (K <= 0) throw std::invalid_argument("run_exp_weights: K must be positive");

  ExpwRun run;
  RegretLedger& ledger = run.ledger;
  ledger.algorithm = params.oracle_features ? "exp-weights-oracle" : "exp-weights";
  for (const char* c : {"estom_feasible_frac", "design_certificate", "max_bonus", "sampled_value"}) ledger.add_column(c);

  // Exact per-policy quantities, for values and the oracle mode.
  std::vector<Vec> true_mu;
  std::vector<Mat> true_feat;
  Mat true_phis(static_cast<Eigen::Index>(d) * H, P);
  for (Eigen::Index p = 0; p < P; ++p) {
    const Policy& pol = policies.policies[static_cast<std::size_t>(p)];
    true_mu.push_back(occupancy(mdp, pol));
    true_feat.push_back(feature_expectations(mdp, pol, true_mu.back()));
    true_phis.col(p) = feature_estimate(mdp, pol, true_mu.back());
  }

  std::vector<SampledFunctions> funcs;
  if (!params.oracle_features) {
    Rng frng = Rng::derive(rng.next_u64(), 17);
    for (Eigen::Index p = 0; p < P; ++p) {
      funcs.push_back(sample_functions(mdp, policies.policies[static_cast<std::size_t>(p)], params.functions_f1, params.functions_f2, frng));
    }
  }

  RegressionData data = regression_data(mdp, std::vector<std::vector<Triple>>(static_cast<std::size_t>(H)));
  std::vector<GramInverse> grams(static_cast<std::size_t>(H), GramInverse(d));
  Vec scores = Vec::Zero(P);
  Mat phis = true_phis;
  std::vector<Vec> mu_hat = true_mu;
  DesignResult design;
  if (params.oracle_features) design = g_optimal_design(phis, params.design_tol);
  const long stride = params.diagnostic_stride > 0 ? params.diagnostic_stride : std::max(1L, K / 64);
  long design_failures = 0;
  long rank_deficient = 0;
  double bonus_max_all = 0.0;

  for (long k = 0; k < K; ++k) {
    double feasible_frac = 1.0;
    if (!params.oracle_features) {
      const std::vector<LayerSolver> solvers = layer_solvers(mdp, data);
      std::vector<EstomSolution> sols(static_cast<std::size_t>(P));
      EstomOptions eo{params.zeta, params.fallback};
      parallel_for(
          P,
          [&](std::ptrdiff_t p) {
            sols[static_cast<std::size_t>(p)] =
                estom(mdp, policies.policies[static_cast<std::size_t>(p)], solvers, data, funcs[static_cast<std::size_t>(p)], eo);
          },
          params.serial);
      long feas = 0;
      for (Eigen::Index p = 0; p < P; ++p) {
        const EstomSolution& s = sols[static_cast<std::size_t>(p)];
        ++run.estom_calls;
        if (s.feasible) ++feas;
        if (s.lp_failed) ++run.lp_failures;
        mu_hat[static_cast<std::size_t>(p)] = s.mu;
        phis.col(p) = feature_estimate(mdp, policies.policies[static_cast<std::size_t>(p)], s.mu);
      }
      run.estom_feasible += feas;
      feasible_frac = static_cast<double>(feas) / static_cast<double>(P);
      design = g_optimal_design(phis, params.design_tol);
    }
    if (!design.converged) ++design_failures;

    // ||phi(s,a)||_{Lambda_h^{-1}} with data before episode k.
    Mat widths(N, A);
    for (int s = 0; s < N; ++s) {
      for (int a = 0; a < A; ++a) widths(s, a) = std::sqrt(grams[static_cast<std::size_t>(mdp.layer_of(s))].norm_sq(mdp.feature(s, a)));
    }
    Vec uncertainty = Vec::Zero(P);
    if (params.estimation_bonus) {
      for (Eigen::Index p = 0; p < P; ++p) {
        const Policy& pol = policies.policies[static_cast<std::size_t>(p)];
        const Vec& mu = mu_hat[static_cast<std::size_t>(p)];
        for (int s = 0; s < N; ++s) uncertainty(p) += mu(s) * pol.row(s).dot(widths.row(s));
      }
    }

    if (!params.oracle_features && k % stride == 0) {
      // Accuracy of mu_hat on the sampled functions against the exact occupancy.
      for (Eigen::Index p = 0; p < P; ++p) {
        const Policy& pol = policies.policies[static_cast<std::size_t>(p)];
        const Vec& mh = mu_hat[static_cast<std::size_t>(p)];
        const Vec diff = mh - true_mu[static_cast<std::size_t>(p)];
        Vec layer_width = Vec::Zero(H);
        for (int s = 0; s < N; ++s) layer_width(mdp.layer_of(s)) += mh(s) * pol.row(s).dot(widths.row(s));
        const SampledFunctions& fs = funcs[static_cast<std::size_t>(p)];
        for (int h = 1; h < H; ++h) {
          const double bound = params.c_bonus / H * layer_width.head(h).sum() + 2.0 * params.zeta * H;
          for (Eigen::Index f = 0; f < fs.values.cols(); ++f) {
            const double err = std::abs(diff.segment(mdp.layer_begin(h), mdp.layer_size(h))
                                            .dot(fs.values.col(f).segment(mdp.layer_begin(h), mdp.layer_size(h))));
            ++run.accuracy_checks;
            if (err > bound) ++run.accuracy_violations;
          }
        }
      }
    }

    const ExpWeightsStep step = exp_weights_step(scores, params.eta, params.gamma, design.weights);
    if (params.record_weights) run.weights.push_back(step.q);
    const int chosen = rng.categorical(std::span<const double>(step.mixed.data(), static_cast<std::size_t>(P)));
    const Policy& pol = policies.policies[static_cast<std::size_t>(chosen)];
    const Trajectory traj = sample_episode(mdp, pol, schedule.at(k), rng, k);
    const double L = traj.total_loss();

    const EstimateAndBonus eb = estimate_and_bonus(step.mixed, phis, chosen, L, uncertainty, params.c_bonus, params.eta);
    if (eb.rank_deficient) ++rank_deficient;
    for (Eigen::Index p = 0; p < P; ++p) scores(p) += phis.col(p).dot(eb.theta) - eb.bonus(p);

    for (int h = 0; h < H; ++h) {
      const Step& st = traj.steps[static_cast<std::size_t>(h)];
      const int next = h + 1 < H ? traj.steps[static_cast<std::size_t>(h) + 1].state : -1;
      add_triple(data, mdp, h, {st.state, st.action, next});
      grams[static_cast<std::size_t>(h)].add(mdp.feature(st.state, st.action));
    }

    double expected = 0.0;
    for (Eigen::Index p = 0; p < P; ++p) {
      expected += step.mixed(p) * value_from_features(true_feat[static_cast<std::size_t>(p)], schedule.at(k));
    }
    const double max_bonus = eb.bonus.maxCoeff();
    bonus_max_all = std::max(bonus_max_all, max_bonus);
    ledger.realized_loss.push_back(L);
    ledger.expected_value.push_back(expected);
    ledger.push("estom_feasible_frac", feasible_frac);
    ledger.push("design_certificate", design.certificate);
    ledger.push("max_bonus", max_bonus);
    ledger.push("sampled_value", value_from_features(true_feat[static_cast<std::size_t>(chosen)], schedule.at(k)));
  }

  // Comparator: best fixed policy of the set.
  std::vector<std::vector<double>> values(static_cast<std::size_t>(P));
  Eigen::Index best = 0;
  double best_total = std::numeric_limits<double>::infinity();
  for (Eigen::Index p = 0; p < P; ++p) {
    auto& v = values[static_cast<std::size_t>(p)];
    v.reserve(static_cast<std::size_t>(K));
    double total = 0.0;
    for (long k = 0; k < K; ++k) {
      v.push_back(value_from_features(true_feat[static_cast<std::size_t>(p)], schedule.at(k)));
      total += v.back();
    }
    if (total < best_total) {
      best_total = total;
      best = p;
    }
  }
  ledger.comparator_set = "policy-set";
  ledger.comparator_identity = "policy " + std::to_string(best) + ": " + describe_policy(policies.policies[static_cast<std::size_t>(best)]);
  ledger.finalize(values[static_cast<std::size_t>(best)]);

  const BestResponse global = hindsight_best_policy(mdp, schedule.theta, 0, K);
  double global_total = 0.0;
  for (double v : policy_values(mdp, global.policy, schedule.theta, 0, K)) global_total += v;

  auto& sm = ledger.summary;
  sm["K"] = static_cast<double>(K);
  sm["policies"] = static_cast<double>(P);
  sm["gamma"] = params.gamma;
  sm["eta"] = params.eta;
  sm["c_bonus"] = params.c_bonus;
  sm["zeta"] = params.zeta;
  sm["oracle_features"] = params.oracle_features ? 1.0 : 0.0;
  sm["estimation_bonus"] = params.estimation_bonus ? 1.0 : 0.0;
  sm["functions_per_policy"] = static_cast<double>(params.functions_f1 + params.functions_f2);
  sm["estom_calls"] = static_cast<double>(run.estom_calls);
  sm["estom_feasible_frac"] = run.estom_calls > 0 ? static_cast<double>(run.estom_feasible) / static_cast<double>(run.estom_calls) : 1.0;
  sm["lp_failures"] = static_cast<double>(run.lp_failures);
  sm["accuracy_checks"] = static_cast<double>(run.accuracy_checks);
  sm["accuracy_violations"] = static_cast<double>(run.accuracy_violations);
  sm["design_failures"] = static_cast<double>(design_failures);
  sm["rank_deficient_episodes"] = static_cast<double>(rank_deficient);
  sm["bonus_max"] = bonus_max_all;
  sm["regret_vs_all_policies"] = std::accumulate(ledger.expected_value.begin(), ledger.expected_value.end(), 0.0) - global_total;
  return run;
}

}  // namespace linmdp
