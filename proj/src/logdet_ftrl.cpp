#include "linmdp/logdet_ftrl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "linmdp/estimators.hpp"
#include "linmdp/gram.hpp"
#include "linmdp/parallel.hpp"

namespace linmdp {

AlgoParams default_params(int d, int H, long K) {
  const double k = static_cast<double>(K);
  const double sd = std::sqrt(static_cast<double>(d));
  AlgoParams p;
  p.eta = std::pow(k, -0.25) / (3328.0 * sd * H * H);
  p.gamma = 5.0 * d * std::log(6.0 * d * H * std::pow(k, 4.0)) / std::sqrt(k);
  p.beta = sd * std::pow(k, -0.25);
  p.alpha = H * std::pow(k, 0.75);
  p.tau = std::max(1L, static_cast<long>(std::floor(std::sqrt(k))));
  p.delta = std::pow(k, -3.0);
  p.rho = std::pow(static_cast<double>(H), -0.5) * std::pow(static_cast<double>(d), -0.25) * std::pow(k, -0.25);
  p.eps_cov = std::pow(k, -0.25);
  return p;
}

namespace {

// Running sufficient statistics of D_h.
struct LiveData {
  std::vector<GramInverse> grams;
  std::vector<Mat> next_sums;

  LiveData(const LinearMDP& mdp, const std::vector<std::vector<Triple>>& initial) {
    const int H = mdp.horizon();
    for (int h = 0; h < H; ++h) {
      grams.emplace_back(mdp.dim());
      next_sums.push_back(h + 1 < H ? Mat::Zero(mdp.dim(), mdp.layer_size(h + 1)) : Mat::Zero(mdp.dim(), 0));
      for (const Triple& t : initial[static_cast<std::size_t>(h)]) add(mdp, h, t);
    }
  }

  void add(const LinearMDP& mdp, int h, const Triple& t) {
    const auto phi = mdp.feature(t.state, t.action);
    grams[static_cast<std::size_t>(h)].add(phi);
    if (t.next >= 0) next_sums[static_cast<std::size_t>(h)].col(t.next - mdp.layer_begin(h + 1)) += phi;
  }

  DatasetStats stats() const {
    DatasetStats s;
    for (const auto& g : grams) s.lambda_inv.push_back(g.inverse());
    s.next_sums = next_sums;
    return s;
  }
};

double min_eigenvalue(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

LogdetRun run_logdet_ftrl(const LinearMDP& mdp, const LossSchedule& schedule, const AlgoParams& params, Rng& rng) {
  const long K = schedule.num_episodes;
  const int H = mdp.horizon();
  const int d = mdp.dim();
  const int A = mdp.num_actions();
  const int N = mdp.num_states();
  if (K <= 0) throw std::invalid_argument("run_logdet_ftrl: K must be positive");
  if (params.tau <= 0 || params.eta <= 0.0 || params.gamma <= 0.0) {
    throw std::invalid_argument("run_logdet_ftrl: tau, eta and gamma must be positive");
  }

  LogdetRun run;
  RegretLedger& ledger = run.ledger;
  ledger.algorithm = "logdet-ftrl";
  for (const char* c : {"epoch", "ftrl_gap_max", "bonus_max"}) ledger.add_column(c);

  ExploreParams ep;
  ep.rho = params.rho;
  ep.eps_cov = params.eps_cov;
  ep.delta = params.delta;
  ep.budget = params.explore_budget < 0 ? K : std::min(params.explore_budget, K);
  run.exploration = pure_explore(mdp, ep, rng, &schedule);
  const KnownStateReport& rep = run.exploration;
  const long K0 = rep.episodes_used;

  {
    std::vector<PolicyEvaluator> evals;
    for (const Policy& p : rep.policies) evals.emplace_back(mdp, p);
    for (long k = 0; k < K0; ++k) {
      ledger.realized_loss.push_back(rep.trajectories[static_cast<std::size_t>(k)].total_loss());
      ledger.expected_value.push_back(evals[static_cast<std::size_t>(rep.episode_policy[static_cast<std::size_t>(k)])].value(schedule.at(k)));
      ledger.push("epoch", 0.0);
      ledger.push("ftrl_gap_max", 0.0);
      ledger.push("bonus_max", 0.0);
    }
  }

  LiveData live(mdp, rep.datasets);
  const std::vector<char>& known = rep.is_known;
  BonusParams bp{params.beta, params.alpha, params.gamma, params.rho};
  const double ci = c_iota(d, static_cast<double>(K), params.delta);
  const double qhat_cap = H / params.gamma;
  const long tau = params.tau;

  std::vector<Mat> cum_loss(static_cast<std::size_t>(H), Mat::Zero(d + 1, d + 1));
  std::vector<Mat> lifted(static_cast<std::size_t>(N));
  for (int s = 0; s < N; ++s) lifted[static_cast<std::size_t>(s)] = lifted_vectors(mdp, s);
  std::vector<FtrlSolution> solutions(static_cast<std::size_t>(N));

  long ftrl_solves = 0, ftrl_unconverged = 0, ftrl_tol_failures = 0;
  double ftrl_gap_worst = 0.0, min_reduced_logdet = std::numeric_limits<double>::infinity();
  long qhat_checks = 0, qhat_violations = 0;
  long split_checks = 0, split_violations = 0;
  long conc_checks = 0, conc_failures = 0;
  double sigma_min_eig = std::numeric_limits<double>::infinity();
  long obme_calls = 0, clipped = 0, bonus_pairs = 0;
  double bonus_abs_max = 0.0;
  BonusDiagnostics diag;

  long k = K0;
  long epoch = 0;
  while (k < K) {
    ++epoch;
    // FTRL per known state; unknown states stay uniform.
    std::vector<FtrlSolution> next(static_cast<std::size_t>(N));
    parallel_for(
        N,
        [&](std::ptrdiff_t si) {
          const int s = static_cast<int>(si);
          if (!known[static_cast<std::size_t>(s)]) return;
          const Vec* start = solutions[static_cast<std::size_t>(s)].p.size() == A ? &solutions[static_cast<std::size_t>(s)].p : nullptr;
          next[static_cast<std::size_t>(si)] =
              ftrl_solve(lifted[static_cast<std::size_t>(s)], cum_loss[static_cast<std::size_t>(mdp.layer_of(s))], params.eta, params.ftrl, start);
        },
        params.serial);
    double gap_max = 0.0;
    for (int s = 0; s < N; ++s) {
      const FtrlSolution& sol = next[static_cast<std::size_t>(s)];
      if (sol.p.size() != A) continue;
      ++ftrl_solves;
      if (!sol.converged) ++ftrl_unconverged;
      if (sol.gap > params.ftrl.tol) ++ftrl_tol_failures;
      gap_max = std::max(gap_max, sol.gap);
      min_reduced_logdet = std::min(min_reduced_logdet, sol.log_det);
      solutions[static_cast<std::size_t>(s)] = sol;
    }
    ftrl_gap_worst = std::max(ftrl_gap_worst, gap_max);
    const Policy policy = policy_from_covariances(mdp, solutions);
    const Vec mu = occupancy(mdp, policy);
    const Mat feat = feature_expectations(mdp, policy, mu);
    PolicyEvaluator eval(mdp, policy);

    const long len = std::min(2 * tau, K - k);
    const bool full = len == 2 * tau;
    std::vector<Trajectory> trajs;
    trajs.reserve(static_cast<std::size_t>(len));
    for (long i = 0; i < len; ++i) trajs.push_back(sample_episode(mdp, policy, schedule.at(k + i), rng, k + i));

    double epoch_bonus_max = 0.0;
    if (full) {
      // C_{k,h}: the opposite half of the epoch, per layer.
      std::vector<std::vector<Mat>> sigma_inv(2);
      std::vector<Mat> oracle_cov = policy_covariances(mdp, policy, mu);
      for (int half = 0; half < 2; ++half) {
        const long other = 1 - half;
        for (long i = other * tau; i < (other + 1) * tau; ++i) {
          ++split_checks;
          if ((i < tau) == (half == 0)) ++split_violations;
        }
        for (int h = 0; h < H; ++h) {
          Mat feats(d, tau);
          for (long i = 0; i < tau; ++i) {
            const Step& st = trajs[static_cast<std::size_t>(other * tau + i)].steps[static_cast<std::size_t>(h)];
            feats.col(i) = mdp.feature(st.state, st.action);
          }
          const Mat sigma = cov_estimate(feats, params.gamma, tau);
          sigma_min_eig = std::min(sigma_min_eig, min_eigenvalue(sigma));
          ++conc_checks;
          if (min_eigenvalue(sigma - 0.5 * oracle_cov[static_cast<std::size_t>(h)]) < 0.0) ++conc_failures;
          sigma_inv[static_cast<std::size_t>(half)].push_back(spd_inverse(sigma));
        }
      }

      std::vector<Mat> gamma_sum(static_cast<std::size_t>(H), Mat::Zero(d + 1, d + 1));
      std::vector<Mat> bonus_sum(static_cast<std::size_t>(H), Mat::Zero(d + 1, d + 1));
      auto absorb = [&](const ObmeResult& r, double weight) {
        for (int h = 0; h < H; ++h) bonus_sum[static_cast<std::size_t>(h)] += weight * r.matrices[static_cast<std::size_t>(h)];
        const double m = r.bonus.cwiseAbs().maxCoeff();
        epoch_bonus_max = std::max(epoch_bonus_max, m);
        bonus_abs_max = std::max(bonus_abs_max, m);
        clipped += r.clipped;
        bonus_pairs += static_cast<long>(r.bonus.size());
        ++obme_calls;
      };
      auto check_bonus = [&](const ObmeResult& r, const std::vector<Mat>& sinv, const DatasetStats& st) {
        if (!params.diagnostics) return;
        const ShadowBonus sh = shadow_bonus(mdp, policy, sinv, st.lambda_inv, r.state_bonus, known, bp);
        diag.merge(bonus_diagnostics(mdp, policy, r, sh, known, bp, ci));
      };

      for (long i = 0; i < 2 * tau; ++i) {
        const int half = i < tau ? 0 : 1;
        const Trajectory& tr = trajs[static_cast<std::size_t>(i)];
        double tail = tr.total_loss();
        for (int h = 0; h < H; ++h) {
          const Step& st = tr.steps[static_cast<std::size_t>(h)];
          const LossEstimate est =
              loss_estimator_inv(sigma_inv[static_cast<std::size_t>(half)][static_cast<std::size_t>(h)], mdp.feature(st.state, st.action), tail);
          tail -= st.loss;
          ++qhat_checks;
          if (est.q.norm() > qhat_cap * (1.0 + 1e-12)) ++qhat_violations;
          gamma_sum[static_cast<std::size_t>(h)] += est.gamma;
          const int nxt = h + 1 < H ? tr.steps[static_cast<std::size_t>(h) + 1].state : -1;
          live.add(mdp, h, {st.state, st.action, nxt});
        }
        if (!params.obme_per_epoch) {
          const DatasetStats st = live.stats();
          const ObmeResult r = obme(mdp, st, sigma_inv[static_cast<std::size_t>(half)], known, policy, bp);
          absorb(r, 1.0);
          if (i == 0 || i == tau) check_bonus(r, sigma_inv[static_cast<std::size_t>(half)], st);
        }
      }
      if (params.obme_per_epoch) {
        const DatasetStats st = live.stats();
        for (int half = 0; half < 2; ++half) {
          const ObmeResult r = obme(mdp, st, sigma_inv[static_cast<std::size_t>(half)], known, policy, bp);
          absorb(r, static_cast<double>(tau));
          check_bonus(r, sigma_inv[static_cast<std::size_t>(half)], st);
        }
      }
      for (int h = 0; h < H; ++h) {
        Mat inc = (gamma_sum[static_cast<std::size_t>(h)] - bonus_sum[static_cast<std::size_t>(h)]) / static_cast<double>(2 * tau);
        cum_loss[static_cast<std::size_t>(h)] += 0.5 * (inc + inc.transpose());
      }
    }

    for (long i = 0; i < len; ++i) {
      const long kk = k + i;
      ledger.realized_loss.push_back(trajs[static_cast<std::size_t>(i)].total_loss());
      ledger.expected_value.push_back(mdp.exact() ? value_from_features(feat, schedule.at(kk)) : eval.value(schedule.at(kk)));
      ledger.push("epoch", static_cast<double>(epoch));
      ledger.push("ftrl_gap_max", gap_max);
      ledger.push("bonus_max", epoch_bonus_max);
    }
    k += len;
  }
  run.epochs = epoch;

  double gram_residual = 0.0;
  for (const auto& g : live.grams) gram_residual = std::max(gram_residual, g.last_residual());

  auto& sm = ledger.summary;
  sm["K"] = static_cast<double>(K);
  sm["K0"] = static_cast<double>(K0);
  sm["certificate_passed"] = rep.certificate_passed ? 1.0 : 0.0;
  sm["epochs"] = static_cast<double>(epoch);
  sm["tau"] = static_cast<double>(tau);
  sm["eta"] = params.eta;
  sm["gamma"] = params.gamma;
  sm["beta"] = params.beta;
  sm["alpha"] = params.alpha;
  sm["rho"] = params.rho;
  sm["eps_cov"] = params.eps_cov;
  sm["known_states"] = static_cast<double>(std::count(known.begin(), known.end(), char{1}));
  sm["ftrl_solves"] = static_cast<double>(ftrl_solves);
  sm["ftrl_unconverged"] = static_cast<double>(ftrl_unconverged);
  sm["ftrl_gap_failures"] = static_cast<double>(ftrl_tol_failures);
  sm["ftrl_gap_max"] = ftrl_gap_worst;
  sm["ftrl_min_reduced_logdet"] = ftrl_solves > 0 ? min_reduced_logdet : 0.0;
  sm["qhat_checks"] = static_cast<double>(qhat_checks);
  sm["qhat_bound_violations"] = static_cast<double>(qhat_violations);
  sm["split_half_checks"] = static_cast<double>(split_checks);
  sm["split_half_violations"] = static_cast<double>(split_violations);
  sm["concentration_checks"] = static_cast<double>(conc_checks);
  sm["concentration_failures"] = static_cast<double>(conc_failures);
  sm["sigma_min_eigenvalue"] = conc_checks > 0 ? sigma_min_eig : 0.0;
  sm["obme_calls"] = static_cast<double>(obme_calls);
  sm["bonus_abs_max"] = bonus_abs_max;
  sm["bonus_clipped_fraction"] = bonus_pairs > 0 ? static_cast<double>(clipped) / static_cast<double>(bonus_pairs) : 0.0;
  sm["dilated_checks"] = static_cast<double>(diag.dilated_checks);
  sm["dilated_violations"] = static_cast<double>(diag.dilated_violations);
  sm["w_bound_checks"] = static_cast<double>(diag.bound_checks);
  sm["w_bound_violations"] = static_cast<double>(diag.bound_violations);
  sm["w_norm_checks"] = static_cast<double>(diag.w_norm_checks);
  sm["w_norm_violations"] = static_cast<double>(diag.w_norm_violations);
  sm["gram_refactor_residual"] = gram_residual;
  sm["obme_per_epoch"] = params.obme_per_epoch ? 1.0 : 0.0;

  finalize_against_best_policy(ledger, mdp, schedule.theta);
  return run;
}

}  // namespace linmdp
