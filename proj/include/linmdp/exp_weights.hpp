#pragma once

// Exponential weights over a finite policy set with estimated occupancy
// features, G-optimal exploration mixing and estimation bonuses.

#include "linmdp/design.hpp"
#include "linmdp/env_suite.hpp"
#include "linmdp/estom.hpp"
#include "linmdp/ledger.hpp"
#include "linmdp/policy_set.hpp"

namespace linmdp {

struct ExpwParams {
  double gamma = 0.5;
  double eta = 0.0;
  double delta = 0.01;
  double c_bonus = 0.0;
  double zeta = 0.0;
  /// Use exact occupancy measures instead of EstOM.
  bool oracle_features = false;
  /// Include the C_bonus * sum mu_hat ||phi||_{Lambda^{-1}} term.
  bool estimation_bonus = true;
  int functions_f1 = 32;
  int functions_f2 = 32;
  EstomFallback fallback = EstomFallback::kUniform;
  double design_tol = 1e-3;
  /// Episodes between accuracy diagnostics (0 picks about 64 per run).
  long diagnostic_stride = 0;
  bool serial = false;
  /// Keep the unmixed weights q_k of every episode in ExpwRun::weights.
  bool record_weights = false;
};

/// 10 d^{5/4} H sqrt(log(18 d^{3/2} K / delta)).
double bonus_constant(int d, int H, double K, double delta);

/// gamma = min(d^2 sqrt(H / K), 1/2), eta = gamma / (2 d H), zeta = d / K.
ExpwParams expw_params(int d, int H, long K, bool oracle_features, double delta = 0.01);

struct ExpWeightsStep {
  Vec q;      // exponential weights
  Vec mixed;  // (1 - gamma) q + gamma J
};

/// scores are cumulative sum_i (phi_hat^T theta_hat - b).
ExpWeightsStep exp_weights_step(const Vec& scores, double eta, double gamma, const Vec& design);

struct EstimateAndBonus {
  Vec theta;          // in R^{dH}
  Vec bonus;          // per policy
  bool rank_deficient = false;
  int rank = 0;
};

/// M = sum q'(pi) phi phi^T (pseudo-inverse on its span), theta = M^+ phi_k L,
/// b_pi = c_bonus * uncertainty_pi + eta ||phi_pi||^2_{M^+}.
EstimateAndBonus estimate_and_bonus(const Vec& mixed, const Mat& phis, int chosen, double total_loss,
                                    const Vec& uncertainty, double c_bonus, double eta);

struct ExpwRun {
  RegretLedger ledger;
  long estom_calls = 0;
  long estom_feasible = 0;
  long lp_failures = 0;
  long accuracy_checks = 0;
  long accuracy_violations = 0;
  std::vector<Vec> weights;
};

ExpwRun run_exp_weights(const LinearMDP& mdp, const LossSchedule& schedule, const PolicySet& policies,
                        const ExpwParams& params, Rng& rng);

}  // namespace linmdp
