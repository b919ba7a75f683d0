#pragma once

// Optimistic bonus matrix estimation: backward-in-h ridge regression of
// clipped future bonuses onto the features.

#include <vector>

#include "linmdp/explore.hpp"
#include "linmdp/mdp.hpp"

namespace linmdp {

struct BonusParams {
  double beta = 0.0;
  double alpha = 0.0;
  double gamma = 1.0;
  double rho = 1.0;
};

/// Cap for 0-based layer h: 4H (1 + 1/H)^{2(H - h)} (beta/gamma + alpha rho^2).
double b_max(int h, int H, double beta, double gamma, double alpha, double rho);

/// 15 sqrt(log(12 d K / delta)); only used by diagnostics.
double c_iota(int d, double K, double delta);

/// Sufficient statistics of the datasets D_h. For h < H-1, next_sums[h] is
/// d x |S_{h+1}| with column s' = sum of phi(s,a) over triples landing in s'.
/// Regressing on these is identical to summing over the triples.
struct DatasetStats {
  std::vector<Mat> lambda_inv;
  std::vector<Mat> next_sums;
};

DatasetStats dataset_stats(const LinearMDP& mdp, const std::vector<std::vector<Triple>>& datasets);

struct ObmeResult {
  std::vector<Vec> w_hat;     // per layer
  std::vector<Mat> matrices;  // lifted (d+1)x(d+1) per layer
  Mat bonus;                  // B_hat(s,a), N x A
  Vec state_bonus;            // W_hat(s) = <pi(.|s), B_hat^+(s,.)>
  long clipped = 0;           // pairs with negative B_hat
};

ObmeResult obme(const LinearMDP& mdp, const DatasetStats& data, const std::vector<Mat>& sigma_inv,
                const std::vector<char>& is_known, const Policy& policy, const BonusParams& params);

struct ShadowBonus {
  Mat b;                 // N x A
  std::vector<Vec> w;    // per layer, exact summation over psi
  Mat B;                 // b + phi^T w
};

/// Test-time oracle: exact b_k, w_{k,h}, B_k from the true psi.
ShadowBonus shadow_bonus(const LinearMDP& mdp, const Policy& policy, const std::vector<Mat>& sigma_inv,
                         const std::vector<Mat>& lambda_inv, const Vec& state_bonus,
                         const std::vector<char>& is_known, const BonusParams& params);

struct BonusDiagnostics {
  long dilated_checks = 0;
  long dilated_violations = 0;
  long bound_checks = 0;
  long bound_violations = 0;
  long w_norm_checks = 0;
  long w_norm_violations = 0;
  double max_abs_bonus = 0.0;
  double dilated_slack = 0.0;  // (C_iota d B^max)^2 / alpha

  void merge(const BonusDiagnostics& o);
};

/// Dilated-bonus inequality, |phi^T w_hat| bound and ||w|| bound on every (h, s, a).
BonusDiagnostics bonus_diagnostics(const LinearMDP& mdp, const Policy& policy, const ObmeResult& est,
                                   const ShadowBonus& shadow, const std::vector<char>& is_known,
                                   const BonusParams& params, double c_iota_value);

}  // namespace linmdp
