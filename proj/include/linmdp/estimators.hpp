#pragma once

// Split-half covariance estimates and linear loss estimators.

#include <vector>

#include "linmdp/mdp.hpp"

namespace linmdp {

/// gamma I + (1/tau) sum phi phi^T over the columns of `features` (d x n);
/// n must equal tau.
Mat cov_estimate(const Mat& features, double gamma, long tau);

struct LossEstimate {
  Vec q;      // Sigma^{-1} phi * tail_loss
  Mat gamma;  // lifted [0, q/2; q^T/2, 0]
};

LossEstimate loss_estimator(const Mat& sigma_hat, const Vec& phi, double tail_loss);
/// Same with a precomputed inverse.
LossEstimate loss_estimator_inv(const Mat& sigma_inv, const Vec& phi, double tail_loss);

/// E_{s~mu_h, a~pi}[phi phi^T] for every layer (oracle covariance).
std::vector<Mat> policy_covariances(const LinearMDP& mdp, const Policy& policy, const Vec& mu);

}  // namespace linmdp
