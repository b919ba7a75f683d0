#include "linmdp/estimators.hpp"

#include <stdexcept>

#include "linmdp/ftrl.hpp"
#include "linmdp/gram.hpp"

namespace linmdp {

Mat cov_estimate(const Mat& features, double gamma, long tau) {
  if (tau <= 0 || features.cols() != tau) throw std::invalid_argument("cov_estimate: need exactly tau samples");
  const Eigen::Index d = features.rows();
  Mat sigma = gamma * Mat::Identity(d, d);
  sigma.noalias() += (features * features.transpose()) / static_cast<double>(tau);
  return 0.5 * (sigma + sigma.transpose());
}

LossEstimate loss_estimator_inv(const Mat& sigma_inv, const Vec& phi, double tail_loss) {
  LossEstimate out;
  out.q = sigma_inv * phi * tail_loss;
  out.gamma = lift_offdiag(out.q);
  return out;
}

LossEstimate loss_estimator(const Mat& sigma_hat, const Vec& phi, double tail_loss) {
  return loss_estimator_inv(spd_inverse(sigma_hat), phi, tail_loss);
}

std::vector<Mat> policy_covariances(const LinearMDP& mdp, const Policy& policy, const Vec& mu) {
  const int d = mdp.dim();
  std::vector<Mat> out(static_cast<std::size_t>(mdp.horizon()), Mat::Zero(d, d));
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mu(s) == 0.0) continue;
    Mat& m = out[static_cast<std::size_t>(mdp.layer_of(s))];
    for (int a = 0; a < mdp.num_actions(); ++a) {
      const double w = mu(s) * policy.prob(s, a);
      if (w != 0.0) m.noalias() += w * mdp.feature(s, a) * mdp.feature(s, a).transpose();
    }
  }
  return out;
}

}  // namespace linmdp
