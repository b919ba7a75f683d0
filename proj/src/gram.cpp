#include "linmdp/gram.hpp"

#include <stdexcept>

namespace linmdp {

GramInverse::GramInverse(int d, int refactor_every)
    : gram_(Mat::Identity(d, d)), inverse_(Mat::Identity(d, d)), refactor_every_(refactor_every) {
  if (refactor_every <= 0) throw std::invalid_argument("refactor interval must be positive");
}

void GramInverse::add(const Eigen::Ref<const Vec>& x, double weight) {
  if (weight <= 0.0) return;
  gram_.noalias() += weight * x * x.transpose();
  const Vec u = inverse_ * x;
  inverse_.noalias() -= (weight / (1.0 + weight * x.dot(u))) * u * u.transpose();
  ++updates_;
  if (updates_ % refactor_every_ == 0) refactorize();
}

void GramInverse::refactorize() {
  Mat fresh = spd_inverse(gram_);
  const Eigen::Index d = gram_.rows();
  last_residual_ = (gram_ * inverse_ - Mat::Identity(d, d)).cwiseAbs().maxCoeff();
  if (last_residual_ >= 1e-8) {
    throw std::runtime_error("Gram inverse drifted beyond 1e-8 between refactorizations");
  }
  inverse_ = std::move(fresh);
}

Mat spd_inverse(const Mat& m) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) throw std::runtime_error("matrix is not positive definite");
  Mat inv = llt.solve(Mat::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace linmdp
