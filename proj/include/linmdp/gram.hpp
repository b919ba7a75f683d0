#pragma once

#include "linmdp/mdp.hpp"

namespace linmdp {

/// Lambda = I + sum w x x^T with its inverse kept current by Sherman-Morrison
/// updates and refreshed from scratch every `refactor_every` updates.
class GramInverse {
 public:
  explicit GramInverse(int d, int refactor_every = 256);

  void add(const Eigen::Ref<const Vec>& x, double weight = 1.0);
  /// Rebuilds the inverse by Cholesky and checks the drift it replaces.
  void refactorize();

  const Mat& gram() const { return gram_; }
  const Mat& inverse() const { return inverse_; }
  /// x^T Lambda^{-1} x
  double norm_sq(const Eigen::Ref<const Vec>& x) const { return x.dot(inverse_ * x); }
  long updates() const { return updates_; }
  /// Max-entry residual |Lambda * inverse - I| measured at the last refactorization.
  double last_residual() const { return last_residual_; }

 private:
  Mat gram_;
  Mat inverse_;
  int refactor_every_;
  long updates_ = 0;
  double last_residual_ = 0.0;
};

/// Inverse of a symmetric positive definite matrix via Cholesky.
Mat spd_inverse(const Mat& m);

}  // namespace linmdp
