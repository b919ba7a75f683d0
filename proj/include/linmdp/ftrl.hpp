#pragma once

// Per-state logdet FTRL over lifted covariance matrices
//   Cov(s, p) = E_{a~p} [phi phi^T, phi; phi^T, 1].
//
// With fewer actions than d + 1 every lifted covariance is singular, so the
// barrier is the log-determinant restricted to span{(phi(s,a), 1)}; it equals
// -log det(Cov) whenever Cov has full rank.

#include <vector>

#include "linmdp/mdp.hpp"

namespace linmdp {

/// Columns x_a = (phi(s,a), 1), shape (d+1) x A.
Mat lifted_vectors(const LinearMDP& mdp, int s);

/// Lifted matrix (d+1)x(d+1) of a d-vector or a d x d block: [m, v/2; v^T/2, 0] helpers.
Mat lift_offdiag(const Vec& v);

Mat lifted_cov(const Mat& lifted, const Vec& p);
Mat lifted_cov(const LinearMDP& mdp, int s, const Vec& p);

struct FtrlOptions {
  double tol = 1e-8;
  int max_iter = 10000;
};

struct FtrlSolution {
  Vec p;           // action distribution
  Mat cov;         // lifted covariance at p
  double gap = 0.0;       // scaled Frank-Wolfe gap
  double raw_gap = 0.0;   // unscaled gap max_support grad - min grad
  int iterations = 0;
  bool converged = false;
  double log_det = 0.0;   // restricted log-determinant at p
  int rank = 0;
};

/// Minimizes <Cov(p), L> - logdet(Cov(p)) / eta over the simplex by pairwise
/// Frank-Wolfe with exact line search. `start` warm-starts from an interior point.
FtrlSolution ftrl_solve(const Mat& lifted, const Mat& L, double eta, const FtrlOptions& opts = {},
                        const Vec* start = nullptr);

/// Objective value g(p) for checks.
double ftrl_objective(const Mat& lifted, const Mat& L, double eta, const Vec& p);

/// Policy table whose row s is solutions[s].p; rows without a solution
/// (empty p) are uniform.
Policy policy_from_covariances(const LinearMDP& mdp, const std::vector<FtrlSolution>& solutions);

}  // namespace linmdp
