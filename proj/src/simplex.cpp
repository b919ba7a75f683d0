#include "linmdp/simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/LU>

namespace linmdp {

LpResult solve_lp(const Mat& A, const Vec& b, const Vec& c, const Vec& upper, int max_iter) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  LpResult res;
  if (b.size() != m || c.size() != n || upper.size() != n || (m > 0 && b.minCoeff() < 0.0)) return res;
  const double inf = std::numeric_limits<double>::infinity();
  const double eps = 1e-11;
  const double pivot_tol = 1e-7;
  const Eigen::Index total = n + m;

  // Tableau of B^{-1} [A I], stored transposed so row operations are contiguous.
  Mat T(total, m);
  T.topRows(n) = A.transpose();
  T.bottomRows(m) = Mat::Identity(m, m);
  Vec ub(total);
  ub.head(n) = upper;
  ub.tail(m).setConstant(inf);
  Vec cost = Vec::Zero(total);
  cost.head(n) = c;
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  std::vector<int> state(static_cast<std::size_t>(total), 0);  // 0 lower, 1 upper, 2 basic
  for (Eigen::Index i = 0; i < m; ++i) {
    basis[static_cast<std::size_t>(i)] = n + i;
    state[static_cast<std::size_t>(n + i)] = 2;
  }
  Vec beta = b;
  Vec d = cost;  // reduced costs; basic slacks have zero cost
  int degenerate_run = 0;
  int since_refactor = 0;

  // Rebuilds T, beta and d from the original data for the current basis.
  Mat full(m, total);
  full.leftCols(n) = A;
  full.rightCols(m) = Mat::Identity(m, m);
  auto refactor = [&]() -> bool {
    Mat B(m, m);
    Vec cb(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      B.col(i) = full.col(basis[static_cast<std::size_t>(i)]);
      cb(i) = cost(basis[static_cast<std::size_t>(i)]);
    }
    const Eigen::FullPivLU<Mat> lu(B);
    if (!lu.isInvertible()) return false;
    T = lu.solve(full).transpose();
    Vec rhs = b;
    for (Eigen::Index j = 0; j < total; ++j) {
      if (state[static_cast<std::size_t>(j)] == 1) rhs -= ub(j) * full.col(j);
    }
    beta = lu.solve(rhs);
    d = cost - T * cb;
    for (Eigen::Index i = 0; i < m; ++i) d(basis[static_cast<std::size_t>(i)]) = 0.0;
    since_refactor = 0;
    return true;
  };
  bool fresh = true;

  for (int it = 0;; ++it) {
    if (it >= max_iter) {
      res.status = LpStatus::kIterationLimit;
      res.iterations = it;
      return res;
    }
    // Pricing: Dantzig, switching to Bland's rule during degenerate stalls.
    const bool bland = degenerate_run > 50;
    Eigen::Index enter = -1;
    double best = 0.0;
    for (Eigen::Index j = 0; j < total; ++j) {
      const int st = state[static_cast<std::size_t>(j)];
      if (st == 2) continue;
      double score = 0.0;
      if (st == 0 && d(j) > eps) score = d(j);
      if (st == 1 && d(j) < -eps) score = -d(j);
      if (score <= 0.0) continue;
      if (bland) {
        enter = j;
        break;
      }
      if (score > best) {
        best = score;
        enter = j;
      }
    }
    if (enter < 0) {
      if (!fresh) {
        if (!refactor()) {
          res.status = LpStatus::kIterationLimit;
          res.iterations = it;
          return res;
        }
        fresh = true;
        continue;
      }
      res.iterations = it;
      break;
    }
    fresh = false;
    const double dir = state[static_cast<std::size_t>(enter)] == 0 ? 1.0 : -1.0;
    // Basic variable i moves by -dir * T(i, enter) * theta.
    double theta = ub(enter);
    Eigen::Index leave = -1;
    bool leave_to_upper = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double rate = dir * T(enter, i);
      const double ubi = ub(basis[static_cast<std::size_t>(i)]);
      double limit = inf;
      bool to_upper = false;
      if (rate > pivot_tol) {
        limit = beta(i) / rate;
      } else if (rate < -pivot_tol && ubi < inf) {
        limit = (ubi - beta(i)) / (-rate);
        to_upper = true;
      } else {
        continue;
      }
      limit = std::max(limit, 0.0);
      if (limit < theta - 1e-14 || (leave >= 0 && std::abs(limit - theta) <= 1e-14 &&
                                    basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
        theta = limit;
        leave = i;
        leave_to_upper = to_upper;
      }
    }
    if (theta == inf) {
      res.status = LpStatus::kUnbounded;
      res.iterations = it;
      return res;
    }
    degenerate_run = theta <= 1e-14 ? degenerate_run + 1 : 0;
    beta -= (dir * theta) * T.row(enter).transpose();
    if (leave < 0) {
      // Bound flip.
      state[static_cast<std::size_t>(enter)] = 1 - state[static_cast<std::size_t>(enter)];
      continue;
    }
    const Eigen::Index out = basis[static_cast<std::size_t>(leave)];
    const double entering_value = state[static_cast<std::size_t>(enter)] == 0 ? theta : ub(enter) - theta;
    const double piv = T(enter, leave);
    T.col(leave) /= piv;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i == leave) continue;
      const double f = T(enter, i);
      if (f != 0.0) T.col(i) -= f * T.col(leave);
    }
    const double fd = d(enter);
    d -= fd * T.col(leave);
    beta(leave) = entering_value;
    basis[static_cast<std::size_t>(leave)] = enter;
    state[static_cast<std::size_t>(enter)] = 2;
    state[static_cast<std::size_t>(out)] = leave_to_upper ? 1 : 0;
    if (++since_refactor >= 50 && !refactor()) {
      res.status = LpStatus::kIterationLimit;
      res.iterations = it;
      return res;
    }
  }

  res.status = LpStatus::kOptimal;
  res.x = Vec::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (state[static_cast<std::size_t>(j)] == 1) res.x(j) = ub(j);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index j = basis[static_cast<std::size_t>(i)];
    if (j < n) res.x(j) = beta(i);
  }
  res.objective = c.dot(res.x);
  res.duals = -d.tail(m);
  return res;
}

}  // namespace linmdp
