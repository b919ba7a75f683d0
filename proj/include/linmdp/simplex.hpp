#pragma once

// Dense bounded-variable primal simplex for small problems of the form
//   max c^T x  s.t.  A x <= b,  0 <= x <= upper,  with b >= 0.

#include "linmdp/mdp.hpp"

namespace linmdp {

enum class LpStatus { kOptimal, kUnbounded, kIterationLimit, kInvalid };

struct LpResult {
  LpStatus status = LpStatus::kInvalid;
  Vec x;
  double objective = 0.0;
  /// Shadow prices of the rows (nonnegative at optimality).
  Vec duals;
  int iterations = 0;
};

/// upper entries may be +infinity.
LpResult solve_lp(const Mat& A, const Vec& b, const Vec& c, const Vec& upper, int max_iter = 5000);

}  // namespace linmdp
