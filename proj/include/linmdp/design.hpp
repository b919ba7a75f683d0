#pragma once

// G-optimal design over a finite vector set, computed in the span of the set.

#include "linmdp/mdp.hpp"

namespace linmdp {

struct DesignResult {
  Vec weights;              // distribution over the columns
  double certificate = 0.0; // max_i ||v_i||^2_{M(J)^+}
  int dimension = 0;        // d' = rank of the vector set
  int iterations = 0;
  bool converged = false;
};

/// Columns of `vectors` are the candidates. Stops once the Kiefer-Wolfowitz
/// value max_i ||v_i||^2 is at most d' (1 + tol).
DesignResult g_optimal_design(const Mat& vectors, double tol = 1e-3, int max_iter = 10000);

/// Orthonormal basis (columns) of the column span, rank by relative tolerance.
Mat span_basis(const Mat& vectors, double rel_tol = 1e-10);

}  // namespace linmdp
