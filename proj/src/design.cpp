#include "linmdp/design.hpp"

#include <cmath>

namespace linmdp {

Mat span_basis(const Mat& vectors, double rel_tol) {
  if (vectors.size() == 0) return Mat::Zero(vectors.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(vectors, Eigen::ComputeThinU);
  const Vec& sv = svd.singularValues();
  Eigen::Index r = 0;
  if (sv.size() > 0 && sv(0) > 0.0) {
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > rel_tol * sv(0)) ++r;
    }
  }
  return svd.matrixU().leftCols(r);
}

DesignResult g_optimal_design(const Mat& vectors, double tol, int max_iter) {
  const Eigen::Index n = vectors.cols();
  DesignResult out;
  if (n == 0) throw std::invalid_argument("design over an empty set");
  const Mat basis = span_basis(vectors);
  const Eigen::Index dp = basis.cols();
  out.dimension = static_cast<int>(dp);
  out.weights = Vec::Constant(n, 1.0 / static_cast<double>(n));
  if (dp == 0) {
    out.converged = true;
    return out;
  }
  const Mat z = basis.transpose() * vectors;  // d' x n
  const double target = static_cast<double>(dp) * (1.0 + tol);
  Vec g(n);
  for (int it = 0;; ++it) {
    const Mat m = z * out.weights.asDiagonal() * z.transpose();
    const Eigen::LLT<Mat> llt(m);
    const Mat minv = llt.solve(Mat::Identity(dp, dp));
    for (Eigen::Index i = 0; i < n; ++i) g(i) = z.col(i).dot(minv * z.col(i));
    Eigen::Index up = 0;
    out.certificate = g.maxCoeff(&up);
    out.iterations = it;
    if (out.certificate <= target) {
      out.converged = true;
      break;
    }
    if (it >= max_iter) break;
    // Away candidate: smallest g on the support.
    Eigen::Index down = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (out.weights(i) > 0.0 && (down < 0 || g(i) < g(down))) down = i;
    }
    const double dd = static_cast<double>(dp);
    const double gain_up = g(up) / dd - 1.0;
    const double gain_down = down >= 0 ? 1.0 - g(down) / dd : 0.0;
    if (gain_up >= gain_down || down < 0 || out.weights(down) >= 1.0) {
      const double lam = (g(up) - dd) / (dd * (g(up) - 1.0));
      out.weights *= (1.0 - lam);
      out.weights(up) += lam;
    } else {
      const double wj = out.weights(down);
      const double lam_min = -wj / (1.0 - wj);
      double lam = g(down) > 1.0 ? (g(down) - dd) / (dd * (g(down) - 1.0)) : lam_min;
      lam = std::max(lam, lam_min);
      out.weights *= (1.0 - lam);
      out.weights(down) += lam;
      if (lam == lam_min) out.weights(down) = 0.0;
    }
    out.weights = out.weights.cwiseMax(0.0);
    out.weights /= out.weights.sum();
  }
  return out;
}

}  // namespace linmdp
