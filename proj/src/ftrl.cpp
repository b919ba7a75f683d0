#include "linmdp/ftrl.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace linmdp {

Mat lifted_vectors(const LinearMDP& mdp, int s) {
  const int d = mdp.dim();
  const int A = mdp.num_actions();
  Mat x(d + 1, A);
  for (int a = 0; a < A; ++a) {
    x.col(a).head(d) = mdp.feature(s, a);
    x(d, a) = 1.0;
  }
  return x;
}

Mat lift_offdiag(const Vec& v) {
  const Eigen::Index d = v.size();
  Mat m = Mat::Zero(d + 1, d + 1);
  m.col(d).head(d) = 0.5 * v;
  m.row(d).head(d) = 0.5 * v.transpose();
  return m;
}

Mat lifted_cov(const Mat& lifted, const Vec& p) {
  return lifted * p.asDiagonal() * lifted.transpose();
}

Mat lifted_cov(const LinearMDP& mdp, int s, const Vec& p) { return lifted_cov(lifted_vectors(mdp, s), p); }

namespace {

struct Reduced {
  Mat y;  // r x A coordinates of x_a in an orthonormal basis of their span
  int rank;
};

Reduced reduce(const Mat& lifted) {
  Eigen::JacobiSVD<Mat> svd(lifted, Eigen::ComputeThinU);
  const Vec& sv = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > 1e-10 * sv(0)) ++r;
  }
  Mat u = svd.matrixU().leftCols(r);
  return {u.transpose() * lifted, r};
}

double restricted_log_det(const Mat& y, const Vec& p) {
  const Mat m = y * p.asDiagonal() * y.transpose();
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// Smallest root in (0, t_max] of phi'(t) for
// phi(t) = t*delta - log(1 + (a-b) t - D t^2) / eta, which is convex with phi'(0) < 0.
double line_search(double delta, double a, double b, double c, double eta, double t_max) {
  const double D = std::max(a * b - c * c, 0.0);
  auto q = [&](double t) { return 1.0 + (a - b) * t - D * t * t; };
  auto dphi = [&](double t) { return delta - ((a - b) - 2.0 * D * t) / (eta * q(t)); };
  double hi = t_max;
  if (q(hi) <= 0.0) {
    hi = (1.0 - 1e-12) * t_max;
  } else if (dphi(hi) <= 0.0) {
    return hi;
  }
  // Closed-form candidate from eta*delta*q(t) - (a-b) + 2 D t = 0.
  const double qa = -eta * delta * D;
  const double qb = eta * delta * (a - b) + 2.0 * D;
  const double qc = eta * delta - (a - b);
  double t = -1.0;
  if (std::abs(qa) < 1e-300) {
    if (qb != 0.0) t = -qc / qb;
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      // Stable pair of roots.
      const double tmp = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
      const double r1 = tmp / qa;
      const double r2 = tmp != 0.0 ? qc / tmp : r1;
      for (double r : {r1, r2}) {
        if (r > 0.0 && r <= hi && q(r) > 0.0 && (t < 0.0 || r < t)) t = r;
      }
    }
  }
  if (t > 0.0 && std::abs(dphi(t)) <= 1e-9 * (1.0 + std::abs(delta) + std::abs(a - b) / eta)) return t;
  // Bisection fallback on the monotone derivative.
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-16 * t_max; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (dphi(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double ftrl_objective(const Mat& lifted, const Mat& L, double eta, const Vec& p) {
  const Reduced red = reduce(lifted);
  double lin = 0.0;
  for (Eigen::Index a = 0; a < lifted.cols(); ++a) lin += p(a) * lifted.col(a).dot(L * lifted.col(a));
  return lin - restricted_log_det(red.y, p) / eta;
}

FtrlSolution ftrl_solve(const Mat& lifted, const Mat& L, double eta, const FtrlOptions& opts, const Vec* start) {
  if (eta <= 0.0) throw std::invalid_argument("ftrl: eta must be positive");
  if (L.rows() != lifted.rows() || L.cols() != lifted.rows()) throw std::invalid_argument("ftrl: L has the wrong shape");
  if ((L - L.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + L.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("ftrl: L must be symmetric");
  }
  const Eigen::Index A = lifted.cols();
  const Reduced red = reduce(lifted);
  Vec c(A);
  for (Eigen::Index a = 0; a < A; ++a) c(a) = lifted.col(a).dot(L * lifted.col(a));

  FtrlSolution sol;
  sol.rank = red.rank;
  if (start != nullptr && start->size() == A && start->minCoeff() > 0.0) {
    sol.p = *start / start->sum();
  } else {
    sol.p = Vec::Constant(A, 1.0 / static_cast<double>(A));
  }

  Vec grad(A);
  Mat minv;
  auto refresh = [&]() {
    const Mat m = red.y * sol.p.asDiagonal() * red.y.transpose();
    Eigen::LLT<Mat> llt(m);
    if (llt.info() != Eigen::Success) throw std::runtime_error("ftrl: lifted covariance lost rank");
    minv = llt.solve(Mat::Identity(m.rows(), m.cols()));
    for (Eigen::Index a = 0; a < A; ++a) grad(a) = c(a) - red.y.col(a).dot(minv * red.y.col(a)) / eta;
  };

  for (int it = 0;; ++it) {
    refresh();
    Eigen::Index i = 0;
    grad.minCoeff(&i);
    Eigen::Index j = -1;
    for (Eigen::Index a = 0; a < A; ++a) {
      if (sol.p(a) > 0.0 && (j < 0 || grad(a) > grad(j))) j = a;
    }
    sol.raw_gap = grad(j) - grad(i);
    sol.gap = sol.raw_gap / std::max(1.0, std::abs(sol.p.dot(grad)));
    sol.iterations = it;
    if (sol.gap <= opts.tol || i == j) {
      sol.converged = true;
      break;
    }
    if (it >= opts.max_iter) break;
    const double a_ = red.y.col(i).dot(minv * red.y.col(i));
    const double b_ = red.y.col(j).dot(minv * red.y.col(j));
    const double c_ = red.y.col(i).dot(minv * red.y.col(j));
    const double t = line_search(c(i) - c(j), a_, b_, c_, eta, sol.p(j));
    if (!(t > 0.0)) break;
    sol.p(i) += t;
    sol.p(j) = t >= sol.p(j) ? 0.0 : sol.p(j) - t;
  }
  sol.p = sol.p.cwiseMax(0.0);
  sol.p /= sol.p.sum();
  sol.cov = lifted_cov(lifted, sol.p);
  sol.log_det = restricted_log_det(red.y, sol.p);
  return sol;
}

Policy policy_from_covariances(const LinearMDP& mdp, const std::vector<FtrlSolution>& solutions) {
  const int A = mdp.num_actions();
  Mat table = Mat::Constant(mdp.num_states(), A, 1.0 / A);
  for (std::size_t s = 0; s < solutions.size(); ++s) {
    if (solutions[s].p.size() == A) table.row(static_cast<Eigen::Index>(s)) = solutions[s].p.transpose();
  }
  return Policy(std::move(table));
}

}  // namespace linmdp
