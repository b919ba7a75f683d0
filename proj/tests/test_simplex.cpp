#include <doctest.h>

#include <cmath>
#include <limits>

#include "linmdp/simplex.hpp"
#include "linmdp/rng.hpp"

using namespace linmdp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Vertex enumeration over every choice of n active hyperplanes among the rows
// of A, x_j = 0 and x_j = upper_j. Only for tiny problems with finite bounds.
double brute_force_max(const Mat& A, const Vec& b, const Vec& c, const Vec& upper) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  Mat P(m + 2 * n, n);
  Vec q(m + 2 * n);
  P.topRows(m) = A;
  q.head(m) = b;
  P.middleRows(m, n) = -Mat::Identity(n, n);
  q.segment(m, n).setZero();
  P.bottomRows(n) = Mat::Identity(n, n);
  q.tail(n) = upper;
  const int rows = m + 2 * n;
  double best = -kInf;
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    Mat S(n, n);
    Vec r(n);
    for (int i = 0; i < n; ++i) {
      S.row(i) = P.row(idx[static_cast<std::size_t>(i)]);
      r(i) = q(idx[static_cast<std::size_t>(i)]);
    }
    Eigen::FullPivLU<Mat> lu(S);
    if (lu.isInvertible()) {
      const Vec x = lu.solve(r);
      if (((P * x - q).array() <= 1e-9).all()) best = std::max(best, c.dot(x));
    }
    int k = n - 1;
    while (k >= 0 && idx[static_cast<std::size_t>(k)] == rows - n + k) --k;
    if (k < 0) break;
    ++idx[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < n; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

}  // namespace

TEST_CASE("textbook bounded LP with duals") {
  Mat A(2, 2);
  A << 1, 1, 1, 3;
  Vec b(2), c(2), u(2);
  b << 4, 6;
  c << 3, 2;
  u << 3, kInf;
  const LpResult r = solve_lp(A, b, c, u);
  REQUIRE(r.status == LpStatus::kOptimal);
  CHECK(r.x(0) == doctest::Approx(3.0));
  CHECK(r.x(1) == doctest::Approx(1.0));
  CHECK(r.objective == doctest::Approx(11.0));
  CHECK(r.duals(0) == doctest::Approx(2.0));
  CHECK(r.duals(1) == doctest::Approx(0.0));
}

TEST_CASE("unbounded and invalid inputs") {
  Mat A(1, 1);
  A << -1;
  Vec b(1), c(1), u(1);
  b << 1;
  c << 1;
  u << kInf;
  CHECK(solve_lp(A, b, c, u).status == LpStatus::kUnbounded);
  b << -1;
  CHECK(solve_lp(A, b, c, u).status == LpStatus::kInvalid);
}

TEST_CASE("random LPs match vertex enumeration and strong duality") {
  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    const int m = 1 + rng.uniform_int(4), n = 1 + rng.uniform_int(3);
    Mat A(m, n);
    Vec b(m), c(n), u(n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = rng.uniform(-1.0, 1.0);
      b(i) = rep % 3 == 0 ? 0.0 : rng.uniform(0.0, 2.0);  // a third are fully degenerate
    }
    for (int j = 0; j < n; ++j) {
      c(j) = rng.uniform(-1.0, 1.0);
      u(j) = rng.uniform(0.5, 3.0);
    }
    const LpResult r = solve_lp(A, b, c, u);
    REQUIRE(r.status == LpStatus::kOptimal);
    CHECK(std::abs(r.objective - brute_force_max(A, b, c, u)) < 1e-9);
    CHECK(((A * r.x - b).array() <= 1e-9).all());
    CHECK(r.x.minCoeff() >= -1e-12);
    CHECK(((r.x - u).array() <= 1e-12).all());
    // Dual of the bounded problem: min b^T y + sum_j u_j max(0, c_j - (A^T y)_j), y >= 0.
    CHECK(r.duals.minCoeff() >= -1e-12);
    const Vec slack = c - A.transpose() * r.duals;
    const double dual_obj = b.dot(r.duals) + u.dot(slack.cwiseMax(0.0));
    CHECK(std::abs(dual_obj - r.objective) < 1e-9);
  }
}
