#include "linmdp/estom.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "linmdp/simplex.hpp"

namespace linmdp {

SampledFunctions sample_functions(const LinearMDP& mdp, const Policy& policy, int n1, int n2, Rng& rng) {
  const int d = mdp.dim();
  const int N = mdp.num_states();
  const int A = mdp.num_actions();
  SampledFunctions out;
  out.values = Mat::Zero(N, n1 + n2);
  const double radius = std::sqrt(static_cast<double>(d));
  for (int f = 0; f < n1 + n2; ++f) {
    const bool first = f < n1;
    out.kind.push_back(first ? 1 : 2);
    Vec theta(d);
    Vec diag(d);
    if (first) {
      for (int i = 0; i < d; ++i) theta(i) = rng.normal();
      theta *= radius * std::pow(rng.uniform(), 1.0 / d) / theta.norm();
    } else {
      for (int i = 0; i < d; ++i) diag(i) = rng.uniform();
    }
    for (int s = 0; s < N; ++s) {
      double v = 0.0;
      for (int a = 0; a < A; ++a) {
        const double w = policy.prob(s, a);
        if (w == 0.0) continue;
        const auto phi = mdp.feature(s, a);
        v += w * (first ? clip(phi.dot(theta)) : std::sqrt(phi.cwiseAbs2().dot(diag)));
      }
      if (v < -1.0 - 1e-12 || v > 1.0 + 1e-12) throw std::logic_error("sampled function leaves [-1, 1]");
      out.values(s, f) = v;
    }
  }
  return out;
}

namespace {

RegressionData empty_data(const LinearMDP& mdp) {
  const int H = mdp.horizon();
  const int d = mdp.dim();
  RegressionData out;
  for (int h = 0; h < H; ++h) {
    out.gram.push_back(Mat::Zero(d, d));
    out.next_sums.push_back(h + 1 < H ? Mat::Zero(d, mdp.layer_size(h + 1)) : Mat::Zero(d, 0));
    out.count.push_back(0.0);
  }
  return out;
}

}  // namespace

void add_triple(RegressionData& data, const LinearMDP& mdp, int h, const Triple& t, double weight) {
  const auto phi = mdp.feature(t.state, t.action);
  data.gram[static_cast<std::size_t>(h)].noalias() += weight * phi * phi.transpose();
  if (t.next >= 0) data.next_sums[static_cast<std::size_t>(h)].col(t.next - mdp.layer_begin(h + 1)) += weight * phi;
  data.count[static_cast<std::size_t>(h)] += weight;
}

RegressionData regression_data(const LinearMDP& mdp, const std::vector<std::vector<Triple>>& datasets) {
  RegressionData out = empty_data(mdp);
  for (int h = 0; h < mdp.horizon(); ++h) {
    for (const Triple& t : datasets[static_cast<std::size_t>(h)]) add_triple(out, mdp, h, t);
  }
  return out;
}

RegressionData saturated_data(const LinearMDP& mdp, double n) {
  RegressionData out = empty_data(mdp);
  const int A = mdp.num_actions();
  for (int h = 0; h < mdp.horizon(); ++h) {
    for (int s = mdp.layer_begin(h); s < mdp.layer_end(h); ++s) {
      for (int a = 0; a < A; ++a) {
        if (h + 1 == mdp.horizon()) {
          add_triple(out, mdp, h, {s, a, -1}, n);
          continue;
        }
        const auto row = mdp.transitions(h).row((s - mdp.layer_begin(h)) * A + a);
        const auto phi = mdp.feature(s, a);
        out.gram[static_cast<std::size_t>(h)].noalias() += n * phi * phi.transpose();
        out.count[static_cast<std::size_t>(h)] += n;
        for (Eigen::Index j = 0; j < row.size(); ++j) out.next_sums[static_cast<std::size_t>(h)].col(j) += n * row(j) * phi;
      }
    }
  }
  return out;
}

LayerSolver::LayerSolver(const Mat& gram, double radius_) : radius(radius_) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (gram + gram.transpose()));
  vectors = es.eigenvectors();
  values = es.eigenvalues();
}

Vec LayerSolver::solve(const Vec& c) const {
  const Vec ct = vectors.transpose() * c;
  const double tol = 1e-12 * std::max(1.0, values.cwiseAbs().maxCoeff());
  Vec z = Vec::Zero(ct.size());
  for (Eigen::Index i = 0; i < ct.size(); ++i) {
    if (values(i) > tol) z(i) = ct(i) / values(i);
  }
  if (z.norm() <= radius) return vectors * z;
  // Secular equation ||z(lambda)|| = radius, Newton on 1/||z|| from lambda = 0.
  auto eval = [&](double lam, double& norm, double& deriv) {
    double n2 = 0.0, d3 = 0.0;
    for (Eigen::Index i = 0; i < ct.size(); ++i) {
      if (values(i) <= tol) continue;
      const double den = values(i) + lam;
      n2 += ct(i) * ct(i) / (den * den);
      d3 += ct(i) * ct(i) / (den * den * den);
    }
    norm = std::sqrt(n2);
    deriv = d3 / (norm * norm * norm);  // d/dlambda of 1/||z||
  };
  double lam = 0.0;
  for (int it = 0; it < 100; ++it) {
    double norm, deriv;
    eval(lam, norm, deriv);
    const double g = 1.0 / norm - 1.0 / radius;
    if (std::abs(g) * radius < 1e-15) break;
    const double step = -g / deriv;
    lam = std::max(lam + step, 0.5 * lam);
    if (std::abs(step) <= 1e-16 * std::max(1.0, lam)) break;
  }
  for (Eigen::Index i = 0; i < ct.size(); ++i) z(i) = values(i) > tol ? ct(i) / (values(i) + lam) : 0.0;
  // Guard the last ulp.
  const double n = z.norm();
  if (n > radius) z *= radius / n;
  return vectors * z;
}

std::vector<LayerSolver> layer_solvers(const LinearMDP& mdp, const RegressionData& data) {
  std::vector<LayerSolver> out;
  const double radius = std::sqrt(static_cast<double>(mdp.dim()));
  for (int h = 0; h < mdp.horizon(); ++h) out.emplace_back(data.gram[static_cast<std::size_t>(h)], radius);
  return out;
}

std::vector<std::vector<Vec>> estom_regressions(const LinearMDP& mdp, const std::vector<LayerSolver>& solvers,
                                                const RegressionData& data, const SampledFunctions& funcs) {
  const int H = mdp.horizon();
  const Eigen::Index F = funcs.values.cols();
  std::vector<std::vector<Vec>> xi(static_cast<std::size_t>(std::max(H - 1, 0)));
  for (int h = 0; h + 1 < H; ++h) {
    const Mat targets = data.next_sums[static_cast<std::size_t>(h)] *
                        funcs.values.middleRows(mdp.layer_begin(h + 1), mdp.layer_size(h + 1));
    for (Eigen::Index f = 0; f < F; ++f) xi[static_cast<std::size_t>(h)].push_back(solvers[static_cast<std::size_t>(h)].solve(targets.col(f)));
  }
  return xi;
}

double estom_residual(const LinearMDP& mdp, const Policy& policy, const Vec& f, const Vec& xi, int h, const Vec& mu) {
  double r = 0.0;
  for (int s = mdp.layer_begin(h + 1); s < mdp.layer_end(h + 1); ++s) r += mu(s) * f(s);
  for (int s = mdp.layer_begin(h); s < mdp.layer_end(h); ++s) {
    if (mu(s) == 0.0) continue;
    double c = 0.0;
    for (int a = 0; a < mdp.num_actions(); ++a) {
      if (policy.prob(s, a) != 0.0) c += policy.prob(s, a) * clip(mdp.feature(s, a).dot(xi));
    }
    r -= mu(s) * c;
  }
  return r;
}

namespace {

Vec uniform_occupancy(const LinearMDP& mdp) {
  Vec mu(mdp.num_states());
  for (int h = 0; h < mdp.horizon(); ++h) {
    mu.segment(mdp.layer_begin(h), mdp.layer_size(h)).setConstant(1.0 / mdp.layer_size(h));
  }
  return mu;
}

void normalize_layers(const LinearMDP& mdp, Vec& mu) {
  mu = mu.cwiseMax(0.0);
  for (int h = 0; h < mdp.horizon(); ++h) {
    auto seg = mu.segment(mdp.layer_begin(h), mdp.layer_size(h));
    const double total = seg.sum();
    if (total > 0.0) {
      seg /= total;
    } else {
      seg.setConstant(1.0 / mdp.layer_size(h));
    }
  }
}

}  // namespace

EstomSolution estom(const LinearMDP& mdp, const Policy& policy, const std::vector<LayerSolver>& solvers,
                    const RegressionData& data, const SampledFunctions& funcs, const EstomOptions& opts) {
  const int H = mdp.horizon();
  const int N = mdp.num_states();
  const int A = mdp.num_actions();
  const Eigen::Index F = funcs.values.cols();
  EstomSolution sol;
  sol.xi = estom_regressions(mdp, solvers, data, funcs);

  // Constraint rows a_i over states, i = (h, f).
  const Eigen::Index nc = static_cast<Eigen::Index>(std::max(H - 1, 0)) * F;
  Mat a = Mat::Zero(nc, N);
  for (int h = 0; h + 1 < H; ++h) {
    for (Eigen::Index f = 0; f < F; ++f) {
      const Eigen::Index i = h * F + f;
      a.row(i).segment(mdp.layer_begin(h + 1), mdp.layer_size(h + 1)) =
          funcs.values.col(f).segment(mdp.layer_begin(h + 1), mdp.layer_size(h + 1)).transpose();
      const Vec& xi = sol.xi[static_cast<std::size_t>(h)][static_cast<std::size_t>(f)];
      for (int s = mdp.layer_begin(h); s < mdp.layer_end(h); ++s) {
        double c = 0.0;
        for (int act = 0; act < A; ++act) {
          if (policy.prob(s, act) != 0.0) c += policy.prob(s, act) * clip(mdp.feature(s, act).dot(xi));
        }
        a(i, s) = -c;
      }
    }
  }

  // Dual of min sum_i max(0, |a_i mu| - zeta) over layerwise simplices:
  // max sum_h z_h - zeta sum_i (u_i + v_i), z_h(s) <= sum_i (u_i - v_i) a_i(s), 0 <= u, v <= 1.
  const double inf = std::numeric_limits<double>::infinity();
  const Eigen::Index n = 2 * nc + 2 * H;
  Mat lp(N, n);
  lp.leftCols(nc) = -a.transpose();
  lp.middleCols(nc, nc) = a.transpose();
  lp.rightCols(2 * H).setZero();
  for (int s = 0; s < N; ++s) {
    lp(s, 2 * nc + mdp.layer_of(s)) = 1.0;
    lp(s, 2 * nc + H + mdp.layer_of(s)) = -1.0;
  }
  Vec c(n), upper(n);
  c.head(2 * nc).setConstant(-opts.zeta);
  c.segment(2 * nc, H).setConstant(1.0);
  c.tail(H).setConstant(-1.0);
  upper.head(2 * nc).setConstant(1.0);
  upper.tail(2 * H).setConstant(inf);
  // A tiny distinct right-hand side breaks the degeneracy of b = 0; the dual
  // objective moves by at most H * 2e-9.
  Vec rhs(N);
  for (int s = 0; s < N; ++s) rhs(s) = 1e-9 * (1.0 + static_cast<double>(s) / N);
  const LpResult res = solve_lp(lp, rhs, c, upper);

  Vec mu;
  if (res.status == LpStatus::kOptimal) {
    mu = res.duals;
    const Vec r = a * mu;
    double primal = 0.0;
    for (Eigen::Index i = 0; i < nc; ++i) primal += std::max(0.0, std::abs(r(i)) - opts.zeta);
    bool layer_ok = mu.minCoeff() >= -1e-9;
    for (int h = 0; h < H && layer_ok; ++h) layer_ok = std::abs(mu.segment(mdp.layer_begin(h), mdp.layer_size(h)).sum() - 1.0) <= 1e-7;
    if (!layer_ok || std::abs(primal - res.objective) > 1e-7 * (1.0 + std::abs(primal))) sol.lp_failed = true;
  } else {
    sol.lp_failed = true;
  }

  if (sol.lp_failed) {
    sol.mu = uniform_occupancy(mdp);
    sol.status = "lp-failed";
  } else {
    normalize_layers(mdp, mu);
    const Vec r = a * mu;
    sol.max_violation = nc > 0 ? r.cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index i = 0; i < nc; ++i) sol.total_violation += std::max(0.0, std::abs(r(i)) - opts.zeta);
    sol.feasible = sol.max_violation <= opts.zeta + 1e-8;
    if (sol.feasible) {
      sol.mu = std::move(mu);
      sol.status = "feasible";
    } else if (opts.fallback == EstomFallback::kMinViolation) {
      sol.mu = std::move(mu);
      sol.status = "fallback-min-violation";
    } else {
      sol.mu = uniform_occupancy(mdp);
      sol.status = "fallback-uniform";
    }
  }
  return sol;
}

Vec feature_estimate(const LinearMDP& mdp, const Policy& policy, const Vec& mu) {
  const int d = mdp.dim();
  Vec out = Vec::Zero(static_cast<Eigen::Index>(d) * mdp.horizon());
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mu(s) == 0.0) continue;
    const int h = mdp.layer_of(s);
    for (int a = 0; a < mdp.num_actions(); ++a) {
      const double w = mu(s) * policy.prob(s, a);
      if (w != 0.0) out.segment(static_cast<Eigen::Index>(h) * d, d) += w * mdp.feature(s, a);
    }
  }
  return out;
}

}  // namespace linmdp
