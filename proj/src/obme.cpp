#include "linmdp/obme.hpp"

#include <cmath>
#include <stdexcept>

#include "linmdp/gram.hpp"

namespace linmdp {

double b_max(int h, int H, double beta, double gamma, double alpha, double rho) {
  if (h < 0 || h >= H) throw std::invalid_argument("b_max: layer out of range");
  return 4.0 * H * std::pow(1.0 + 1.0 / H, 2.0 * (H - h)) * (beta / gamma + alpha * rho * rho);
}

double c_iota(int d, double K, double delta) { return 15.0 * std::sqrt(std::log(12.0 * d * K / delta)); }

DatasetStats dataset_stats(const LinearMDP& mdp, const std::vector<std::vector<Triple>>& datasets) {
  const int H = mdp.horizon();
  const int d = mdp.dim();
  DatasetStats out;
  for (int h = 0; h < H; ++h) {
    Mat gram = Mat::Identity(d, d);
    Mat sums = h + 1 < H ? Mat::Zero(d, mdp.layer_size(h + 1)) : Mat::Zero(d, 0);
    for (const Triple& t : datasets[static_cast<std::size_t>(h)]) {
      const auto phi = mdp.feature(t.state, t.action);
      gram.noalias() += phi * phi.transpose();
      if (h + 1 < H && t.next >= 0) sums.col(t.next - mdp.layer_begin(h + 1)) += phi;
    }
    out.lambda_inv.push_back(spd_inverse(gram));
    out.next_sums.push_back(std::move(sums));
  }
  return out;
}

ObmeResult obme(const LinearMDP& mdp, const DatasetStats& data, const std::vector<Mat>& sigma_inv,
                const std::vector<char>& is_known, const Policy& policy, const BonusParams& params) {
  const int H = mdp.horizon();
  const int d = mdp.dim();
  const int A = mdp.num_actions();
  if (static_cast<int>(data.lambda_inv.size()) != H || static_cast<int>(sigma_inv.size()) != H) {
    throw std::invalid_argument("obme: need one Gram and covariance matrix per layer");
  }
  if (static_cast<int>(is_known.size()) != mdp.num_states()) throw std::invalid_argument("obme: known set undefined");
  ObmeResult out;
  out.w_hat.assign(static_cast<std::size_t>(H), Vec::Zero(d));
  out.matrices.resize(static_cast<std::size_t>(H));
  out.bonus = Mat::Zero(mdp.num_states(), A);
  out.state_bonus = Vec::Zero(mdp.num_states());
  const double dilation = 1.0 + 1.0 / H;
  for (int h = H - 1; h >= 0; --h) {
    const auto hi = static_cast<std::size_t>(h);
    const Mat& lam_inv = data.lambda_inv[hi];
    Vec& w = out.w_hat[hi];
    if (h + 1 < H) {
      Vec target = Vec::Zero(d);
      const int base = mdp.layer_begin(h + 1);
      for (int j = 0; j < mdp.layer_size(h + 1); ++j) {
        if (is_known[static_cast<std::size_t>(base + j)]) target += data.next_sums[hi].col(j) * out.state_bonus(base + j);
      }
      w = dilation * (lam_inv * target);
    }
    const Mat top = params.beta * sigma_inv[hi] + params.alpha * lam_inv;
    Mat& m = out.matrices[hi];
    m = Mat::Zero(d + 1, d + 1);
    m.topLeftCorner(d, d) = top;
    m.col(d).head(d) = 0.5 * w;
    m.row(d).head(d) = 0.5 * w.transpose();
    for (int s = mdp.layer_begin(h); s < mdp.layer_end(h); ++s) {
      double ws = 0.0;
      for (int a = 0; a < A; ++a) {
        const auto phi = mdp.feature(s, a);
        const double b = phi.dot(top * phi) + phi.dot(w);
        out.bonus(s, a) = b;
        if (b < 0.0) ++out.clipped;
        ws += policy.prob(s, a) * std::max(b, 0.0);
      }
      out.state_bonus(s) = ws;
    }
  }
  return out;
}

ShadowBonus shadow_bonus(const LinearMDP& mdp, const Policy& policy, const std::vector<Mat>& sigma_inv,
                         const std::vector<Mat>& lambda_inv, const Vec& state_bonus,
                         const std::vector<char>& is_known, const BonusParams& params) {
  (void)policy;
  const int H = mdp.horizon();
  const int d = mdp.dim();
  const int A = mdp.num_actions();
  ShadowBonus out;
  out.b = Mat::Zero(mdp.num_states(), A);
  out.B = Mat::Zero(mdp.num_states(), A);
  out.w.assign(static_cast<std::size_t>(H), Vec::Zero(d));
  const double dilation = 1.0 + 1.0 / H;
  for (int h = 0; h < H; ++h) {
    const auto hi = static_cast<std::size_t>(h);
    if (h + 1 < H) {
      for (int s = mdp.layer_begin(h + 1); s < mdp.layer_end(h + 1); ++s) {
        if (is_known[static_cast<std::size_t>(s)]) out.w[hi] += mdp.psi(s) * state_bonus(s);
      }
      out.w[hi] *= dilation;
    }
    for (int s = mdp.layer_begin(h); s < mdp.layer_end(h); ++s) {
      for (int a = 0; a < A; ++a) {
        const auto phi = mdp.feature(s, a);
        out.b(s, a) = params.beta * phi.dot(sigma_inv[hi] * phi) +
                      (1.0 - 1.0 / (4.0 * H)) * params.alpha * phi.dot(lambda_inv[hi] * phi);
        out.B(s, a) = out.b(s, a) + phi.dot(out.w[hi]);
      }
    }
  }
  return out;
}

void BonusDiagnostics::merge(const BonusDiagnostics& o) {
  dilated_checks += o.dilated_checks;
  dilated_violations += o.dilated_violations;
  bound_checks += o.bound_checks;
  bound_violations += o.bound_violations;
  w_norm_checks += o.w_norm_checks;
  w_norm_violations += o.w_norm_violations;
  max_abs_bonus = std::max(max_abs_bonus, o.max_abs_bonus);
  dilated_slack = o.dilated_slack;
}

BonusDiagnostics bonus_diagnostics(const LinearMDP& mdp, const Policy& policy, const ObmeResult& est,
                                   const ShadowBonus& shadow, const std::vector<char>& is_known,
                                   const BonusParams& params, double c_iota_value) {
  const int H = mdp.horizon();
  const int A = mdp.num_actions();
  const double sqrt_d = std::sqrt(static_cast<double>(mdp.dim()));
  const double bmax_all = b_max(0, H, params.beta, params.gamma, params.alpha, params.rho);
  BonusDiagnostics out;
  const double scale = c_iota_value * mdp.dim() * bmax_all;
  out.dilated_slack = params.alpha > 0.0 ? scale * scale / params.alpha : 0.0;
  const double dilation = 1.0 + 1.0 / H;
  out.max_abs_bonus = est.bonus.cwiseAbs().maxCoeff();
  for (int h = 0; h < H; ++h) {
    const double bmax_h = b_max(h, H, params.beta, params.gamma, params.alpha, params.rho);
    ++out.w_norm_checks;
    if (shadow.w[static_cast<std::size_t>(h)].norm() > sqrt_d * bmax_h) ++out.w_norm_violations;
    for (int s = mdp.layer_begin(h); s < mdp.layer_end(h); ++s) {
      for (int a = 0; a < A; ++a) {
        double next = 0.0;
        if (h + 1 < H) {
          const auto row = mdp.transitions(h).row((s - mdp.layer_begin(h)) * A + a);
          for (int j = 0; j < mdp.layer_size(h + 1); ++j) {
            const int sp = mdp.layer_begin(h + 1) + j;
            if (!is_known[static_cast<std::size_t>(sp)] || row(j) == 0.0) continue;
            next += row(j) * policy.row(sp).dot(shadow.B.row(sp));
          }
        }
        ++out.dilated_checks;
        if (shadow.B(s, a) < shadow.b(s, a) + dilation * next - out.dilated_slack) ++out.dilated_violations;
        if (is_known[static_cast<std::size_t>(s)]) {
          ++out.bound_checks;
          const double v = std::abs(mdp.feature(s, a).dot(est.w_hat[static_cast<std::size_t>(h)]));
          if (v > (1.0 + 1.0 / (2.0 * H)) * bmax_h) ++out.bound_violations;
        }
      }
    }
  }
  return out;
}

}  // namespace linmdp
