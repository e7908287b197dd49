/*
 * Copyright 2026 The mmimo Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mmimo/deteq.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mmimo {

namespace {

double converged_scale(const RVector& delta) {
  return std::max(1.0, delta.size() > 0 ? delta.cwiseAbs().maxCoeff() : 0.0);
}

void require_positive_rho(double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw ConfigError("fixed point requires a finite rho > 0");
  }
}

// Re tr(A B) without forming the product.
double trace_of_product(const CMatrix& a, const CMatrix& b) {
  return (a.transpose().cwiseProduct(b)).sum().real();
}

RVector solve_identity_minus(const RMatrix& J, const RVector& v) {
  const RMatrix a = RMatrix::Identity(J.rows(), J.cols()) - J;
  Eigen::FullPivLU<RMatrix> lu(a);
  if (!lu.isInvertible()) {
    throw ConvergenceError("I - J is singular", 0.0, 0);
  }
  return lu.solve(v);
}

}  // namespace

Covariance Covariance::scaled(double c) {
  Covariance out;
  out.scale = c;
  return out;
}

Covariance Covariance::general(CMatrix m) {
  Covariance out;
  out.matrix = std::move(m);
  return out;
}

CMatrix Covariance::dense(int antennas) const {
  if (!is_scaled()) return matrix;
  return CMatrix::Identity(antennas, antennas) * scale;
}

double FixedPointResult::normalized_trace() const {
  if (scaled) return t_scaled;
  return T.trace().real() / static_cast<double>(T.rows());
}

double DerivativeResult::normalized_trace() const {
  if (scaled) return t_prime;
  return T_prime.trace().real() / static_cast<double>(T_prime.rows());
}

FixedPointResult solve_resolvent_scaled(const RVector& r, double rho, int antennas,
                                        const FixedPointOptions& options) {
  require_positive_rho(rho);
  const double M = antennas;
  FixedPointResult res;
  res.scaled = true;
  RVector delta = RVector::Constant(r.size(), 1.0 / rho);
  for (int it = 1; it <= options.max_iter; ++it) {
    const double t = 1.0 / ((r.array() / (1.0 + delta.array())).sum() / M + rho);
    const RVector next = r * t;
    const double residual = r.size() > 0 ? (next - delta).cwiseAbs().maxCoeff() : 0.0;
    res.residual_history.push_back(residual);
    delta = next;
    if (residual <= options.tol * converged_scale(delta)) {
      res.delta = delta;
      res.t_scaled = 1.0 / ((r.array() / (1.0 + delta.array())).sum() / M + rho);
      res.iterations = it;
      res.residual = residual;
      return res;
    }
  }
  throw ConvergenceError("resolvent fixed point did not converge",
                         res.residual_history.back(), options.max_iter);
}

FixedPointResult solve_resolvent_general(const std::vector<Covariance>& R, double rho,
                                         int antennas, const FixedPointOptions& options) {
  require_positive_rho(rho);
  const int B = static_cast<int>(R.size());
  const double M = antennas;
  std::vector<CMatrix> dense;
  dense.reserve(B);
  for (const auto& c : R) dense.push_back(c.dense(antennas));

  auto resolvent = [&](const RVector& delta) {
    CMatrix a = CMatrix::Identity(antennas, antennas) * rho;
    for (int b = 0; b < B; ++b) a += dense[b] / (M * (1.0 + delta(b)));
    Eigen::LLT<CMatrix> llt(a);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("resolvent argument is not positive definite");
    }
    return CMatrix(llt.solve(CMatrix::Identity(antennas, antennas)));
  };

  FixedPointResult res;
  RVector delta = RVector::Constant(B, 1.0 / rho);
  for (int it = 1; it <= options.max_iter; ++it) {
    const CMatrix T = resolvent(delta);
    RVector next(B);
    for (int b = 0; b < B; ++b) next(b) = trace_of_product(dense[b], T) / M;
    const double residual = B > 0 ? (next - delta).cwiseAbs().maxCoeff() : 0.0;
    res.residual_history.push_back(residual);
    delta = next;
    if (residual <= options.tol * converged_scale(delta)) {
      res.delta = delta;
      res.T = resolvent(delta);
      res.iterations = it;
      res.residual = residual;
      return res;
    }
  }
  throw ConvergenceError("resolvent fixed point did not converge",
                         res.residual_history.back(), options.max_iter);
}

FixedPointResult solve_resolvent(const std::vector<Covariance>& R, double rho, int antennas,
                                 const FixedPointOptions& options) {
  const bool all_scaled =
      std::all_of(R.begin(), R.end(), [](const Covariance& c) { return c.is_scaled(); });
  if (!all_scaled) return solve_resolvent_general(R, rho, antennas, options);
  RVector r(R.size());
  for (std::size_t b = 0; b < R.size(); ++b) r(b) = R[b].scale;
  return solve_resolvent_scaled(r, rho, antennas, options);
}

DerivativeResult solve_resolvent_derivative_scaled(const RVector& r, double theta,
                                                   int antennas, const FixedPointResult& base) {
  if (!base.scaled) throw ConfigError("scaled derivative needs a scaled fixed point");
  const double M = antennas;
  const double t = base.t_scaled;
  const RVector& delta = base.delta;
  const int B = static_cast<int>(r.size());

  DerivativeResult out;
  out.scaled = true;
  out.J.resize(B, B);
  for (int b = 0; b < B; ++b) {
    for (int l = 0; l < B; ++l) {
      out.J(b, l) = r(b) * r(l) * t * t / (M * (1.0 + delta(l)) * (1.0 + delta(l)));
    }
  }
  out.v = r * (theta * t * t);
  out.delta_prime = solve_identity_minus(out.J, out.v);
  const double sum =
      (r.array() * out.delta_prime.array() / (1.0 + delta.array()).square()).sum() / M;
  out.t_prime = theta * t * t + t * t * sum;
  return out;
}

DerivativeResult solve_resolvent_derivative(const std::vector<Covariance>& R,
                                            const Covariance& theta, double rho,
                                            int antennas, const FixedPointResult& base) {
  require_positive_rho(rho);
  const int B = static_cast<int>(R.size());
  if (base.scaled && theta.is_scaled()) {
    RVector r(B);
    for (int b = 0; b < B; ++b) {
      if (!R[b].is_scaled()) throw ConfigError("mixed covariance descriptors");
      r(b) = R[b].scale;
    }
    return solve_resolvent_derivative_scaled(r, theta.scale, antennas, base);
  }

  const double M = antennas;
  const CMatrix T = base.scaled ? CMatrix(CMatrix::Identity(antennas, antennas) * base.t_scaled)
                                : base.T;
  const CMatrix th = theta.dense(antennas);
  std::vector<CMatrix> rt(B);  // R_b T
  for (int b = 0; b < B; ++b) rt[b] = R[b].dense(antennas) * T;
  const CMatrix tht = T * th * T;

  DerivativeResult out;
  out.J.resize(B, B);
  out.v.resize(B);
  for (int b = 0; b < B; ++b) {
    for (int l = 0; l < B; ++l) {
      const double d = 1.0 + base.delta(l);
      out.J(b, l) = trace_of_product(rt[b], rt[l]) / M / (M * d * d);
    }
    out.v(b) = trace_of_product(R[b].dense(antennas), tht) / M;
  }
  out.delta_prime = solve_identity_minus(out.J, out.v);
  CMatrix middle = CMatrix::Zero(antennas, antennas);
  for (int b = 0; b < B; ++b) {
    const double d = 1.0 + base.delta(b);
    middle += R[b].dense(antennas) * (out.delta_prime(b) / (M * d * d));
  }
  out.T_prime = tht + T * middle * T;
  return out;
}

DetEqReport ul_sinr_approx(const UserDrop& drop, const PowerProfile& powers,
                           const EstimationStatistics& stats, const NetworkScenario& scenario,
                           const FixedPointOptions& options) {
  const int L = drop.cells;
  const int K = drop.users_per_cell;
  const int LK = drop.total_users();
  const int B = stats.pilot_length;
  const int M = scenario.antennas;
  const double sigma2 = scenario.noise_power;

  DetEqReport rep;
  rep.cells = L;
  rep.users_per_cell = K;
  rep.antennas = M;
  rep.t.resize(L);
  rep.t_dprime.resize(L);
  rep.iterations.resize(L);
  rep.delta.resize(L, K);
  rep.theta_dprime.resize(L, K);
  rep.theta.resize(L, LK);
  rep.theta_prime.resize(LK, LK);
  rep.mu.resize(LK, LK);

  // Per-pilot variance of the estimated directions, alpha_jb * B.
  const RMatrix phi_tilde = stats.alpha * static_cast<double>(B);

  for (int j = 0; j < L; ++j) {
    const RVector r = (stats.lambda.row(j).array() * phi_tilde.row(j).array()).transpose();
    const double rho = (sigma2 + stats.phi(j)) / M;
    const FixedPointResult fp = solve_resolvent_scaled(r, rho, M, options);
    // T' is linear in Theta, so Theta = I gives every derivative term needed.
    const DerivativeResult dp = solve_resolvent_derivative_scaled(r, 1.0, M, fp);
    rep.t(j) = fp.t_scaled;
    rep.t_dprime(j) = dp.t_prime;
    rep.iterations(j) = fp.iterations;

    for (int u = 0; u < LK; ++u) rep.theta(j, u) = phi_tilde(j, drop.pilot_index[u]) * fp.t_scaled;
    for (int k = 0; k < K; ++k) {
      const int jk = j * K + k;
      const double own = phi_tilde(j, drop.pilot_index[jk]);
      rep.delta(j, k) = own * fp.t_scaled;
      rep.theta_dprime(j, k) = own * dp.t_prime;
      const double t_prime_jk = own * dp.t_prime;  // (1/M) tr(T'_jk)
      for (int u = 0; u < LK; ++u) {
        const int b = drop.pilot_index[u];
        const double th_p = phi_tilde(j, b) * t_prime_jk;
        const double th = rep.theta(j, u);
        const double lam = stats.lambda(j, b);
        const double x = lam * th;
        rep.theta_prime(jk, u) = th_p;
        rep.mu(jk, u) = t_prime_jk - powers.pilot(u) * drop.gains(j, u) * lam * th_p * th *
                                         (2.0 + x) / ((1.0 + x) * (1.0 + x));
      }
    }
  }

  rep.ul_sinr = RVector::Zero(LK);
  for (int u = 0; u < LK; ++u) {
    if (!drop.active[u]) continue;
    const int j = drop.serving_cell(u);
    const int k = drop.user_in_cell(u);
    const double d = drop.gains(j, u);
    const double delta2 = rep.delta(j, k) * rep.delta(j, k);
    double same = 0.0;
    double other = 0.0;
    for (int v = 0; v < LK; ++v) {
      if (v == u || powers.ul(v) == 0.0) continue;
      const double dv = drop.gains(j, v);
      if (drop.pilot_index[v] == drop.pilot_index[u]) {
        same += powers.ul(v) * powers.pilot(v) * dv * dv;
      } else {
        other += powers.ul(v) * dv * rep.mu(u, v);
      }
    }
    const double num = powers.ul(u) * powers.pilot(u) * d * d * delta2;
    const double den = delta2 * same + other / M + sigma2 / M * rep.theta_dprime(j, k);
    rep.ul_sinr(u) = num / den;
  }
  return rep;
}

void dl_sinr_approx(DetEqReport& report, const UserDrop& drop, const PowerProfile& powers,
                    const NetworkScenario& scenario) {
  const int LK = drop.total_users();
  const double M = scenario.antennas;
  if (report.mu.rows() != LK || report.delta.size() == 0) {
    throw ConfigError("deterministic-equivalent report is incomplete");
  }
  report.dl_sinr = RVector::Zero(LK);
  for (int u = 0; u < LK; ++u) {
    if (!drop.active[u]) continue;
    const int j = drop.serving_cell(u);
    const double d = drop.gains(j, u);
    double same = 0.0;
    double other = 0.0;
    for (int v = 0; v < LK; ++v) {
      if (v == u || powers.dl(v) == 0.0) continue;
      const int l = drop.serving_cell(v);
      const double dl = drop.gains(l, u);
      const double thdd = report.theta_dprime_of(v);
      if (drop.pilot_index[v] == drop.pilot_index[u]) {
        const double dv = report.delta_of(v);
        same += powers.dl(v) * dl * dl * dv * dv / thdd;
      } else {
        other += powers.dl(v) * dl * report.mu(v, u) / (M * thdd);
      }
    }
    const double du = report.delta_of(u);
    const double num = powers.dl(u) * powers.pilot(u) * d * d * du * du / report.theta_dprime_of(u);
    const double den = powers.pilot(u) * same + other + scenario.noise_power / M;
    report.dl_sinr(u) = num / den;
  }
}

DetEqReport deterministic_equivalents(const UserDrop& drop, const PowerProfile& powers,
                                      const NetworkScenario& scenario,
                                      const FixedPointOptions& options) {
  const EstimationStatistics stats = compute_estimation_statistics(drop, powers, scenario);
  DetEqReport rep = ul_sinr_approx(drop, powers, stats, scenario, options);
  dl_sinr_approx(rep, drop, powers, scenario);
  return rep;
}

}  // namespace mmimo
