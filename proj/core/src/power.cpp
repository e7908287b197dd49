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

#include "mmimo/power.hpp"

#include <cmath>
#include <string>

namespace mmimo {

PowerProfile channel_inversion_powers(const UserDrop& drop, double rho) {
  if (!(rho >= 0.0)) throw ConfigError("rho must be non-negative");
  const int LK = drop.total_users();
  PowerProfile p = PowerProfile::zeros(LK);
  for (int u = 0; u < LK; ++u) {
    if (!drop.active[u]) continue;
    const double d = drop.serving_gain(u);
    if (!(d > 0.0)) throw ConfigError("serving gain must be positive");
    p.pilot(u) = rho / d;
    p.ul(u) = rho / d;
  }
  return p;
}

PowerProfile equal_payload_powers(const UserDrop& drop, double pilot_rho, double p_max) {
  if (!(p_max > 0.0)) throw ConfigError("P_max must be positive");
  PowerProfile p = channel_inversion_powers(drop, pilot_rho);
  for (int u = 0; u < drop.total_users(); ++u) {
    if (drop.active[u]) p.ul(u) = p_max;
  }
  return p;
}

double pmax_from_edge_snr(const NetworkScenario& scenario, double edge_snr_db) {
  return std::pow(10.0, edge_snr_db / 10.0) * scenario.noise_power *
         std::pow(scenario.cell_radius_m, scenario.pathloss_exponent);
}

RVector DualitySystem::uplink_sinr(const RVector& tau) const {
  const RVector interference = (F * tau).array() + noise_term;
  return (tau.array() * D.array() / interference.array()).matrix();
}

RVector DualitySystem::downlink_sinr(const RVector& varrho) const {
  const RVector interference = (F.transpose() * varrho).array() + noise_term;
  return (varrho.array() * D.array() / interference.array()).matrix();
}

RVector DualitySystem::restrict(const RVector& full) const {
  RVector out(size());
  for (int i = 0; i < size(); ++i) out(i) = full(users[i]);
  return out;
}

RVector DualitySystem::expand(const RVector& local, int total_users) const {
  RVector out = RVector::Zero(total_users);
  for (int i = 0; i < size(); ++i) out(users[i]) = local(i);
  return out;
}

DualitySystem build_duality_system(const DetEqReport& report, const UserDrop& drop,
                                   const PowerProfile& powers, const NetworkScenario& scenario) {
  const int LK = drop.total_users();
  if (report.mu.rows() != LK || report.delta.size() == 0) {
    throw ConfigError("deterministic-equivalent report is incomplete");
  }
  const double M = scenario.antennas;
  DualitySystem sys;
  for (int u = 0; u < LK; ++u) {
    if (drop.active[u]) sys.users.push_back(u);
  }
  const int n = sys.size();
  sys.noise_term = scenario.noise_power / M;
  sys.D.resize(n);
  sys.F = RMatrix::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    const int u = sys.users[a];
    const int j = drop.serving_cell(u);
    const double du = report.delta_of(u);
    const double thdd = report.theta_dprime_of(u);
    const double d = drop.gains(j, u);
    sys.D(a) = powers.pilot(u) * d * d * du * du / thdd;
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      const int v = sys.users[b];
      const double dv = drop.gains(j, v);
      if (drop.pilot_index[v] == drop.pilot_index[u]) {
        sys.F(a, b) = du * du * powers.pilot(v) * dv * dv / thdd;
      } else {
        sys.F(a, b) = dv * report.mu(u, v) / (M * thdd);
      }
    }
  }
  sys.psi = sys.uplink_sinr(sys.restrict(powers.ul));
  return sys;
}

RVector uplink_to_downlink(const DualitySystem& sys, const RVector& tau) {
  const int n = sys.size();
  if (tau.size() != n) throw ConfigError("power vector size does not match the system");
  const RVector psi = sys.uplink_sinr(tau);
  const RMatrix a = RMatrix(sys.D.asDiagonal()) - psi.asDiagonal() * sys.F.transpose();
  Eigen::FullPivLU<RMatrix> lu(a);
  if (!lu.isInvertible()) {
    throw InfeasibleError("duality system D - Psi F^T is singular");
  }
  const RVector varrho = sys.noise_term * lu.solve(psi);
  for (int i = 0; i < n; ++i) {
    if (!(varrho(i) >= 0.0) || !std::isfinite(varrho(i))) {
      throw InfeasibleError("duality transform produced power " + std::to_string(varrho(i)) +
                            " for user " + std::to_string(sys.users[i]));
    }
  }
  return varrho;
}

PowerProfile with_dual_downlink(const UserDrop& drop, PowerProfile powers,
                                const NetworkScenario& scenario) {
  const DetEqReport rep = deterministic_equivalents(drop, powers, scenario);
  const DualitySystem sys = build_duality_system(rep, drop, powers, scenario);
  powers.dl = sys.expand(uplink_to_downlink(sys, sys.restrict(powers.ul)), drop.total_users());
  return powers;
}

RVector fixed_point_update(const DualitySystem& sys, const RVector& tau, const RVector& weights,
                           double p_max) {
  const int n = sys.size();
  // r_j / (D_j tau_j) = 1 / (interference + noise) of user j.
  const RVector inv_interference =
      ((sys.F * tau).array() + sys.noise_term).inverse().matrix();
  const RVector w = weights.cwiseProduct(inv_interference);
  const RVector denom = sys.F.transpose() * w;
  RVector next(n);
  for (int l = 0; l < n; ++l) {
    next(l) = denom(l) > 0.0 ? std::min(weights(l) / denom(l), p_max) : p_max;
  }
  return next;
}

double surrogate_objective(const RVector& sinr, const RVector& weights) {
  return (weights.array() * sinr.array().log()).sum() / std::log(2.0);
}

double true_objective(const RVector& sinr, const RVector& weights) {
  return (weights.array() * sinr.array().log1p()).sum() / std::log(2.0);
}

PowerControlResult sum_se_power_control(const UserDrop& drop, const NetworkScenario& scenario,
                                        const PowerProfile& initial, const RVector& weights,
                                        double p_max, const PowerControlOptions& options) {
  if (!(p_max > 0.0)) throw ConfigError("P_max must be positive");
  if (!(options.eps > 0.0)) throw ConfigError("eps must be positive");
  const int LK = drop.total_users();
  if (weights.size() != LK) throw ConfigError("one weight per user is required");

  PowerProfile powers = initial;
  for (int u = 0; u < LK; ++u) powers.ul(u) = drop.active[u] ? p_max : 0.0;
  powers.dl.setZero();

  PowerControlResult result;
  auto& trace = result.trace;
  double previous = 0.0;
  for (int outer = 0; outer < options.max_outer; ++outer) {
    const EstimationStatistics stats = compute_estimation_statistics(drop, powers, scenario);
    const DetEqReport rep = ul_sinr_approx(drop, powers, stats, scenario, options.fixed_point);
    const DualitySystem sys = build_duality_system(rep, drop, powers, scenario);
    const RVector xi = sys.restrict(weights);
    if ((xi.array() <= 0.0).any()) throw ConfigError("weights must be positive");

    RVector tau = sys.restrict(powers.ul);
    RVector r = sys.uplink_sinr(tau);
    double objective = surrogate_objective(r, xi);
    trace.push_back({outer, 0, objective, true_objective(r, xi)});

    if (outer > 0 && std::abs(objective - previous) <= options.eps) {
      result.outer_iterations = outer;
      result.report = rep;
      break;
    }
    previous = objective;

    bool inner_done = false;
    for (int inner = 1; inner <= options.max_inner; ++inner) {
      const RVector next = fixed_point_update(sys, tau, xi, p_max);
      const RVector r_next = sys.uplink_sinr(next);
      const double obj_next = surrogate_objective(r_next, xi);
      trace.push_back({outer, inner, obj_next, true_objective(r_next, xi)});
      if (obj_next < objective - options.monotone_rel_tol * std::max(1.0, std::abs(objective))) {
        throw NumericalError("inner fixed-point objective decreased at outer iteration " +
                             std::to_string(outer));
      }
      const bool converged = std::abs(obj_next - objective) <= options.eps;
      tau = next;
      objective = obj_next;
      if (converged) {
        inner_done = true;
        break;
      }
    }
    if (!inner_done) {
      throw PowerControlError("inner fixed point did not converge", 0.0, options.max_inner,
                              trace);
    }
    powers.ul = sys.expand(tau, LK);
    if (outer + 1 == options.max_outer) {
      throw PowerControlError("outer power-control loop did not converge",
                              std::abs(objective - previous), options.max_outer, trace);
    }
  }

  const DetEqReport final_rep = deterministic_equivalents(drop, powers, scenario,
                                                          options.fixed_point);
  const DualitySystem sys = build_duality_system(final_rep, drop, powers, scenario);
  powers.dl = sys.expand(uplink_to_downlink(sys, sys.restrict(powers.ul)), LK);
  result.powers = powers;
  result.report = final_rep;
  dl_sinr_approx(result.report, drop, powers, scenario);
  return result;
}

}  // namespace mmimo
