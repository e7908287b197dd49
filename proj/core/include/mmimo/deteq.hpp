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

#pragma once

#include <vector>

#include "mmimo/channel.hpp"
#include "mmimo/common.hpp"

namespace mmimo {

/// Covariance of one column of a random M x B matrix: either scale * I_M
/// (`matrix` empty) or an explicit Hermitian matrix.
struct Covariance {
  double scale = 0.0;
  CMatrix matrix;

  static Covariance scaled(double c);
  static Covariance general(CMatrix m);
  bool is_scaled() const noexcept { return matrix.size() == 0; }
  CMatrix dense(int antennas) const;
};

struct FixedPointOptions {
  double tol = 1e-12;  // on max |delta(t) - delta(t-1)|, relative to max(1, |delta|)
  int max_iter = 10000;
};

/// Solution of delta_b = (1/M) tr(R_b T), T = ((1/M) sum_b R_b / (1 + delta_b) + rho I)^{-1}.
struct FixedPointResult {
  RVector delta;
  CMatrix T;              // dense resolvent; empty on the scaled path
  double t_scaled = 0.0;  // T = t_scaled * I on the scaled path
  bool scaled = false;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;

  /// (1/M) tr(T).
  double normalized_trace() const;
};

/// Derivative quantities for a perturbation Theta.
struct DerivativeResult {
  RVector delta_prime;
  CMatrix T_prime;        // empty on the scaled path
  double t_prime = 0.0;   // T' = t_prime * I on the scaled path
  bool scaled = false;
  RMatrix J;
  RVector v;

  double normalized_trace() const;
};

/// Uses the scalar path when every R_b is a scaled identity.
FixedPointResult solve_resolvent(const std::vector<Covariance>& R, double rho, int antennas,
                                 const FixedPointOptions& options = {});
FixedPointResult solve_resolvent_scaled(const RVector& r, double rho, int antennas,
                                        const FixedPointOptions& options = {});
FixedPointResult solve_resolvent_general(const std::vector<Covariance>& R, double rho,
                                         int antennas, const FixedPointOptions& options = {});

/// `base` must be the converged solution for the same (R, rho, M).
DerivativeResult solve_resolvent_derivative(const std::vector<Covariance>& R,
                                            const Covariance& theta, double rho,
                                            int antennas, const FixedPointResult& base);
DerivativeResult solve_resolvent_derivative_scaled(const RVector& r, double theta, int antennas,
                                                   const FixedPointResult& base);

/// Large-system quantities of the multi-cell MMSE scheme and the resulting
/// SINR approximations. Users are indexed u = l*K + k.
struct DetEqReport {
  int cells = 0;
  int users_per_cell = 0;
  int antennas = 0;
  RVector t;             // L: scalar resolvent per BS
  RVector t_dprime;      // L: derivative scalar for Theta = I
  RVector iterations;    // L: fixed-point iterations
  RMatrix delta;         // L x K
  RMatrix theta_dprime;  // L x K
  RMatrix theta;         // L x LK: theta(j, u)
  RMatrix theta_prime;   // LK x LK: row j*K+k, column u
  RMatrix mu;            // LK x LK: row j*K+k, column u
  RVector ul_sinr;       // LK, zero for inactive users
  RVector dl_sinr;       // LK, zero for inactive users

  double delta_of(int u) const { return delta(u / users_per_cell, u % users_per_cell); }
  double theta_dprime_of(int u) const {
    return theta_dprime(u / users_per_cell, u % users_per_cell);
  }
};

/// Fixed points, derivative terms and the uplink SINR approximation.
DetEqReport ul_sinr_approx(const UserDrop& drop, const PowerProfile& powers,
                           const EstimationStatistics& stats, const NetworkScenario& scenario,
                           const FixedPointOptions& options = {});

/// Fills report.dl_sinr from the quantities of ul_sinr_approx and powers.dl.
void dl_sinr_approx(DetEqReport& report, const UserDrop& drop, const PowerProfile& powers,
                    const NetworkScenario& scenario);

/// Both approximations from scratch.
DetEqReport deterministic_equivalents(const UserDrop& drop, const PowerProfile& powers,
                                      const NetworkScenario& scenario,
                                      const FixedPointOptions& options = {});

}  // namespace mmimo
