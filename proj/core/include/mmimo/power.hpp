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

#include <string>
#include <vector>

#include "mmimo/channel.hpp"
#include "mmimo/deteq.hpp"

namespace mmimo {

/// Pilot and uplink payload power rho / d_l(z_u); downlink left at zero.
PowerProfile channel_inversion_powers(const UserDrop& drop, double rho);

/// Pilots by channel inversion with `pilot_rho`, every uplink payload at p_max.
PowerProfile equal_payload_powers(const UserDrop& drop, double pilot_rho, double p_max);

/// Maximum power giving the requested shadowless SNR at the cell edge.
double pmax_from_edge_snr(const NetworkScenario& scenario, double edge_snr_db);

/// Linear model r = tau .* D / (F tau + noise_term) of the approximate uplink
/// SINRs, restricted to the active users (local index i <-> users[i]).
struct DualitySystem {
  std::vector<int> users;
  RVector D;
  RMatrix F;          // row: interference received by that user
  RVector psi;        // SINRs achieved by the uplink powers the system was built with
  double noise_term = 0.0;  // sigma^2 / M

  int size() const noexcept { return static_cast<int>(users.size()); }
  /// Uplink SINRs for local powers tau.
  RVector uplink_sinr(const RVector& tau) const;
  /// Downlink SINRs for local powers varrho.
  RVector downlink_sinr(const RVector& varrho) const;
  /// Local vector from a full per-user vector.
  RVector restrict(const RVector& full) const;
  /// Full per-user vector (zeros for inactive users) from a local vector.
  RVector expand(const RVector& local, int total_users) const;
};

DualitySystem build_duality_system(const DetEqReport& report, const UserDrop& drop,
                                   const PowerProfile& powers, const NetworkScenario& scenario);

/// Downlink powers reaching the uplink SINRs sys.psi; local indexing.
RVector uplink_to_downlink(const DualitySystem& sys, const RVector& tau);

/// Fills powers.dl by the duality transform of powers.ul.
PowerProfile with_dual_downlink(const UserDrop& drop, PowerProfile powers,
                                const NetworkScenario& scenario);

/// One fixed-point step for fixed (F, D); local indexing.
RVector fixed_point_update(const DualitySystem& sys, const RVector& tau, const RVector& weights,
                           double p_max);

/// Weighted sum of log2(r) and log2(1 + r).
double surrogate_objective(const RVector& sinr, const RVector& weights);
double true_objective(const RVector& sinr, const RVector& weights);

struct PowerControlOptions {
  double eps = 1e-4;
  int max_outer = 100;
  int max_inner = 500;
  // Slack for floating-point rounding in the inner-loop monotonicity check.
  double monotone_rel_tol = 1e-12;
  FixedPointOptions fixed_point;
};

struct TraceRow {
  int outer_iter = 0;
  int inner_iter = 0;
  double r_surrogate = 0.0;
  double r_true = 0.0;
};

struct PowerControlResult {
  PowerProfile powers;  // pilot unchanged, ul optimized, dl from the duality transform
  std::vector<TraceRow> trace;
  int outer_iterations = 0;
  DetEqReport report;  // at the final powers
};

class PowerControlError : public ConvergenceError {
 public:
  PowerControlError(const std::string& what, double residual, int iterations,
                    std::vector<TraceRow> trace)
      : ConvergenceError(what, residual, iterations), trace_(std::move(trace)) {}
  const std::vector<TraceRow>& trace() const noexcept { return trace_; }

 private:
  std::vector<TraceRow> trace_;
};

/// Weighted sum-SE power control over the uplink payload powers. `initial`
/// provides the pilot powers; `weights` is per user (inactive entries ignored).
PowerControlResult sum_se_power_control(const UserDrop& drop, const NetworkScenario& scenario,
                                        const PowerProfile& initial, const RVector& weights,
                                        double p_max, const PowerControlOptions& options = {});

}  // namespace mmimo
