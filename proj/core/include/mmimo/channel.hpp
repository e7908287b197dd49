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

#include <cstdint>
#include <vector>

#include "mmimo/common.hpp"
#include "mmimo/topology.hpp"

namespace mmimo {

/// Per-user transmit powers, indexed like UserDrop (u = l*K + k).
struct PowerProfile {
  RVector pilot;  // p_u
  RVector ul;     // tau_u, uplink payload
  RVector dl;     // varrho_u, downlink payload

  static PowerProfile zeros(int total_users);

  /// Throws ConfigError unless every entry is finite and non-negative and
  /// inactive users carry zero power.
  void validate(const UserDrop& drop) const;
};

/// Pilot-domain quantities seen at every BS.
struct EstimationStatistics {
  RMatrix alpha;          // L x B: 1 / (B * sum p d_j + sigma^2) over users of pilot b
  RMatrix lambda;         // L x B: sum tau p d_j^2 over users of pilot b
  RVector phi;            // L: sum tau * error variance
  RMatrix phi_hat_coeff;  // L x LK: variance of the estimate, p d^2 alpha B
  RMatrix err_coeff;      // L x LK: variance of the error, d - phi_hat_coeff
  int pilot_length = 0;
  double noise_power = 0.0;
};

EstimationStatistics compute_estimation_statistics(const UserDrop& drop,
                                                   const PowerProfile& powers,
                                                   const NetworkScenario& scenario);

struct ChannelRealization {
  // h[j] is M x LK; column u is the channel from user u to BS j.
  std::vector<CMatrix> h;
};

ChannelRealization generate_channels(const UserDrop& drop, int antennas,
                                     std::uint64_t seed);

struct ChannelEstimate {
  // directions[j] is the M x B matrix of per-pilot estimated directions;
  // the estimate of user u at BS j is sqrt(p_u) d_j(z_u) directions[j].col(i_u).
  std::vector<CMatrix> directions;
  // Filled only when estimated from an explicit realization.
  std::vector<CMatrix> estimates;  // M x LK per BS
  std::vector<CMatrix> errors;     // h - estimate, M x LK per BS
};

/// Orthogonal pilot book: column b is v_b with v_a^H v_b = B * [a == b].
CMatrix pilot_book(int pilot_length);

/// Received pilot signal Y_j = sum_u sqrt(p_u) h_ju v_{i_u}^T + N_j.
CMatrix received_pilot_signal(const CMatrix& h_j, const UserDrop& drop,
                              const PowerProfile& powers, const CMatrix& book,
                              const CMatrix& noise);

/// MMSE estimation from explicitly formed pilot observations with fresh
/// CN(0, sigma^2) noise drawn from `seed`.
ChannelEstimate estimate_channels(const ChannelRealization& chan, const UserDrop& drop,
                                  const PowerProfile& powers,
                                  const EstimationStatistics& stats,
                                  const NetworkScenario& scenario, std::uint64_t seed);

/// Samples the estimated directions directly from their distribution,
/// column b ~ CN(0, alpha_jb B I_M). Matches estimate_channels in law.
ChannelEstimate sample_estimate_directions(const EstimationStatistics& stats,
                                           int antennas, std::uint64_t seed);

/// sqrt(p_u) d_j(z_u): scale linking user u's estimate to its pilot direction.
double estimate_scale(const UserDrop& drop, const PowerProfile& powers, int j, int u);

CVector estimated_channel(const ChannelEstimate& est, const UserDrop& drop,
                          const PowerProfile& powers, int j, int u);

}  // namespace mmimo
