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
#include <string>
#include <vector>

#include "mmimo/channel.hpp"
#include "mmimo/filters.hpp"

namespace mmimo {

/// Uplink SINR of user u at BS j for detector g, conditional on the estimated
/// directions: estimated interference plus scaled-identity error covariances.
double uplink_sinr(const CVector& g, const CMatrix& directions,
                   const EstimationStatistics& stats, const UserDrop& drop,
                   const PowerProfile& powers, int j, int u);

/// Same for g = directions * x, using only the Gram matrix of the directions.
double uplink_sinr_from_coefficients(const CVector& x, const CMatrix& gram,
                                     const EstimationStatistics& stats,
                                     const UserDrop& drop, const PowerProfile& powers,
                                     int j, int u);

/// Uplink SINR of user k of cell j for a filter bank.
double uplink_sinr(const FilterBank& bank, const ChannelEstimate& est,
                   const EstimationStatistics& stats, const UserDrop& drop,
                   const PowerProfile& powers, int j, int k);

enum class SamplingMode {
  kEstimateDomain,  // draw the estimated directions and average over the error analytically
  kFullChain,       // draw h, form the pilot signal, estimate, and use the true h downlink
};

struct McOptions {
  int n_real = 10000;
  std::uint64_t seed = 1;
  int jobs = 1;
  SamplingMode sampling = SamplingMode::kEstimateDomain;
  InterferenceModel s_mmse_model = InterferenceModel::kStatistical;
  bool downlink = true;
  bool keep_samples = false;
  // Realizations per work unit; fixes the summation order.
  int chunk_size = 25;
};

/// Minimum number of realizations accepted for the downlink estimate.
inline constexpr int kMinDownlinkRealizations = 100;

struct SeReport {
  std::string scheme;
  int antennas = 0;
  int users_per_cell = 0;
  int reuse_factor = 0;
  int cells = 0;
  std::uint64_t seed = 0;
  int n_real = 0;
  std::vector<bool> active;

  RVector ul_rate;   // mean log2(1 + uplink SINR) per user
  RVector dl_sinr;   // downlink SINR per user
  RVector ul_se;     // zeta_ul (1 - B/S) ul_rate
  RVector dl_se;     // zeta_dl (1 - B/S) log2(1 + dl_sinr)
  RVector joint_se;  // ul_se + dl_se
  RMatrix ul_sinr_samples;  // n_real x LK, realization order; empty unless kept

  /// Network sum SE divided by the number of cells.
  double cell_sum_se() const;
  /// Network sum SE divided by the number of active users.
  double user_avg_se() const;
};

/// Monte Carlo evaluation of several schemes on common channel realizations.
/// Downlink powers are taken from powers.dl.
std::vector<SeReport> evaluate_schemes(const NetworkScenario& scenario, const UserDrop& drop,
                                       const PowerProfile& powers,
                                       const std::vector<DetectorKind>& schemes,
                                       const McOptions& options);

/// Uplink part only.
SeReport uplink_se(DetectorKind scheme, const NetworkScenario& scenario,
                   const UserDrop& drop, const PowerProfile& powers, int n_real,
                   std::uint64_t seed);

/// Per-user downlink SINR.
RVector downlink_sinr(DetectorKind scheme, const NetworkScenario& scenario,
                      const UserDrop& drop, const PowerProfile& powers, int n_real,
                      std::uint64_t seed);

/// Combines the uplink part of `ul` with the downlink part of `dl`.
SeReport joint_se(const SeReport& ul, const SeReport& dl, const NetworkScenario& scenario);

}  // namespace mmimo
