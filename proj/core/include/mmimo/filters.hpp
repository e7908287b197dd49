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
#include <functional>
#include <string_view>
#include <vector>

#include "mmimo/channel.hpp"
#include "mmimo/common.hpp"

namespace mmimo {

enum class DetectorKind {
  kMultiCellMmse,   // M-MMSE: all B estimated directions
  kSingleCellMmse,  // S-MMSE: own-cell directions only
  kMultiCellZf,     // M-ZF: pseudoinverse of all B directions
  kMatchedFilter,   // MF
};

/// How S-MMSE accounts for inter-cell interference.
enum class InterferenceModel {
  kIgnored,      // Z_j = 0
  kStatistical,  // Z_j = expected error + inter-cell power, scaled identity
};

std::string_view to_string(DetectorKind kind);
DetectorKind detector_from_string(std::string_view name);

/// Detectors of every BS for one channel realization. Every detector lies in
/// the span of the estimated directions: g_jk = directions[j] * coefficients[j].col(k).
struct FilterBank {
  DetectorKind kind = DetectorKind::kMultiCellMmse;
  std::vector<CMatrix> coefficients;  // B x K per BS
  std::vector<CMatrix> detectors;     // M x K per BS
  RMatrix gamma;                      // L x K, E{||g_jk||^2}; empty until normalized
  std::vector<CMatrix> precoders;     // M x K per BS, w = g / sqrt(gamma)

  const CMatrix& detectors_of(int j) const { return detectors[j]; }
};

/// Everything a detector construction needs besides the estimate.
struct DetectorContext {
  const NetworkScenario* scenario = nullptr;
  const UserDrop* drop = nullptr;
  const PowerProfile* powers = nullptr;
  const EstimationStatistics* stats = nullptr;
  DetectorKind kind = DetectorKind::kMultiCellMmse;
  InterferenceModel s_mmse_model = InterferenceModel::kStatistical;
};

// Coefficient routines. `gram` is directions^H directions of BS j; each
// returns the B x K coefficient matrix of the BS's K detectors.
CMatrix m_mmse_coefficients(const CMatrix& gram, const DetectorContext& ctx, int j);
CMatrix s_mmse_coefficients(const CMatrix& gram, const DetectorContext& ctx, int j);
CMatrix m_zf_coefficients(const CMatrix& gram, const DetectorContext& ctx, int j);
CMatrix mf_coefficients(const DetectorContext& ctx, int j);
CMatrix detector_coefficients(const CMatrix& gram, const DetectorContext& ctx, int j);

/// Scalar ridge of the statistical S-MMSE interference model at BS j.
double s_mmse_statistical_ridge(const DetectorContext& ctx, int j);

/// Throws UnsupportedConfigError when `kind` cannot be built for this scenario.
void check_detector_supported(DetectorKind kind, const NetworkScenario& scenario);

FilterBank build_filter_bank(const ChannelEstimate& est, const DetectorContext& ctx);

FilterBank m_mmse_detector(const ChannelEstimate& est, const EstimationStatistics& stats,
                           const UserDrop& drop, const PowerProfile& powers,
                           const NetworkScenario& scenario);
FilterBank s_mmse_detector(const ChannelEstimate& est, const EstimationStatistics& stats,
                           const UserDrop& drop, const PowerProfile& powers,
                           const NetworkScenario& scenario, InterferenceModel model);
FilterBank m_zf_detector(const ChannelEstimate& est, const UserDrop& drop,
                         const PowerProfile& powers, const NetworkScenario& scenario);
FilterBank mf_detector(const ChannelEstimate& est, const UserDrop& drop,
                       const PowerProfile& powers, const NetworkScenario& scenario);

/// Produces the filter bank of one independent realization.
using DetectorFactory = std::function<FilterBank(std::uint64_t realization_seed)>;

/// Factory drawing fresh estimated directions for each seed.
DetectorFactory make_detector_factory(const DetectorContext& ctx);

/// Sample mean of ||g_jk||^2 over `trials` independent realizations.
RMatrix estimate_gamma(const DetectorFactory& factory, int trials, std::uint64_t seed);

/// Estimates gamma with `gamma_trials` realizations and sets w = g / sqrt(gamma).
FilterBank normalize_precoders(FilterBank bank, const DetectorFactory& factory,
                               int gamma_trials, std::uint64_t seed);

/// Applies a known gamma (users with gamma == 0 get a zero precoder).
void apply_precoder_normalization(FilterBank& bank, const RMatrix& gamma);

}  // namespace mmimo
