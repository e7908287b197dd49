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
#include <initializer_list>
#include <random>

#include "mmimo/common.hpp"

namespace mmimo {

using Rng = std::mt19937_64;

// Independent sub-streams of a master seed. Every random quantity in the
// simulator is drawn from an engine seeded by derive_seed(master, {tag, ...})
// so results never depend on evaluation order or thread count.
enum class Stream : std::uint64_t {
  kUserPositions = 1,
  kShadowing = 2,
  kPilotAssignment = 3,
  kChannel = 4,
  kPilotNoise = 5,
  kEstimateDirections = 6,
  kGamma = 7,
  kDrop = 8,
  kRealization = 9,
  kGridPoint = 10,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Hashes a path of counters into a 64-bit seed.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path) noexcept;

inline std::uint64_t tag(Stream s) noexcept {
  return static_cast<std::uint64_t>(s);
}

/// Fills `out` with i.i.d. CN(0, variance) entries: two real normals per
/// entry, each scaled by sqrt(variance / 2).
void fill_complex_gaussian(Rng& rng, Eigen::Ref<CMatrix> out, double variance);

/// Same, with a per-column variance.
void fill_complex_gaussian_columns(Rng& rng, Eigen::Ref<CMatrix> out,
                                   const Eigen::Ref<const RVector>& variance);

}  // namespace mmimo
