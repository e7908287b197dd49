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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mmimo/channel.hpp"
#include "mmimo/rng.hpp"
#include "mmimo/topology.hpp"

namespace mmimo::test {

// Hand-built network for tests that need a few cells only. Cell l uses the
// pilot block (l mod beta); gains are log-uniform in [1e-3, 1] with the
// serving link the strongest.
struct SmallInstance {
  NetworkScenario scenario;
  UserDrop drop;
  PowerProfile powers;
  EstimationStatistics stats;
};

inline SmallInstance make_small_instance(int L, int K, int beta, int M, std::uint64_t seed,
                                         double noise = 1.0) {
  SmallInstance s;
  s.scenario.cell_count = L;
  s.scenario.users_per_cell = K;
  s.scenario.reuse_factor = beta;
  s.scenario.antennas = M;
  s.scenario.noise_power = noise;
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  UserDrop& d = s.drop;
  d.cells = L;
  d.users_per_cell = K;
  const int LK = L * K;
  d.positions.assign(LK, Point::Zero());
  d.gains.resize(L, LK);
  d.shadow_db = RMatrix::Zero(1, LK);
  d.pilot_index.resize(LK);
  d.active.assign(LK, true);
  for (int u = 0; u < LK; ++u) {
    for (int j = 0; j < L; ++j) d.gains(j, u) = std::pow(10.0, -3.0 * unif(rng));
    d.gains(u / K, u) = 0.5 + 0.5 * unif(rng);
  }
  for (int l = 0; l < L; ++l) {
    std::vector<int> perm(K);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int k = 0; k < K; ++k) d.pilot_index[l * K + k] = (l % beta) * K + perm[k];
  }
  s.powers = PowerProfile::zeros(LK);
  for (int u = 0; u < LK; ++u) {
    s.powers.pilot(u) = 0.5 + unif(rng);
    s.powers.ul(u) = 0.5 + unif(rng);
    s.powers.dl(u) = 0.5 + unif(rng);
  }
  s.stats = compute_estimation_statistics(d, s.powers, s.scenario);
  return s;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

}  // namespace mmimo::test
