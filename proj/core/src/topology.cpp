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

#include "mmimo/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "mmimo/rng.hpp"

namespace mmimo {

namespace {

constexpr int kClusterRings = 2;
constexpr int kMaxTriesPerUser = 10000;
const double kSqrt3 = std::sqrt(3.0);

int positive_mod(int a, int m) { return ((a % m) + m) % m; }

int hex_norm(int q, int r) { return (std::abs(q) + std::abs(r) + std::abs(q + r)) / 2; }

Point axial_to_point(int q, int r, double radius) {
  return Point(1.5 * radius * q, kSqrt3 * radius * (r + 0.5 * q));
}

int color_of(int q, int r, int beta) {
  switch (beta) {
    case 1:
      return 0;
    case 3:
      return positive_mod(q - r, 3);
    case 4:
      return positive_mod(q, 2) + 2 * positive_mod(r, 2);
    case 7:
      return positive_mod(q + 3 * r, 7);
    default:
      throw ConfigError("unsupported pilot reuse factor " + std::to_string(beta));
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

bool is_supported_reuse_factor(int beta) noexcept {
  return beta == 1 || beta == 3 || beta == 4 || beta == 7;
}

void NetworkScenario::validate() const {
  require(cell_count == 19, "cells must be 19 (wrapped hexagonal cluster)");
  require(cell_radius_m > 0.0, "radius_m must be positive");
  require(pathloss_exponent > 0.0, "kappa must be positive");
  require(shadow_variance_db >= 0.0, "shadow_var_db must be non-negative");
  require(is_supported_reuse_factor(reuse_factor), "beta must be one of 1, 3, 4, 7");
  require(users_per_cell >= 1, "K must be positive");
  require(antennas >= 1, "M must be positive");
  require(coherence_symbols >= 1, "S must be positive");
  require(pilot_length() <= coherence_symbols, "pilot length beta*K exceeds S");
  require(ul_fraction > 0.0 && ul_fraction < 1.0, "zeta_ul must lie in (0, 1)");
  const double payload = coherence_symbols - pilot_length();
  const double ul = ul_fraction * payload;
  const double dl = dl_fraction() * payload;
  require(ul >= 1.0 - 1e-9 && std::abs(ul - std::round(ul)) < 1e-9,
          "zeta_ul * (S - B) must be a positive integer");
  require(dl >= 1.0 - 1e-9 && std::abs(dl - std::round(dl)) < 1e-9,
          "zeta_dl * (S - B) must be a positive integer");
  require(noise_power > 0.0, "noise_power must be positive");
  require(min_distance_fraction > 0.0 && min_distance_fraction < kSqrt3 / 2.0,
          "min_distance_fraction must lie in (0, sqrt(3)/2)");
}

double Topology::wrap_distance(const Point& z, int j) const {
  double best = std::numeric_limits<double>::infinity();
  for (const Point& o : wrap_offsets) {
    best = std::min(best, (z - (bs_positions[j] + o)).norm());
  }
  return best;
}

bool Topology::adjacent(int a, int b) const {
  const int dq = axial[a][0] - axial[b][0];
  const int dr = axial[a][1] - axial[b][1];
  return hex_norm(dq, dr) == 1;
}

bool Topology::contains(int j, const Point& z) const {
  const Point d = z - bs_positions[j];
  const double ax = std::abs(d.x());
  const double ay = std::abs(d.y());
  const double eps = 1e-12 * cell_radius_m;
  return ay <= kSqrt3 / 2.0 * cell_radius_m + eps &&
         kSqrt3 * ax + ay <= kSqrt3 * cell_radius_m + eps;
}

Topology build_topology(const NetworkScenario& scenario) {
  if (!is_supported_reuse_factor(scenario.reuse_factor)) {
    throw ConfigError("unsupported pilot reuse factor " +
                      std::to_string(scenario.reuse_factor));
  }
  if (scenario.cell_count != 19) {
    throw ConfigError("only the 19-cell wrapped cluster is supported");
  }

  Topology topo;
  topo.cell_radius_m = scenario.cell_radius_m;
  topo.reuse_factor = scenario.reuse_factor;

  // Centre, then ring 1, then ring 2; within a ring sorted by angle.
  std::vector<std::array<int, 2>> cells;
  for (int q = -kClusterRings; q <= kClusterRings; ++q) {
    for (int r = -kClusterRings; r <= kClusterRings; ++r) {
      if (hex_norm(q, r) <= kClusterRings) cells.push_back({q, r});
    }
  }
  auto angle = [&](const std::array<int, 2>& c) {
    const Point p = axial_to_point(c[0], c[1], 1.0);
    return std::atan2(p.y(), p.x());
  };
  std::sort(cells.begin(), cells.end(), [&](const auto& a, const auto& b) {
    const int na = hex_norm(a[0], a[1]);
    const int nb = hex_norm(b[0], b[1]);
    if (na != nb) return na < nb;
    return angle(a) < angle(b);
  });

  for (const auto& c : cells) {
    topo.axial.push_back(c);
    topo.bs_positions.push_back(axial_to_point(c[0], c[1], scenario.cell_radius_m));
    topo.cell_color.push_back(color_of(c[0], c[1], scenario.reuse_factor));
  }

  // Cluster translations in cube coordinates: (2n+1, -n, -n-1) and its
  // five 60-degree rotations (x, y, z) -> (-z, -x, -y).
  topo.wrap_offsets.push_back(Point::Zero());
  std::array<int, 3> cube = {2 * kClusterRings + 1, -kClusterRings, -kClusterRings - 1};
  for (int i = 0; i < 6; ++i) {
    const int q = cube[0];
    const int r = cube[2];
    topo.wrap_offsets.push_back(axial_to_point(q, r, scenario.cell_radius_m));
    cube = {-cube[2], -cube[0], -cube[1]};
  }
  return topo;
}

double wrap_distance(const Point& z, int j, const Topology& topo) {
  return topo.wrap_distance(z, j);
}

int UserDrop::active_count() const {
  return static_cast<int>(std::count(active.begin(), active.end(), true));
}

double pathloss_gain(double distance_m, double kappa, double shadow_db) {
  return std::pow(10.0, shadow_db / 10.0) / std::pow(distance_m, kappa);
}

UserDrop drop_users(const NetworkScenario& scenario, const Topology& topo,
                    std::uint64_t seed) {
  const int L = topo.cell_count();
  const int K = scenario.users_per_cell;
  const int LK = L * K;
  const double R = scenario.cell_radius_m;
  const double min_dist = scenario.min_distance_fraction * R;

  UserDrop drop;
  drop.cells = L;
  drop.users_per_cell = K;
  drop.positions.resize(LK);
  drop.pilot_index.resize(LK);
  drop.active.assign(LK, true);

  Rng pos_rng(derive_seed(seed, {tag(Stream::kUserPositions)}));
  std::uniform_real_distribution<double> ux(-R, R);
  std::uniform_real_distribution<double> uy(-kSqrt3 / 2.0 * R, kSqrt3 / 2.0 * R);
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < kMaxTriesPerUser; ++attempt) {
        const Point z = topo.bs_positions[l] + Point(ux(pos_rng), uy(pos_rng));
        if (!topo.contains(l, z)) continue;
        if (topo.wrap_distance(z, l) < min_dist) continue;
        drop.positions[l * K + k] = z;
        placed = true;
        break;
      }
      if (!placed) {
        throw SamplingError("user placement exceeded " +
                            std::to_string(kMaxTriesPerUser) + " attempts");
      }
    }
  }

  Rng shadow_rng(derive_seed(seed, {tag(Stream::kShadowing)}));
  std::normal_distribution<double> shadow(0.0, std::sqrt(scenario.shadow_variance_db));
  const int shadow_rows = scenario.shadowing == ShadowingMode::kPerLink ? L : 1;
  drop.shadow_db.resize(shadow_rows, LK);
  for (int u = 0; u < LK; ++u) {
    for (int row = 0; row < shadow_rows; ++row) {
      drop.shadow_db(row, u) =
          scenario.shadow_variance_db > 0.0 ? shadow(shadow_rng) : 0.0;
    }
  }

  drop.gains.resize(L, LK);
  for (int j = 0; j < L; ++j) {
    for (int u = 0; u < LK; ++u) {
      const double s = drop.shadow_db(shadow_rows == 1 ? 0 : j, u);
      drop.gains(j, u) =
          pathloss_gain(topo.wrap_distance(drop.positions[u], j),
                        scenario.pathloss_exponent, s);
    }
  }

  // Colour c owns pilots [c*K, (c+1)*K); each cell permutes its block.
  Rng pilot_rng(derive_seed(seed, {tag(Stream::kPilotAssignment)}));
  std::vector<int> block(K);
  for (int l = 0; l < L; ++l) {
    std::iota(block.begin(), block.end(), topo.cell_color[l] * K);
    for (int i = K - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(block[i], block[pick(pilot_rng)]);
    }
    for (int k = 0; k < K; ++k) drop.pilot_index[l * K + k] = block[k];
  }
  return drop;
}

UserDrop apply_coverage_drop(UserDrop drop, int n_drop) {
  const int LK = drop.total_users();
  if (n_drop < 0 || n_drop >= LK) {
    throw ConfigError("coverage drop count must lie in [0, total users)");
  }
  std::vector<int> order(LK);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return drop.serving_gain(a) < drop.serving_gain(b);
  });
  for (int i = 0; i < n_drop; ++i) drop.active[order[i]] = false;
  return drop;
}

}  // namespace mmimo
