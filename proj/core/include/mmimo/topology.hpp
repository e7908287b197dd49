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

#include <array>
#include <cstdint>
#include <vector>

#include "mmimo/common.hpp"

namespace mmimo {

using Point = Eigen::Vector2d;

enum class ShadowingMode {
  kPerUser,  // one shadow value per user location, shared by all BS links
  kPerLink,  // independent value per (user, BS) pair
};

/// Static description of a simulation run: geometry, pilot reuse and the
/// physical constants. Validated with validate() before use.
struct NetworkScenario {
  int cell_count = 19;
  double cell_radius_m = 500.0;
  double pathloss_exponent = 3.7;
  double shadow_variance_db = 5.0;
  int reuse_factor = 1;
  int users_per_cell = 10;
  int antennas = 100;
  int coherence_symbols = 1000;
  double ul_fraction = 0.5;
  double noise_power = 1.0;
  double min_distance_fraction = 0.14;
  ShadowingMode shadowing = ShadowingMode::kPerUser;
  std::uint64_t seed = 1;

  int pilot_length() const noexcept { return reuse_factor * users_per_cell; }
  int total_users() const noexcept { return cell_count * users_per_cell; }
  double dl_fraction() const noexcept { return 1.0 - ul_fraction; }
  /// Fraction of the coherence block left for payload, 1 - B/S.
  double payload_fraction() const noexcept {
    return 1.0 - static_cast<double>(pilot_length()) / coherence_symbols;
  }

  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

bool is_supported_reuse_factor(int beta) noexcept;

struct Topology {
  double cell_radius_m = 0.0;
  int reuse_factor = 1;
  std::vector<Point> bs_positions;
  // Axial lattice coordinates (q, r) of each cell centre.
  std::vector<std::array<int, 2>> axial;
  // Zero vector followed by the six translations of the wrapped cluster.
  std::vector<Point> wrap_offsets;
  std::vector<int> cell_color;

  int cell_count() const noexcept { return static_cast<int>(bs_positions.size()); }

  /// Distance from z to the nearest wrapped image of BS j.
  double wrap_distance(const Point& z, int j) const;

  /// True when cells a and b are first-tier neighbours inside the cluster
  /// (no wrap-around).
  bool adjacent(int a, int b) const;

  /// True when z lies inside the flat-top hexagon of cell j.
  bool contains(int j, const Point& z) const;
};

Topology build_topology(const NetworkScenario& scenario);

double wrap_distance(const Point& z, int j, const Topology& topo);

/// Users of all cells, flattened as u = l * K + k.
struct UserDrop {
  int cells = 0;
  int users_per_cell = 0;
  std::vector<Point> positions;
  // gains(j, u) = d_j(z_u), linear scale.
  RMatrix gains;
  // Shadowing draws in dB; 1 x LK for per-user mode, L x LK per link.
  RMatrix shadow_db;
  // Pilot index i_u, zero based, in [0, B).
  std::vector<int> pilot_index;
  std::vector<bool> active;

  int total_users() const noexcept { return cells * users_per_cell; }
  int serving_cell(int u) const noexcept { return u / users_per_cell; }
  int user_in_cell(int u) const noexcept { return u % users_per_cell; }
  double serving_gain(int u) const { return gains(serving_cell(u), u); }
  int active_count() const;
};

/// Shadowless-or-shadowed channel attenuation d = 10^(shadow_db/10) / dist^kappa.
double pathloss_gain(double distance_m, double kappa, double shadow_db);

/// Draws K users per cell uniformly in each hexagon (rejection sampled,
/// minimum distance to the serving BS enforced), shadow fading and pilots.
UserDrop drop_users(const NetworkScenario& scenario, const Topology& topo,
                    std::uint64_t seed);

/// Marks the n_drop users with the smallest serving-link gain inactive.
UserDrop apply_coverage_drop(UserDrop drop, int n_drop);

}  // namespace mmimo
