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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmimo/rng.hpp"
#include "mmimo/topology.hpp"

using namespace mmimo;

namespace {

NetworkScenario reference_scenario(int beta, int K = 10) {
  NetworkScenario sc;
  sc.reuse_factor = beta;
  sc.users_per_cell = K;
  sc.validate();
  return sc;
}

}  // namespace

TEST_CASE("scenario validation") {
  CHECK_NOTHROW(reference_scenario(4));
  NetworkScenario sc = reference_scenario(4);
  sc.reuse_factor = 2;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc = reference_scenario(7);
  sc.users_per_cell = 200;  // B = 1400 > S
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc = reference_scenario(1);
  sc.ul_fraction = 0.333;  // 0.333 * 990 is not an integer
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc = reference_scenario(1);
  sc.cell_count = 7;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  CHECK(reference_scenario(4).payload_fraction() == doctest::Approx(0.96));
}

TEST_CASE("lattice geometry") {
  const Topology topo = build_topology(reference_scenario(1));
  REQUIRE(topo.cell_count() == 19);
  CHECK(topo.bs_positions[0].norm() == 0.0);
  const double r = 500.0;
  int first_tier = 0;
  for (int j = 1; j < 19; ++j) {
    const double d = topo.bs_positions[j].norm();
    if (std::abs(d - std::sqrt(3.0) * r) < 1e-9) ++first_tier;
  }
  CHECK(first_tier == 6);
  for (int j = 1; j <= 6; ++j) CHECK(topo.adjacent(0, j));
  CHECK(topo.wrap_offsets.size() == 7);
  CHECK(topo.wrap_offsets[0].norm() == 0.0);
}

TEST_CASE("colorings") {
  const Topology t1 = build_topology(reference_scenario(1));
  CHECK(std::all_of(t1.cell_color.begin(), t1.cell_color.end(), [](int c) { return c == 0; }));
  for (int beta : {3, 4, 7}) {
    const Topology t = build_topology(reference_scenario(beta));
    std::vector<int> count(beta, 0);
    for (int c : t.cell_color) {
      REQUIRE(c >= 0);
      REQUIRE(c < beta);
      ++count[c];
    }
    // Regular reuse patterns on the 19-cell cluster.
    std::sort(count.begin(), count.end());
    const std::vector<int> expected = beta == 3   ? std::vector<int>{6, 6, 7}
                                      : beta == 4 ? std::vector<int>{4, 4, 4, 7}
                                                  : std::vector<int>{1, 3, 3, 3, 3, 3, 3};
    CHECK(count == expected);
    for (int a = 0; a < 19; ++a) {
      for (int b = a + 1; b < 19; ++b) {
        if (t.adjacent(a, b)) CHECK(t.cell_color[a] != t.cell_color[b]);
      }
    }
  }
  const Topology t3 = build_topology(reference_scenario(3));
  std::vector<int> count(3, 0);
  for (int c : t3.cell_color) ++count[c];
  std::sort(count.begin(), count.end());
  CHECK(count == std::vector<int>{6, 6, 7});
  NetworkScenario bad = reference_scenario(1);
  bad.reuse_factor = 5;
  CHECK_THROWS_AS(build_topology(bad), ConfigError);
}

TEST_CASE("wrap distance") {
  const Topology topo = build_topology(reference_scenario(1));
  for (int j = 0; j < 19; ++j) CHECK(topo.wrap_distance(topo.bs_positions[j], j) == 0.0);
  for (int i = 0; i < 19; ++i) {
    for (int j = 0; j < 19; ++j) {
      CHECK(topo.wrap_distance(topo.bs_positions[i], j) ==
            doctest::Approx(topo.wrap_distance(topo.bs_positions[j], i)));
    }
  }
  // Opposite second-tier cells are close through the wrap.
  int far_a = -1, far_b = -1;
  double far = 0.0;
  for (int a = 0; a < 19; ++a) {
    for (int b = 0; b < 19; ++b) {
      const double d = (topo.bs_positions[a] - topo.bs_positions[b]).norm();
      if (d > far) {
        far = d;
        far_a = a;
        far_b = b;
      }
    }
  }
  const double wrapped = topo.wrap_distance(topo.bs_positions[far_a], far_b);
  CHECK(wrapped < far - 1.0);
  // Every BS-to-BS wrap distance is at most the cluster diameter in hops.
  for (int a = 0; a < 19; ++a) {
    for (int b = 0; b < 19; ++b) {
      CHECK(topo.wrap_distance(topo.bs_positions[a], b) <= 2.0 * std::sqrt(3.0) * 500.0 + 1e-6);
    }
  }
}

TEST_CASE("user drops respect geometry and pilot rules") {
  for (int beta : {1, 3, 4, 7}) {
    const NetworkScenario sc = reference_scenario(beta);
    const Topology topo = build_topology(sc);
    const UserDrop drop = drop_users(sc, topo, 17 + beta);
    const int K = sc.users_per_cell;
    REQUIRE(drop.total_users() == 190);
    for (int u = 0; u < 190; ++u) {
      const int l = drop.serving_cell(u);
      CHECK(topo.contains(l, drop.positions[u]));
      CHECK(topo.wrap_distance(drop.positions[u], l) >= 0.14 * 500.0);
      CHECK((drop.gains.col(u).array() > 0.0).all());
      const int p = drop.pilot_index[u];
      CHECK(p / K == topo.cell_color[l]);
    }
    for (int l = 0; l < 19; ++l) {
      std::vector<int> pilots(drop.pilot_index.begin() + l * K,
                              drop.pilot_index.begin() + (l + 1) * K);
      std::sort(pilots.begin(), pilots.end());
      CHECK(std::adjacent_find(pilots.begin(), pilots.end()) == pilots.end());
    }
    CHECK(drop.active_count() == 190);
  }
}

TEST_CASE("gains follow the pathloss model") {
  NetworkScenario sc = reference_scenario(1);
  const Topology topo = build_topology(sc);
  const UserDrop drop = drop_users(sc, topo, 5);
  for (int u = 0; u < 20; ++u) {
    // Per-user shadowing: gain * dist^kappa is the same for every BS.
    const double c0 = drop.gains(0, u) * std::pow(topo.wrap_distance(drop.positions[u], 0), 3.7);
    for (int j = 1; j < 19; ++j) {
      const double dj = topo.wrap_distance(drop.positions[u], j);
      CHECK(drop.gains(j, u) * std::pow(dj, 3.7) == doctest::Approx(c0).epsilon(1e-12));
    }
    // Therefore gains decrease with wrap distance.
    for (int a = 0; a < 19; ++a) {
      for (int b = 0; b < 19; ++b) {
        if (topo.wrap_distance(drop.positions[u], a) < topo.wrap_distance(drop.positions[u], b)) {
          CHECK(drop.gains(a, u) > drop.gains(b, u));
        }
      }
    }
  }
  sc.shadow_variance_db = 0.0;
  const UserDrop flat = drop_users(sc, topo, 5);
  for (int u = 0; u < 190; ++u) {
    const double d = topo.wrap_distance(flat.positions[u], 3);
    CHECK(flat.gains(3, u) == doctest::Approx(std::pow(d, -3.7)).epsilon(1e-14));
  }
  CHECK(pathloss_gain(2.0, 2.0, 10.0) == doctest::Approx(2.5));
}

TEST_CASE("per-link shadowing draws one value per BS") {
  NetworkScenario sc = reference_scenario(1);
  sc.shadowing = ShadowingMode::kPerLink;
  const UserDrop drop = drop_users(sc, build_topology(sc), 2);
  CHECK(drop.shadow_db.rows() == 19);
  CHECK(drop.shadow_db(0, 0) != drop.shadow_db(1, 0));
}

TEST_CASE("drops are reproducible") {
  const NetworkScenario sc = reference_scenario(4);
  const Topology topo = build_topology(sc);
  const UserDrop a = drop_users(sc, topo, 99);
  const UserDrop b = drop_users(sc, topo, 99);
  CHECK(a.gains == b.gains);
  CHECK(a.pilot_index == b.pilot_index);
  for (int u = 0; u < a.total_users(); ++u) CHECK(a.positions[u] == b.positions[u]);
  const UserDrop c = drop_users(sc, topo, 100);
  CHECK(a.gains != c.gains);
}

TEST_CASE("shadowing statistics") {
  NetworkScenario sc;
  sc.reuse_factor = 1;
  sc.users_per_cell = 500;
  const Topology topo = build_topology(sc);
  std::vector<double> s;
  for (std::uint64_t seed = 0; seed < 11; ++seed) {
    const UserDrop drop = drop_users(sc, topo, seed);
    for (int u = 0; u < drop.total_users(); ++u) s.push_back(drop.shadow_db(0, u));
  }
  REQUIRE(s.size() >= 100000);
  const double n = static_cast<double>(s.size());
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
  double var = 0.0;
  for (double x : s) var += (x - mean) * (x - mean);
  var /= n - 1.0;
  CHECK(std::abs(mean) < 0.1);
  CHECK(var == doctest::Approx(5.0).epsilon(0.1));
}

TEST_CASE("coverage drop removes the weakest serving links") {
  const NetworkScenario sc = reference_scenario(4);
  const UserDrop drop = drop_users(sc, build_topology(sc), 8);
  const UserDrop same = apply_coverage_drop(drop, 0);
  CHECK(same.active_count() == 190);
  const UserDrop cut = apply_coverage_drop(drop, 9);
  CHECK(cut.active_count() == 181);
  std::vector<double> g(190);
  for (int u = 0; u < 190; ++u) g[u] = drop.serving_gain(u);
  std::vector<double> sorted = g;
  std::sort(sorted.begin(), sorted.end());
  for (int u = 0; u < 190; ++u) CHECK(cut.active[u] == (g[u] > sorted[8]));
  CHECK_THROWS_AS(apply_coverage_drop(drop, 190), ConfigError);
}
