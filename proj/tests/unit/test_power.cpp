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

#include <random>

#include "helpers.hpp"
#include "mmimo/power.hpp"

using namespace mmimo;
using mmimo::test::make_small_instance;

namespace {

DualitySystem random_system(int n, std::uint64_t seed, bool symmetric) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  DualitySystem sys;
  for (int i = 0; i < n; ++i) sys.users.push_back(i);
  sys.D.resize(n);
  sys.F = RMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    sys.D(i) = 1.0 + unif(rng);
    for (int k = 0; k < n; ++k) {
      if (i != k) sys.F(i, k) = 0.05 * unif(rng);
    }
  }
  if (symmetric) sys.F = (0.5 * (sys.F + sys.F.transpose())).eval();
  sys.noise_term = 0.1;
  return sys;
}

}  // namespace

TEST_CASE("channel inversion and equal powers") {
  const auto s = make_small_instance(2, 3, 1, 8, 4);
  const auto p = channel_inversion_powers(s.drop, 2.0);
  for (int u = 0; u < 6; ++u) {
    CHECK(p.pilot(u) * s.drop.serving_gain(u) == doctest::Approx(2.0));
    CHECK(p.ul(u) == p.pilot(u));
    CHECK(p.dl(u) == 0.0);
  }
  const auto e = equal_payload_powers(s.drop, 1.0, 5.0);
  for (int u = 0; u < 6; ++u) CHECK(e.ul(u) == 5.0);
  CHECK_THROWS_AS(equal_payload_powers(s.drop, 1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(channel_inversion_powers(s.drop, -1.0), ConfigError);
}

TEST_CASE("P_max from the cell-edge SNR") {
  NetworkScenario sc;
  CHECK(pmax_from_edge_snr(sc, 0.0) == doctest::Approx(std::pow(500.0, 3.7)));
  CHECK(pmax_from_edge_snr(sc, 10.0) == doctest::Approx(10.0 * std::pow(500.0, 3.7)));
  sc.noise_power = 2.0;
  CHECK(pmax_from_edge_snr(sc, -3.0) ==
        doctest::Approx(std::pow(10.0, -0.3) * 2.0 * std::pow(500.0, 3.7)));
}

TEST_CASE("linear system reproduces the uplink approximation") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto s = make_small_instance(3, 2, 1, 24, seed);
    const auto rep = deterministic_equivalents(s.drop, s.powers, s.scenario);
    const auto sys = build_duality_system(rep, s.drop, s.powers, s.scenario);
    const RVector r = sys.uplink_sinr(sys.restrict(s.powers.ul));
    for (int i = 0; i < sys.size(); ++i) {
      CHECK(r(i) == doctest::Approx(rep.ul_sinr(sys.users[i])).epsilon(1e-12));
    }
    // Same for the downlink with arbitrary powers.
    const RVector dl = sys.downlink_sinr(sys.restrict(s.powers.dl));
    for (int i = 0; i < sys.size(); ++i) {
      CHECK(dl(i) == doctest::Approx(rep.dl_sinr(sys.users[i])).epsilon(1e-12));
    }
  }
}

TEST_CASE("duality transform on synthetic systems") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sys = random_system(8, seed, false);
    Rng rng(seed + 100);
    std::uniform_real_distribution<double> unif(0.5, 2.0);
    RVector tau(8);
    for (int i = 0; i < 8; ++i) tau(i) = unif(rng);
    const RVector varrho = uplink_to_downlink(sys, tau);
    const RVector ul = sys.uplink_sinr(tau);
    const RVector dl = sys.downlink_sinr(varrho);
    for (int i = 0; i < 8; ++i) CHECK(dl(i) == doctest::Approx(ul(i)).epsilon(1e-10));
    CHECK(varrho.sum() == doctest::Approx(tau.sum()).epsilon(1e-9));
  }
  const auto sym = random_system(6, 3, true);
  const RVector tau = RVector::LinSpaced(6, 0.5, 3.0);
  CHECK((uplink_to_downlink(sym, tau) - tau).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(uplink_to_downlink(sym, RVector::Ones(3)), ConfigError);
}

TEST_CASE("dual downlink powers on a drop") {
  const auto s = make_small_instance(3, 2, 1, 24, 12);
  const auto p = with_dual_downlink(s.drop, s.powers, s.scenario);
  CHECK(p.ul == s.powers.ul);
  const auto rep = deterministic_equivalents(s.drop, p, s.scenario);
  for (int u = 0; u < 6; ++u) CHECK(rep.dl_sinr(u) == doctest::Approx(rep.ul_sinr(u)).epsilon(1e-9));
  CHECK(p.dl.sum() == doctest::Approx(p.ul.sum()).epsilon(1e-9));
}

TEST_CASE("fixed-point update properties") {
  DualitySystem one;
  one.users = {0};
  one.D = RVector::Constant(1, 2.0);
  one.F = RMatrix::Zero(1, 1);
  one.noise_term = 0.1;
  CHECK(fixed_point_update(one, RVector::Constant(1, 0.3), RVector::Ones(1), 7.0)(0) == 7.0);

  // Permutation-symmetric input stays symmetric.
  DualitySystem sym;
  sym.users = {0, 1, 2};
  sym.D = RVector::Ones(3);
  sym.F = RMatrix::Constant(3, 3, 0.2);
  sym.F.diagonal().setZero();
  sym.noise_term = 0.05;
  const RVector next = fixed_point_update(sym, RVector::Ones(3), RVector::Ones(3), 100.0);
  CHECK(next(0) == doctest::Approx(next(1)).epsilon(1e-14));
  CHECK(next(1) == doctest::Approx(next(2)).epsilon(1e-14));

  const auto sys = random_system(7, 5, false);
  const RVector tau = RVector::LinSpaced(7, 0.2, 2.0);
  const RVector w = RVector::LinSpaced(7, 1.0, 3.0);
  const RVector a = fixed_point_update(sys, tau, w, 50.0);
  const RVector b = fixed_point_update(sys, tau, 4.5 * w, 50.0);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.array() <= 50.0).all());
  CHECK((a.array() > 0.0).all());
}

TEST_CASE("inner iterations never lower the surrogate") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto sys = random_system(9, seed, false);
    const RVector w = RVector::Ones(9);
    RVector tau = RVector::Constant(9, 5.0);
    double prev = surrogate_objective(sys.uplink_sinr(tau), w);
    for (int it = 0; it < 50; ++it) {
      tau = fixed_point_update(sys, tau, w, 5.0);
      const double obj = surrogate_objective(sys.uplink_sinr(tau), w);
      CHECK(obj >= prev - 1e-12 * std::abs(prev));
      prev = obj;
    }
  }
}

TEST_CASE("objectives") {
  const RVector r = (RVector(3) << 1.0, 3.0, 7.0).finished();
  const RVector w = (RVector(3) << 1.0, 2.0, 0.5).finished();
  CHECK(surrogate_objective(r, w) ==
        doctest::Approx(std::log2(1.0) + 2 * std::log2(3.0) + 0.5 * std::log2(7.0)));
  CHECK(true_objective(r, w) == doctest::Approx(1.0 + 2 * 2.0 + 0.5 * 3.0));
}

TEST_CASE("sum-SE power control on a drop") {
  auto s = make_small_instance(3, 2, 1, 30, 21);
  const double p_max = 2.0;
  const RVector w = RVector::Ones(6);
  const auto pc = sum_se_power_control(s.drop, s.scenario, s.powers, w, p_max);
  CHECK(pc.powers.pilot == s.powers.pilot);
  CHECK((pc.powers.ul.array() >= 0.0).all());
  CHECK((pc.powers.ul.array() <= p_max).all());
  REQUIRE(!pc.trace.empty());
  CHECK(pc.trace.front().outer_iter == 0);
  CHECK(pc.trace.back().r_true >= pc.trace.front().r_true - 1e-9);
  for (std::size_t i = 1; i < pc.trace.size(); ++i) {
    if (pc.trace[i].inner_iter > 0) {
      CHECK(pc.trace[i].r_surrogate >= pc.trace[i - 1].r_surrogate -
                                           1e-12 * std::abs(pc.trace[i - 1].r_surrogate));
    }
  }
  // Starting point: every user at P_max.
  PowerProfile start = s.powers;
  start.ul.setConstant(p_max);
  const auto before = deterministic_equivalents(s.drop, start, s.scenario);
  double r0 = 0.0, r1 = 0.0;
  for (int u = 0; u < 6; ++u) {
    r0 += std::log2(1.0 + before.ul_sinr(u));
    r1 += std::log2(1.0 + pc.report.ul_sinr(u));
  }
  CHECK(r1 >= r0 - 1e-6);
  // Downlink from the duality transform reaches the uplink SINRs.
  for (int u = 0; u < 6; ++u) {
    CHECK(pc.report.dl_sinr(u) == doctest::Approx(pc.report.ul_sinr(u)).epsilon(1e-8));
  }

  CHECK_THROWS_AS(sum_se_power_control(s.drop, s.scenario, s.powers, RVector::Ones(5), p_max),
                  ConfigError);
  CHECK_THROWS_AS(sum_se_power_control(s.drop, s.scenario, s.powers, -w, p_max), ConfigError);
}

TEST_CASE("a lone user transmits at P_max") {
  auto s = make_small_instance(1, 1, 1, 10, 3);
  const auto pc = sum_se_power_control(s.drop, s.scenario, s.powers, RVector::Ones(1), 4.0);
  CHECK(pc.powers.ul(0) == 4.0);
}
