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

#include <benchmark/benchmark.h>

#include "mmimo/deteq.hpp"
#include "mmimo/experiments.hpp"
#include "mmimo/mc_evaluator.hpp"
#include "mmimo/power.hpp"

namespace {

struct Fixture {
  mmimo::NetworkScenario scenario;
  mmimo::UserDrop drop;
  mmimo::PowerProfile powers;
};

Fixture make_fixture(int M, int beta) {
  mmimo::NetworkScenario base;
  base.users_per_cell = 10;
  Fixture f;
  f.scenario = mmimo::grid_scenario(base, M, 10, beta);
  f.drop = mmimo::make_drop(f.scenario, 1, 0, 0);
  f.powers = mmimo::with_dual_downlink(
      f.drop, mmimo::channel_inversion_powers(f.drop, 1.0), f.scenario);
  return f;
}

void BM_ScaledFixedPoint(benchmark::State& state) {
  const int B = static_cast<int>(state.range(0));
  const mmimo::RVector r = mmimo::RVector::LinSpaced(B, 0.1, 5.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mmimo::solve_resolvent_scaled(r, 0.01, 100));
  }
}
BENCHMARK(BM_ScaledFixedPoint)->Arg(10)->Arg(40)->Arg(70);

void BM_GeneralFixedPoint(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  std::vector<mmimo::Covariance> R;
  for (int b = 0; b < 10; ++b) R.push_back(mmimo::Covariance::scaled(0.5 + b));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mmimo::solve_resolvent_general(R, 0.01, M));
  }
}
BENCHMARK(BM_GeneralFixedPoint)->Arg(16)->Arg(64);

void BM_DeterministicEquivalents(benchmark::State& state) {
  const Fixture f = make_fixture(100, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mmimo::deterministic_equivalents(f.drop, f.powers, f.scenario));
  }
}
BENCHMARK(BM_DeterministicEquivalents)->Arg(1)->Arg(4)->Arg(7)->Unit(benchmark::kMillisecond);

void BM_MonteCarloDrop(benchmark::State& state) {
  const Fixture f = make_fixture(static_cast<int>(state.range(0)), 4);
  mmimo::McOptions opt;
  opt.n_real = 100;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mmimo::evaluate_schemes(
        f.scenario, f.drop, f.powers, {mmimo::DetectorKind::kMultiCellMmse}, opt));
  }
}
BENCHMARK(BM_MonteCarloDrop)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond)->Iterations(1);

void BM_PowerControl(benchmark::State& state) {
  const Fixture f = make_fixture(100, 4);
  const double p_max = mmimo::pmax_from_edge_snr(f.scenario, -3.0);
  const mmimo::RVector w = mmimo::RVector::Ones(f.drop.total_users());
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mmimo::sum_se_power_control(f.drop, f.scenario, f.powers, w, p_max));
  }
}
BENCHMARK(BM_PowerControl)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
