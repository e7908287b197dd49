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

#include "mmimo/config.hpp"
#include "mmimo/filters.hpp"
#include "mmimo/mc_evaluator.hpp"
#include "mmimo/power.hpp"

namespace mmimo {

enum class PowerPolicy {
  kEqual,       // pilots by channel inversion, every payload at P_max
  kInversion,   // pilots and payload by channel inversion
  kSumSeControl,  // pilots by channel inversion, payload by sum-SE power control
};

std::string_view to_string(PowerPolicy policy);
PowerPolicy power_policy_from_string(std::string_view name);

struct SweepSpec {
  std::vector<DetectorKind> schemes = {DetectorKind::kMultiCellMmse};
  std::vector<int> m_values = {100};
  std::vector<int> k_values = {10};
  std::vector<int> beta_values = {4};
  int n_drops = 50;
  int n_real = 2000;
  PowerPolicy power_policy = PowerPolicy::kInversion;
  double rho_db = 0.0;             // channel-inversion SNR rho / sigma^2
  double pmax_edge_snr_db = -3.0;  // for kEqual and kSumSeControl
  int coverage_drop = 0;           // users removed per drop
  double eps = 1e-4;
  bool with_deteq = true;          // add deterministic-equivalent rows for M-MMSE
  SamplingMode sampling = SamplingMode::kEstimateDomain;
  InterferenceModel s_mmse_model = InterferenceModel::kStatistical;
  RVector weights;                 // per user; empty means all ones
  std::uint64_t seed = 1;
  int jobs = 1;
};

/// Sweep keys: schemes, M, K, beta (comma-separated lists), n_drops, n_real,
/// power_policy, rho_db, pmax_edge_snr_db, coverage_drop, eps, deteq (0/1),
/// sampling = estimate | full, s_mmse_model = ignored | statistical.
SweepSpec sweep_from_config(const KeyValueFile& file);
SweepSpec load_sweep(const std::string& path);

/// Scenario of one grid point.
NetworkScenario grid_scenario(const NetworkScenario& base, int antennas, int users_per_cell,
                              int reuse_factor);

/// The drop used for drop index `drop` under master seed `seed`; positions
/// and shadowing do not depend on M or beta.
UserDrop make_drop(const NetworkScenario& scenario, std::uint64_t seed, int drop,
                   int coverage_drop);

/// Powers of a drop under `policy`, downlink from the duality transform.
PowerProfile make_powers(const SweepSpec& spec, const NetworkScenario& scenario,
                         const UserDrop& drop);

struct SweepRecord {
  std::string source;  // "mc" or "deteq"
  std::string scheme;
  int antennas = 0;
  int users_per_cell = 0;
  int reuse_factor = 0;
  int drop = 0;
  std::uint64_t seed = 0;
  int n_real = 0;
  std::string policy;
  std::string status = "ok";
  double cell_sum_se = 0.0;
  double user_avg_se = 0.0;
  std::vector<bool> active;
  RVector ul_se, dl_se, joint_se;
};

struct SweepResult {
  std::vector<SweepRecord> records;
  std::vector<std::string> notices;
  int failures = 0;
};

SweepResult run_sweep(const SweepSpec& spec, const NetworkScenario& base);

/// Mean of cell_sum_se over successful records of one curve point.
double mean_cell_sum_se(const SweepResult& result, const std::string& source,
                        const std::string& scheme, int antennas, int users_per_cell,
                        int reuse_factor);

/// results.csv, users.csv and summary.csv.
void write_sweep(const SweepResult& result, const std::string& out_dir);

std::string results_csv(const SweepResult& result);
std::string users_csv(const SweepResult& result);
std::string summary_csv(const SweepResult& result);

struct CdfReport {
  std::vector<double> samples;  // sorted, non-decreasing

  static CdfReport from(std::vector<double> values);
  /// Linear interpolation between order statistics, p in [0, 100].
  double percentile(double p) const;
};

struct CdfDropRecord {
  int drop = 0;
  std::uint64_t seed = 0;
  std::string policy;
  double avg_se = 0.0;
  std::vector<int> users;
  std::vector<double> user_se;
};

struct CdfResult {
  CdfReport per_user_equal, per_user_algo1;
  CdfReport avg_equal, avg_algo1;
  std::vector<CdfDropRecord> drops;
  std::vector<std::pair<int, TraceRow>> traces;  // (drop, row)
  bool traces_monotone = true;  // surrogate non-decreasing inside every inner loop
  int failures = 0;
  std::vector<std::string> notices;
};

/// Equal power versus sum-SE power control over n_drops drops, SE from the
/// large-system approximations. Uses the first M, K, beta of the spec.
CdfResult run_cdf_experiment(const SweepSpec& spec, const NetworkScenario& base,
                             int n_drop_users = 9);
void write_cdf(const CdfResult& result, const std::string& out_dir);

struct ValidationRow {
  int antennas = 0;
  int users_per_cell = 0;
  int reuse_factor = 0;
  int n_drops = 0;
  int n_real = 0;
  double mean_mc = 0.0;
  double mean_deteq = 0.0;
  double mean_rel_error = 0.0;
  double max_rel_error = 0.0;
};

/// Monte Carlo versus approximate M-MMSE sum SE per (M, K, beta).
std::vector<ValidationRow> validate_deteq(const SweepSpec& spec, const NetworkScenario& base);
std::string validation_csv(const std::vector<ValidationRow>& rows, std::uint64_t seed);

struct DualityCheckRow {
  int antennas = 0;
  int users_per_cell = 0;
  int reuse_factor = 0;
  int drop = 0;
  double power_rel_error = 0.0;
  double max_sinr_rel_error = 0.0;
  std::string status = "ok";
};

std::vector<DualityCheckRow> duality_check(const SweepSpec& spec, const NetworkScenario& base);
std::string duality_csv(const std::vector<DualityCheckRow>& rows, std::uint64_t seed);

/// Writes `content` to out_dir/name, creating out_dir when needed.
void write_text_file(const std::string& out_dir, const std::string& name,
                     const std::string& content);

}  // namespace mmimo
