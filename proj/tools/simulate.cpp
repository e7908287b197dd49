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

// simulate: command-line front end of the experiment runner.

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "mmimo/experiments.hpp"

namespace {

struct Common {
  std::string config;
  std::string sweep;
  std::string out = "out";
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> power_policy;
  std::optional<double> pmax_edge_snr_db;
  std::optional<double> rho_db;
  std::optional<double> eps;
  std::optional<int> n_real;
  std::optional<int> n_drops;
  std::string weights = "uniform";
};

mmimo::RVector read_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mmimo::ConfigError("cannot open weight file '" + path + "'");
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      values.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw mmimo::ConfigError("weight file '" + path + "': bad entry '" + line + "'");
    }
  }
  mmimo::RVector w(static_cast<int>(values.size()));
  for (int i = 0; i < w.size(); ++i) w(i) = values[i];
  return w;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "scenario file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--sweep", c.sweep, "sweep file")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "master seed (overrides the files)");
  cmd->add_option("--power-policy", c.power_policy, "equal | inversion | algo1")
      ->check(CLI::IsMember({"equal", "inversion", "algo1"}));
  cmd->add_option("--pmax-edge-snr-db", c.pmax_edge_snr_db, "cell-edge SNR defining P_max");
  cmd->add_option("--rho-db", c.rho_db, "channel-inversion SNR");
  cmd->add_option("--eps", c.eps, "power-control stopping tolerance")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--n-real", c.n_real, "channel realizations per drop")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--n-drops", c.n_drops, "user drops")->check(CLI::PositiveNumber);
  cmd->add_option("--weights", c.weights, "uniform, or a file with one weight per user");
}

mmimo::SweepSpec resolve(const Common& c, const mmimo::NetworkScenario& sc) {
  mmimo::SweepSpec spec;
  spec.m_values = {sc.antennas};
  spec.k_values = {sc.users_per_cell};
  spec.beta_values = {sc.reuse_factor};
  spec.seed = sc.seed;
  if (!c.sweep.empty()) {
    const auto file = mmimo::KeyValueFile::load(c.sweep);
    spec = mmimo::sweep_from_config(file);
    if (!file.has("M")) spec.m_values = {sc.antennas};
    if (!file.has("K")) spec.k_values = {sc.users_per_cell};
    if (!file.has("beta")) spec.beta_values = {sc.reuse_factor};
    if (!file.has("seed")) spec.seed = sc.seed;
  }
  if (c.seed) spec.seed = *c.seed;
  if (c.power_policy) spec.power_policy = mmimo::power_policy_from_string(*c.power_policy);
  if (c.pmax_edge_snr_db) spec.pmax_edge_snr_db = *c.pmax_edge_snr_db;
  if (c.rho_db) spec.rho_db = *c.rho_db;
  if (c.eps) spec.eps = *c.eps;
  if (c.n_real) spec.n_real = *c.n_real;
  if (c.n_drops) spec.n_drops = *c.n_drops;
  if (c.weights != "uniform") spec.weights = read_weights(c.weights);
  spec.jobs = c.jobs;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-cell massive MIMO spectral-efficiency simulator"};
  app.require_subcommand(1);
  Common c;
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo and approximate SE over a parameter grid");
  auto* cdf = app.add_subcommand("cdf", "equal power versus sum-SE power control over user drops");
  auto* validate = app.add_subcommand("validate-deteq", "Monte Carlo versus approximate M-MMSE SE");
  auto* duality = app.add_subcommand("duality-check", "uplink/downlink duality transform check");
  int drop_users = 9;
  for (auto* cmd : {sweep, cdf, validate, duality}) add_common(cmd, c);
  cdf->add_option("--drop-users", drop_users, "weakest users removed per drop")
      ->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);

  try {
    const mmimo::NetworkScenario sc = mmimo::load_scenario(c.config);
    mmimo::SweepSpec spec = resolve(c, sc);

    if (sweep->parsed()) {
      const mmimo::SweepResult result = mmimo::run_sweep(spec, sc);
      for (const auto& note : result.notices) fmt::print(stderr, "notice: {}\n", note);
      mmimo::write_sweep(result, c.out);
      fmt::print("{} rows, {} failed, written to {}\n", result.records.size(), result.failures,
                 c.out);
      return result.failures == 0 ? 0 : 1;
    }
    if (cdf->parsed()) {
      const mmimo::CdfResult result = mmimo::run_cdf_experiment(spec, sc, drop_users);
      mmimo::write_cdf(result, c.out);
      const double med_eq = result.avg_equal.percentile(50);
      const double med_a1 = result.avg_algo1.percentile(50);
      fmt::print("median average-user SE: equal {:.4f}, algo1 {:.4f} (ratio {:.3f})\n", med_eq,
                 med_a1, med_a1 / med_eq);
      fmt::print("5th percentile per-user SE: equal {:.4f}, algo1 {:.4f}\n",
                 result.per_user_equal.percentile(5), result.per_user_algo1.percentile(5));
      if (!result.traces_monotone) fmt::print(stderr, "error: objective trace decreased\n");
      return result.traces_monotone ? 0 : 1;
    }
    if (validate->parsed()) {
      const auto rows = mmimo::validate_deteq(spec, sc);
      mmimo::write_text_file(c.out, "deteq_validation.csv", mmimo::validation_csv(rows, spec.seed));
      for (const auto& r : rows) {
        fmt::print("M={} K={} beta={}: mean rel. error {:.4f}, max {:.4f}\n", r.antennas,
                   r.users_per_cell, r.reuse_factor, r.mean_rel_error, r.max_rel_error);
      }
      return 0;
    }
    if (duality->parsed()) {
      const auto rows = mmimo::duality_check(spec, sc);
      mmimo::write_text_file(c.out, "duality.csv", mmimo::duality_csv(rows, spec.seed));
      int bad = 0;
      for (const auto& r : rows) bad += r.status == "ok" ? 0 : 1;
      fmt::print("{} instances, {} not ok\n", rows.size(), bad);
      return bad == 0 ? 0 : 1;
    }
  } catch (const mmimo::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
