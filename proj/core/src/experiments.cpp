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

#include "mmimo/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <tuple>

#include <fmt/format.h>

#include "mmimo/deteq.hpp"
#include "mmimo/parallel.hpp"
#include "mmimo/rng.hpp"

namespace mmimo {

namespace {

std::string num(double x) { return fmt::format("{:.12g}", x); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out + "\"";
}

struct GridPoint {
  int antennas, users_per_cell, reuse_factor;
};

std::vector<GridPoint> grid_of(const SweepSpec& spec) {
  std::vector<GridPoint> grid;
  for (int beta : spec.beta_values) {
    for (int K : spec.k_values) {
      for (int M : spec.m_values) grid.push_back({M, K, beta});
    }
  }
  return grid;
}

RVector user_weights(const SweepSpec& spec, int total_users) {
  if (spec.weights.size() == 0) return RVector::Ones(total_users);
  if (spec.weights.size() != total_users) {
    throw ConfigError(fmt::format("weight file has {} entries, the network has {} users",
                                  spec.weights.size(), total_users));
  }
  return spec.weights;
}

SweepRecord deteq_record(const DetEqReport& rep, const NetworkScenario& sc, const UserDrop& drop) {
  const int LK = drop.total_users();
  const double pre = sc.payload_fraction();
  SweepRecord rec;
  rec.source = "deteq";
  rec.scheme = std::string(to_string(DetectorKind::kMultiCellMmse));
  rec.active = drop.active;
  rec.ul_se = RVector::Zero(LK);
  rec.dl_se = RVector::Zero(LK);
  for (int u = 0; u < LK; ++u) {
    if (!drop.active[u]) continue;
    rec.ul_se(u) = sc.ul_fraction * pre * std::log2(1.0 + rep.ul_sinr(u));
    rec.dl_se(u) = sc.dl_fraction() * pre * std::log2(1.0 + rep.dl_sinr(u));
  }
  rec.joint_se = rec.ul_se + rec.dl_se;
  rec.cell_sum_se = rec.joint_se.sum() / sc.cell_count;
  const int n_active = drop.active_count();
  rec.user_avg_se = n_active > 0 ? rec.joint_se.sum() / n_active : 0.0;
  return rec;
}

SweepRecord mc_record(const SeReport& rep) {
  SweepRecord rec;
  rec.source = "mc";
  rec.scheme = rep.scheme;
  rec.active = rep.active;
  rec.ul_se = rep.ul_se;
  rec.dl_se = rep.dl_se;
  rec.joint_se = rep.joint_se;
  rec.cell_sum_se = rep.cell_sum_se();
  rec.user_avg_se = rep.user_avg_se();
  return rec;
}

struct UnitOutput {
  std::vector<SweepRecord> records;
  std::vector<std::string> notices;
  int failures = 0;
};

UnitOutput run_unit(const SweepSpec& spec, const NetworkScenario& base, const GridPoint& gp,
                    int d, int inner_jobs) {
  UnitOutput out;
  const std::string policy(to_string(spec.power_policy));
  auto stamp = [&](SweepRecord rec, int n_real) {
    rec.antennas = gp.antennas;
    rec.users_per_cell = gp.users_per_cell;
    rec.reuse_factor = gp.reuse_factor;
    rec.drop = d;
    rec.seed = spec.seed;
    rec.n_real = n_real;
    rec.policy = policy;
    return rec;
  };

  std::vector<DetectorKind> schemes;
  for (DetectorKind kind : spec.schemes) {
    if (kind == DetectorKind::kMultiCellZf &&
        gp.antennas <= gp.reuse_factor * gp.users_per_cell) {
      if (d == 0) {
        out.notices.push_back(fmt::format("skipping M-ZF at M={} K={} beta={}: needs M > {}",
                                          gp.antennas, gp.users_per_cell, gp.reuse_factor,
                                          gp.reuse_factor * gp.users_per_cell));
      }
      continue;
    }
    schemes.push_back(kind);
  }
  const bool want_deteq = spec.with_deteq;

  auto fail_all = [&](const std::string& message) {
    for (DetectorKind kind : schemes) {
      SweepRecord rec;
      rec.source = "mc";
      rec.scheme = std::string(to_string(kind));
      rec.status = "error: " + message;
      out.records.push_back(stamp(rec, spec.n_real));
      ++out.failures;
    }
    if (want_deteq) {
      SweepRecord rec;
      rec.source = "deteq";
      rec.scheme = std::string(to_string(DetectorKind::kMultiCellMmse));
      rec.status = "error: " + message;
      out.records.push_back(stamp(rec, 0));
      ++out.failures;
    }
  };

  NetworkScenario sc;
  UserDrop drop;
  PowerProfile powers;
  try {
    sc = grid_scenario(base, gp.antennas, gp.users_per_cell, gp.reuse_factor);
    drop = make_drop(sc, spec.seed, d, spec.coverage_drop);
    powers = make_powers(spec, sc, drop);
  } catch (const Error& e) {
    fail_all(e.what());
    return out;
  }

  if (!schemes.empty()) {
    McOptions mc;
    mc.n_real = spec.n_real;
    mc.seed = derive_seed(spec.seed, {tag(Stream::kGridPoint),
                                      static_cast<std::uint64_t>(gp.antennas),
                                      static_cast<std::uint64_t>(gp.users_per_cell),
                                      static_cast<std::uint64_t>(gp.reuse_factor),
                                      static_cast<std::uint64_t>(d)});
    mc.jobs = inner_jobs;
    mc.sampling = spec.sampling;
    mc.s_mmse_model = spec.s_mmse_model;
    try {
      for (const SeReport& rep : evaluate_schemes(sc, drop, powers, schemes, mc)) {
        out.records.push_back(stamp(mc_record(rep), spec.n_real));
      }
    } catch (const Error& e) {
      for (DetectorKind kind : schemes) {
        SweepRecord rec;
        rec.source = "mc";
        rec.scheme = std::string(to_string(kind));
        rec.status = std::string("error: ") + e.what();
        out.records.push_back(stamp(rec, spec.n_real));
        ++out.failures;
      }
    }
  }
  if (want_deteq) {
    try {
      const DetEqReport rep = deterministic_equivalents(drop, powers, sc);
      out.records.push_back(stamp(deteq_record(rep, sc, drop), 0));
    } catch (const Error& e) {
      SweepRecord rec;
      rec.source = "deteq";
      rec.scheme = std::string(to_string(DetectorKind::kMultiCellMmse));
      rec.status = std::string("error: ") + e.what();
      out.records.push_back(stamp(rec, 0));
      ++out.failures;
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(PowerPolicy policy) {
  switch (policy) {
    case PowerPolicy::kEqual:
      return "equal";
    case PowerPolicy::kInversion:
      return "inversion";
    case PowerPolicy::kSumSeControl:
      return "algo1";
  }
  return "unknown";
}

PowerPolicy power_policy_from_string(std::string_view name) {
  if (name == "equal") return PowerPolicy::kEqual;
  if (name == "inversion") return PowerPolicy::kInversion;
  if (name == "algo1") return PowerPolicy::kSumSeControl;
  throw ConfigError("unknown power policy '" + std::string(name) +
                    "' (expected equal, inversion or algo1)");
}

SweepSpec sweep_from_config(const KeyValueFile& file) {
  file.require_known({"schemes", "M", "K", "beta", "n_drops", "n_real", "power_policy", "rho_db",
                      "pmax_edge_snr_db", "coverage_drop", "eps", "deteq", "sampling",
                      "s_mmse_model", "seed"});
  SweepSpec spec;
  if (file.has("schemes")) {
    spec.schemes.clear();
    for (const auto& name : file.get_list("schemes")) {
      try {
        spec.schemes.push_back(detector_from_string(name));
      } catch (const Error& e) {
        throw ConfigError(file.origin() + ": " + e.what());
      }
    }
  }
  if (file.has("M")) spec.m_values = file.get_int_list("M");
  if (file.has("K")) spec.k_values = file.get_int_list("K");
  if (file.has("beta")) spec.beta_values = file.get_int_list("beta");
  if (file.has("n_drops")) spec.n_drops = static_cast<int>(file.get_int("n_drops"));
  if (file.has("n_real")) spec.n_real = static_cast<int>(file.get_int("n_real"));
  if (file.has("power_policy")) spec.power_policy = power_policy_from_string(file.get("power_policy"));
  if (file.has("rho_db")) spec.rho_db = file.get_double("rho_db");
  if (file.has("pmax_edge_snr_db")) spec.pmax_edge_snr_db = file.get_double("pmax_edge_snr_db");
  if (file.has("coverage_drop")) spec.coverage_drop = static_cast<int>(file.get_int("coverage_drop"));
  if (file.has("eps")) spec.eps = file.get_double("eps");
  if (file.has("deteq")) spec.with_deteq = file.get_int("deteq") != 0;
  if (file.has("sampling")) {
    const std::string& mode = file.get("sampling");
    if (mode == "estimate") {
      spec.sampling = SamplingMode::kEstimateDomain;
    } else if (mode == "full") {
      spec.sampling = SamplingMode::kFullChain;
    } else {
      throw ConfigError(file.origin() + ": sampling must be estimate or full");
    }
  }
  if (file.has("s_mmse_model")) {
    const std::string& mode = file.get("s_mmse_model");
    if (mode == "ignored") {
      spec.s_mmse_model = InterferenceModel::kIgnored;
    } else if (mode == "statistical") {
      spec.s_mmse_model = InterferenceModel::kStatistical;
    } else {
      throw ConfigError(file.origin() + ": s_mmse_model must be ignored or statistical");
    }
  }
  if (file.has("seed")) {
    const long long seed = file.get_int("seed");
    if (seed < 0) throw ConfigError(file.origin() + ": seed must be non-negative");
    spec.seed = static_cast<std::uint64_t>(seed);
  }
  if (spec.n_drops < 1) throw ConfigError(file.origin() + ": n_drops must be positive");
  if (spec.n_real < 1) throw ConfigError(file.origin() + ": n_real must be positive");
  if (!(spec.eps > 0.0)) throw ConfigError(file.origin() + ": eps must be positive");
  if (spec.coverage_drop < 0) throw ConfigError(file.origin() + ": coverage_drop must be >= 0");
  return spec;
}

SweepSpec load_sweep(const std::string& path) {
  return sweep_from_config(KeyValueFile::load(path));
}

NetworkScenario grid_scenario(const NetworkScenario& base, int antennas, int users_per_cell,
                              int reuse_factor) {
  NetworkScenario sc = base;
  sc.antennas = antennas;
  sc.users_per_cell = users_per_cell;
  sc.reuse_factor = reuse_factor;
  sc.validate();
  return sc;
}

UserDrop make_drop(const NetworkScenario& scenario, std::uint64_t seed, int drop,
                   int coverage_drop) {
  const Topology topo = build_topology(scenario);
  UserDrop users = drop_users(
      scenario, topo,
      derive_seed(seed, {tag(Stream::kDrop), static_cast<std::uint64_t>(drop)}));
  if (coverage_drop > 0) users = apply_coverage_drop(std::move(users), coverage_drop);
  return users;
}

PowerProfile make_powers(const SweepSpec& spec, const NetworkScenario& scenario,
                         const UserDrop& drop) {
  const double rho = scenario.noise_power * std::pow(10.0, spec.rho_db / 10.0);
  switch (spec.power_policy) {
    case PowerPolicy::kInversion:
      return with_dual_downlink(drop, channel_inversion_powers(drop, rho), scenario);
    case PowerPolicy::kEqual: {
      const double p_max = pmax_from_edge_snr(scenario, spec.pmax_edge_snr_db);
      return with_dual_downlink(drop, equal_payload_powers(drop, rho, p_max), scenario);
    }
    case PowerPolicy::kSumSeControl: {
      const double p_max = pmax_from_edge_snr(scenario, spec.pmax_edge_snr_db);
      PowerControlOptions options;
      options.eps = spec.eps;
      return sum_se_power_control(drop, scenario, channel_inversion_powers(drop, rho),
                                  user_weights(spec, drop.total_users()), p_max, options)
          .powers;
    }
  }
  throw ConfigError("unknown power policy");
}

SweepResult run_sweep(const SweepSpec& spec, const NetworkScenario& base) {
  const std::vector<GridPoint> grid = grid_of(spec);
  const int n_units = static_cast<int>(grid.size()) * spec.n_drops;
  const int inner_jobs = n_units == 1 ? spec.jobs : 1;
  SweepResult result;
  ordered_parallel<UnitOutput>(
      n_units, spec.jobs,
      [&](int i) {
        return run_unit(spec, base, grid[i / spec.n_drops], i % spec.n_drops, inner_jobs);
      },
      [&](int, UnitOutput unit) {
        for (auto& rec : unit.records) result.records.push_back(std::move(rec));
        for (auto& note : unit.notices) result.notices.push_back(std::move(note));
        result.failures += unit.failures;
      });
  return result;
}

double mean_cell_sum_se(const SweepResult& result, const std::string& source,
                        const std::string& scheme, int antennas, int users_per_cell,
                        int reuse_factor) {
  double sum = 0.0;
  int n = 0;
  for (const auto& rec : result.records) {
    if (rec.status != "ok" || rec.source != source || rec.scheme != scheme ||
        rec.antennas != antennas || rec.users_per_cell != users_per_cell ||
        rec.reuse_factor != reuse_factor) {
      continue;
    }
    sum += rec.cell_sum_se;
    ++n;
  }
  return n > 0 ? sum / n : std::nan("");
}

std::string results_csv(const SweepResult& result) {
  std::string out =
      "source,scheme,M,K,beta,drop,seed,n_real,power_policy,cell_sum_se,user_avg_se,status,"
      "build_id\n";
  for (const auto& r : result.records) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.source, r.scheme, r.antennas,
                       r.users_per_cell, r.reuse_factor, r.drop, r.seed, r.n_real, r.policy,
                       num(r.cell_sum_se), num(r.user_avg_se), csv_field(r.status), build_id());
  }
  return out;
}

std::string users_csv(const SweepResult& result) {
  std::string out = "source,scheme,M,K,beta,drop,seed,user,cell,active,ul_se,dl_se,joint_se\n";
  for (const auto& r : result.records) {
    if (r.status != "ok") continue;
    for (int u = 0; u < r.joint_se.size(); ++u) {
      out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.source, r.scheme,
                         r.antennas, r.users_per_cell, r.reuse_factor, r.drop, r.seed, u,
                         u / r.users_per_cell, r.active[u] ? 1 : 0, num(r.ul_se(u)),
                         num(r.dl_se(u)), num(r.joint_se(u)));
    }
  }
  return out;
}

std::string summary_csv(const SweepResult& result) {
  using Key = std::tuple<std::string, std::string, int, int, int>;
  struct Acc {
    int ok = 0, failed = 0;
    double sum = 0.0, sum_sq = 0.0, user_sum = 0.0;
    int n_real = 0;
  };
  std::vector<Key> order;
  std::map<Key, Acc> acc;
  for (const auto& r : result.records) {
    const Key key{r.source, r.scheme, r.antennas, r.users_per_cell, r.reuse_factor};
    auto [it, fresh] = acc.try_emplace(key);
    if (fresh) order.push_back(key);
    Acc& a = it->second;
    a.n_real = r.n_real;
    if (r.status != "ok") {
      ++a.failed;
      continue;
    }
    ++a.ok;
    a.sum += r.cell_sum_se;
    a.sum_sq += r.cell_sum_se * r.cell_sum_se;
    a.user_sum += r.user_avg_se;
  }
  std::string out =
      "source,scheme,M,K,beta,n_real,n_ok,n_failed,mean_cell_sum_se,stderr_cell_sum_se,"
      "mean_user_avg_se,build_id\n";
  for (const Key& key : order) {
    const Acc& a = acc.at(key);
    const double mean = a.ok > 0 ? a.sum / a.ok : std::nan("");
    const double var = a.ok > 1 ? std::max(0.0, (a.sum_sq - a.ok * mean * mean) / (a.ok - 1)) : 0.0;
    const double se = a.ok > 1 ? std::sqrt(var / a.ok) : 0.0;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", std::get<0>(key), std::get<1>(key),
                       std::get<2>(key), std::get<3>(key), std::get<4>(key), a.n_real, a.ok,
                       a.failed, num(mean), num(se),
                       num(a.ok > 0 ? a.user_sum / a.ok : std::nan("")), build_id());
  }
  return out;
}

void write_text_file(const std::string& out_dir, const std::string& name,
                     const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + out_dir + "': " + ec.message());
  const auto path = std::filesystem::path(out_dir) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw ConfigError("write failed for '" + path.string() + "'");
}

void write_sweep(const SweepResult& result, const std::string& out_dir) {
  write_text_file(out_dir, "results.csv", results_csv(result));
  write_text_file(out_dir, "users.csv", users_csv(result));
  write_text_file(out_dir, "summary.csv", summary_csv(result));
}

CdfReport CdfReport::from(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return CdfReport{std::move(values)};
}

double CdfReport::percentile(double p) const {
  if (samples.empty()) throw ConfigError("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("percentile must lie in [0, 100]");
  const double pos = p / 100.0 * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return samples[lo] + frac * (samples[hi] - samples[lo]);
}

namespace {

struct CdfUnit {
  CdfDropRecord equal, algo1;
  std::vector<TraceRow> trace;
};

CdfDropRecord cdf_record(const DetEqReport& rep, const NetworkScenario& sc, const UserDrop& drop,
                         int d, std::uint64_t seed, const char* policy) {
  const SweepRecord rec = deteq_record(rep, sc, drop);
  CdfDropRecord out;
  out.drop = d;
  out.seed = seed;
  out.policy = policy;
  out.avg_se = rec.user_avg_se;
  for (int u = 0; u < drop.total_users(); ++u) {
    if (!drop.active[u]) continue;
    out.users.push_back(u);
    out.user_se.push_back(rec.joint_se(u));
  }
  return out;
}

}  // namespace

CdfResult run_cdf_experiment(const SweepSpec& spec, const NetworkScenario& base,
                             int n_drop_users) {
  if (spec.m_values.empty() || spec.k_values.empty() || spec.beta_values.empty()) {
    throw ConfigError("the CDF experiment needs one M, K and beta value");
  }
  const NetworkScenario sc =
      grid_scenario(base, spec.m_values.front(), spec.k_values.front(), spec.beta_values.front());
  const double rho = sc.noise_power * std::pow(10.0, spec.rho_db / 10.0);
  const double p_max = pmax_from_edge_snr(sc, spec.pmax_edge_snr_db);
  PowerControlOptions options;
  options.eps = spec.eps;

  CdfResult result;
  std::vector<double> user_eq, user_a1, avg_eq, avg_a1;
  ordered_parallel<CdfUnit>(
      spec.n_drops, spec.jobs,
      [&](int d) {
        const UserDrop drop = make_drop(sc, spec.seed, d, n_drop_users);
        CdfUnit unit;
        const PowerProfile eq =
            with_dual_downlink(drop, equal_payload_powers(drop, rho, p_max), sc);
        unit.equal = cdf_record(deterministic_equivalents(drop, eq, sc), sc, drop, d, spec.seed,
                                "equal");
        const PowerControlResult pc =
            sum_se_power_control(drop, sc, channel_inversion_powers(drop, rho),
                                 user_weights(spec, drop.total_users()), p_max, options);
        unit.algo1 = cdf_record(pc.report, sc, drop, d, spec.seed, "algo1");
        unit.trace = pc.trace;
        return unit;
      },
      [&](int d, CdfUnit unit) {
        for (std::size_t i = 0; i < unit.trace.size(); ++i) {
          const TraceRow& row = unit.trace[i];
          if (row.inner_iter > 0 && row.r_surrogate < unit.trace[i - 1].r_surrogate) {
            result.traces_monotone = false;
          }
          result.traces.emplace_back(d, row);
        }
        user_eq.insert(user_eq.end(), unit.equal.user_se.begin(), unit.equal.user_se.end());
        user_a1.insert(user_a1.end(), unit.algo1.user_se.begin(), unit.algo1.user_se.end());
        avg_eq.push_back(unit.equal.avg_se);
        avg_a1.push_back(unit.algo1.avg_se);
        result.drops.push_back(std::move(unit.equal));
        result.drops.push_back(std::move(unit.algo1));
      });
  result.per_user_equal = CdfReport::from(std::move(user_eq));
  result.per_user_algo1 = CdfReport::from(std::move(user_a1));
  result.avg_equal = CdfReport::from(std::move(avg_eq));
  result.avg_algo1 = CdfReport::from(std::move(avg_a1));
  return result;
}

void write_cdf(const CdfResult& result, const std::string& out_dir) {
  std::string drops = "policy,drop,seed,avg_user_se,build_id\n";
  std::string users = "policy,drop,user,joint_se\n";
  for (const auto& d : result.drops) {
    drops += fmt::format("{},{},{},{},{}\n", d.policy, d.drop, d.seed, num(d.avg_se), build_id());
    for (std::size_t i = 0; i < d.users.size(); ++i) {
      users += fmt::format("{},{},{},{}\n", d.policy, d.drop, d.users[i], num(d.user_se[i]));
    }
  }
  std::string trace = "drop,outer_iter,inner_iter,R_surrogate,R_true\n";
  for (const auto& [d, row] : result.traces) {
    trace += fmt::format("{},{},{},{},{}\n", d, row.outer_iter, row.inner_iter,
                         num(row.r_surrogate), num(row.r_true));
  }
  std::string summary = "policy,statistic,p5,p50,p95\n";
  auto line = [&](const char* policy, const char* stat, const CdfReport& c) {
    summary += fmt::format("{},{},{},{},{}\n", policy, stat, num(c.percentile(5)),
                           num(c.percentile(50)), num(c.percentile(95)));
  };
  line("equal", "per_user", result.per_user_equal);
  line("algo1", "per_user", result.per_user_algo1);
  line("equal", "avg_user", result.avg_equal);
  line("algo1", "avg_user", result.avg_algo1);
  write_text_file(out_dir, "cdf_drops.csv", drops);
  write_text_file(out_dir, "cdf_users.csv", users);
  write_text_file(out_dir, "trace.csv", trace);
  write_text_file(out_dir, "cdf_summary.csv", summary);
}

std::vector<ValidationRow> validate_deteq(const SweepSpec& spec, const NetworkScenario& base) {
  SweepSpec s = spec;
  s.schemes = {DetectorKind::kMultiCellMmse};
  s.with_deteq = true;
  const SweepResult sweep = run_sweep(s, base);
  if (sweep.failures > 0) {
    for (const auto& rec : sweep.records) {
      if (rec.status != "ok") throw NumericalError("validation point failed: " + rec.status);
    }
  }
  std::vector<ValidationRow> rows;
  for (const GridPoint& gp : grid_of(s)) {
    ValidationRow row{gp.antennas, gp.users_per_cell, gp.reuse_factor, 0, s.n_real};
    std::map<int, double> mc;
    for (const auto& rec : sweep.records) {
      if (rec.antennas != gp.antennas || rec.users_per_cell != gp.users_per_cell ||
          rec.reuse_factor != gp.reuse_factor) {
        continue;
      }
      if (rec.source == "mc") mc[rec.drop] = rec.cell_sum_se;
    }
    for (const auto& rec : sweep.records) {
      if (rec.source != "deteq" || rec.antennas != gp.antennas ||
          rec.users_per_cell != gp.users_per_cell || rec.reuse_factor != gp.reuse_factor) {
        continue;
      }
      const double m = mc.at(rec.drop);
      const double err = std::abs(m - rec.cell_sum_se) / m;
      row.mean_mc += m;
      row.mean_deteq += rec.cell_sum_se;
      row.mean_rel_error += err;
      row.max_rel_error = std::max(row.max_rel_error, err);
      ++row.n_drops;
    }
    if (row.n_drops > 0) {
      row.mean_mc /= row.n_drops;
      row.mean_deteq /= row.n_drops;
      row.mean_rel_error /= row.n_drops;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string validation_csv(const std::vector<ValidationRow>& rows, std::uint64_t seed) {
  std::string out =
      "M,K,beta,n_drops,n_real,seed,mean_mc_cell_sum_se,mean_deteq_cell_sum_se,mean_rel_error,"
      "max_rel_error,build_id\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.antennas, r.users_per_cell,
                       r.reuse_factor, r.n_drops, r.n_real, seed, num(r.mean_mc),
                       num(r.mean_deteq), num(r.mean_rel_error), num(r.max_rel_error),
                       build_id());
  }
  return out;
}

std::vector<DualityCheckRow> duality_check(const SweepSpec& spec, const NetworkScenario& base) {
  const std::vector<GridPoint> grid = grid_of(spec);
  const int n_units = static_cast<int>(grid.size()) * spec.n_drops;
  std::vector<DualityCheckRow> rows;
  ordered_parallel<DualityCheckRow>(
      n_units, spec.jobs,
      [&](int i) {
        const GridPoint& gp = grid[i / spec.n_drops];
        DualityCheckRow row{gp.antennas, gp.users_per_cell, gp.reuse_factor, i % spec.n_drops};
        try {
          const NetworkScenario sc =
              grid_scenario(base, gp.antennas, gp.users_per_cell, gp.reuse_factor);
          const UserDrop drop = make_drop(sc, spec.seed, row.drop, spec.coverage_drop);
          PowerProfile powers = make_powers(spec, sc, drop);
          DetEqReport rep = deterministic_equivalents(drop, powers, sc);
          const DualitySystem sys = build_duality_system(rep, drop, powers, sc);
          const RVector tau = sys.restrict(powers.ul);
          const RVector varrho = uplink_to_downlink(sys, tau);
          row.power_rel_error = std::abs(varrho.sum() - tau.sum()) / tau.sum();
          powers.dl = sys.expand(varrho, drop.total_users());
          dl_sinr_approx(rep, drop, powers, sc);
          for (int u : sys.users) {
            const double rel = std::abs(rep.dl_sinr(u) - rep.ul_sinr(u)) / rep.ul_sinr(u);
            row.max_sinr_rel_error = std::max(row.max_sinr_rel_error, rel);
          }
          if (!(row.power_rel_error < 1e-9 && row.max_sinr_rel_error < 1e-9)) row.status = "fail";
        } catch (const InfeasibleError& e) {
          row.status = std::string("infeasible: ") + e.what();
        } catch (const Error& e) {
          row.status = std::string("error: ") + e.what();
        }
        return row;
      },
      [&](int, DualityCheckRow row) { rows.push_back(std::move(row)); });
  return rows;
}

std::string duality_csv(const std::vector<DualityCheckRow>& rows, std::uint64_t seed) {
  std::string out =
      "M,K,beta,drop,seed,power_rel_error,max_sinr_rel_error,status,build_id\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.antennas, r.users_per_cell,
                       r.reuse_factor, r.drop, seed, num(r.power_rel_error),
                       num(r.max_sinr_rel_error), csv_field(r.status), build_id());
  }
  return out;
}

}  // namespace mmimo
