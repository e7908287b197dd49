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

#include "mmimo/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace mmimo {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

const std::vector<std::string> kScenarioKeys = {
    "cells", "radius_m", "kappa", "shadow_var_db", "beta",  "K",
    "M",     "S",        "zeta_ul", "noise_power", "seed"};

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
  KeyValueFile f;
  f.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": empty key");
    }
    if (!f.values_.emplace(key, value).second) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": duplicate key '" + key + "'");
    }
  }
  return f;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

const std::string& KeyValueFile::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(origin_ + ": missing key '" + key + "'");
  return it->second;
}

double KeyValueFile::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not a number: '" + v + "'");
  }
}

long long KeyValueFile::get_int(const std::string& key) const {
  const std::string& v = get(key);
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an integer: '" + v + "'");
  }
  return x;
}

std::vector<std::string> KeyValueFile::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream in(get(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw ConfigError(origin_ + ": key '" + key + "' is an empty list");
  return out;
}

std::vector<int> KeyValueFile::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& item : get_list(key)) {
    int x = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw ConfigError(origin_ + ": key '" + key + "' has a non-integer entry '" + item + "'");
    }
    out.push_back(x);
  }
  return out;
}

void KeyValueFile::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(origin_ + ": unknown key '" + key + "'");
    }
  }
}

NetworkScenario scenario_from_config(const KeyValueFile& file) {
  std::vector<std::string> allowed = kScenarioKeys;
  allowed.push_back("min_distance_fraction");
  allowed.push_back("shadowing");
  file.require_known(allowed);

  NetworkScenario sc;
  sc.cell_count = static_cast<int>(file.get_int("cells"));
  sc.cell_radius_m = file.get_double("radius_m");
  sc.pathloss_exponent = file.get_double("kappa");
  sc.shadow_variance_db = file.get_double("shadow_var_db");
  sc.reuse_factor = static_cast<int>(file.get_int("beta"));
  sc.users_per_cell = static_cast<int>(file.get_int("K"));
  sc.antennas = static_cast<int>(file.get_int("M"));
  sc.coherence_symbols = static_cast<int>(file.get_int("S"));
  sc.ul_fraction = file.get_double("zeta_ul");
  sc.noise_power = file.get_double("noise_power");
  const long long seed = file.get_int("seed");
  if (seed < 0) throw ConfigError(file.origin() + ": seed must be non-negative");
  sc.seed = static_cast<std::uint64_t>(seed);
  if (file.has("min_distance_fraction")) {
    sc.min_distance_fraction = file.get_double("min_distance_fraction");
  }
  if (file.has("shadowing")) {
    const std::string& mode = file.get("shadowing");
    if (mode == "per_user") {
      sc.shadowing = ShadowingMode::kPerUser;
    } else if (mode == "per_link") {
      sc.shadowing = ShadowingMode::kPerLink;
    } else {
      throw ConfigError(file.origin() + ": shadowing must be per_user or per_link");
    }
  }
  sc.validate();
  return sc;
}

NetworkScenario load_scenario(const std::string& path) {
  return scenario_from_config(KeyValueFile::load(path));
}

}  // namespace mmimo
