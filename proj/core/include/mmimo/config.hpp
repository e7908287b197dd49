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

#include <map>
#include <string>
#include <vector>

#include "mmimo/topology.hpp"

namespace mmimo {

/// Flat `key = value` file. Blank lines and text after '#' are ignored.
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;

  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;  // comma separated
  std::vector<int> get_int_list(const std::string& key) const;

  /// Throws ConfigError naming the first key outside `allowed`.
  void require_known(const std::vector<std::string>& allowed) const;

  const std::string& origin() const noexcept { return origin_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

/// Scenario keys: cells, radius_m, kappa, shadow_var_db, beta, K, M, S,
/// zeta_ul, noise_power, seed; optional min_distance_fraction and
/// shadowing = per_user | per_link.
NetworkScenario scenario_from_config(const KeyValueFile& file);
NetworkScenario load_scenario(const std::string& path);

}  // namespace mmimo
