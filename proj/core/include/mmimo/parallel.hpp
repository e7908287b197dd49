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

#include <algorithm>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace mmimo {

/// Runs compute(i) for i in [0, n_tasks) on up to `jobs` threads and hands
/// each result to consume(i, result) in increasing i. Any exception thrown by
/// compute is rethrown for the lowest failing index, after earlier results
/// have been consumed. The consumed sequence does not depend on `jobs`.
template <class Result, class Compute, class Consume>
void ordered_parallel(int n_tasks, int jobs, Compute&& compute, Consume&& consume) {
  jobs = std::max(1, std::min(jobs, n_tasks));
  for (int base = 0; base < n_tasks; base += jobs) {
    const int count = std::min(jobs, n_tasks - base);
    std::vector<std::optional<Result>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    auto run = [&](int i) {
      try {
        slots[i].emplace(compute(base + i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    };
    if (count == 1) {
      run(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(count);
      for (int i = 0; i < count; ++i) pool.emplace_back(run, i);
      for (auto& t : pool) t.join();
    }
    for (int i = 0; i < count; ++i) {
      if (errors[i]) std::rethrow_exception(errors[i]);
      consume(base + i, std::move(*slots[i]));
    }
  }
}

}  // namespace mmimo
