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

#include "mmimo/rng.hpp"

#include <cmath>

namespace mmimo {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t p : path) {
    h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  }
  return h;
}

void fill_complex_gaussian(Rng& rng, Eigen::Ref<CMatrix> out, double variance) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = std::sqrt(variance / 2.0);
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      out(r, c) = Complex(scale * re, scale * im);
    }
  }
}

void fill_complex_gaussian_columns(Rng& rng, Eigen::Ref<CMatrix> out,
                                   const Eigen::Ref<const RVector>& variance) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double scale = std::sqrt(variance(c) / 2.0);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      out(r, c) = Complex(scale * re, scale * im);
    }
  }
}

}  // namespace mmimo
