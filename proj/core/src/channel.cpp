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

#include "mmimo/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mmimo/rng.hpp"

namespace mmimo {

PowerProfile PowerProfile::zeros(int total_users) {
  PowerProfile p;
  p.pilot = RVector::Zero(total_users);
  p.ul = RVector::Zero(total_users);
  p.dl = RVector::Zero(total_users);
  return p;
}

void PowerProfile::validate(const UserDrop& drop) const {
  const int LK = drop.total_users();
  if (pilot.size() != LK || ul.size() != LK || dl.size() != LK) {
    throw ConfigError("power profile size does not match the user drop");
  }
  for (int u = 0; u < LK; ++u) {
    for (double v : {pilot(u), ul(u), dl(u)}) {
      if (!std::isfinite(v) || v < 0.0) {
        throw ConfigError("powers must be finite and non-negative (user " +
                          std::to_string(u) + ")");
      }
    }
    if (!drop.active[u] && (pilot(u) != 0.0 || ul(u) != 0.0 || dl(u) != 0.0)) {
      throw ConfigError("inactive user " + std::to_string(u) + " has non-zero power");
    }
  }
}

EstimationStatistics compute_estimation_statistics(const UserDrop& drop,
                                                   const PowerProfile& powers,
                                                   const NetworkScenario& scenario) {
  const int L = drop.cells;
  const int LK = drop.total_users();
  const int B = scenario.pilot_length();
  const double sigma2 = scenario.noise_power;

  EstimationStatistics st;
  st.pilot_length = B;
  st.noise_power = sigma2;
  RMatrix received = RMatrix::Zero(L, B);  // sum p d_j per pilot
  st.lambda = RMatrix::Zero(L, B);
  for (int u = 0; u < LK; ++u) {
    const int b = drop.pilot_index[u];
    for (int j = 0; j < L; ++j) {
      const double d = drop.gains(j, u);
      received(j, b) += powers.pilot(u) * d;
      st.lambda(j, b) += powers.ul(u) * powers.pilot(u) * d * d;
    }
  }
  st.alpha = (B * received.array() + sigma2).inverse().matrix();

  st.phi_hat_coeff.resize(L, LK);
  st.err_coeff.resize(L, LK);
  st.phi = RVector::Zero(L);
  for (int u = 0; u < LK; ++u) {
    const int b = drop.pilot_index[u];
    for (int j = 0; j < L; ++j) {
      const double d = drop.gains(j, u);
      double hat = powers.pilot(u) * d * d * st.alpha(j, b) * B;
      double err = d - hat;
      // Make the smaller part absorb the rounding so hat + err == d holds exactly.
      if (hat < err) hat = d - err;
      st.phi_hat_coeff(j, u) = hat;
      st.err_coeff(j, u) = err;
      st.phi(j) += powers.ul(u) * st.err_coeff(j, u);
    }
  }
  return st;
}

ChannelRealization generate_channels(const UserDrop& drop, int antennas,
                                     std::uint64_t seed) {
  const int L = drop.cells;
  ChannelRealization chan;
  chan.h.resize(L);
  for (int j = 0; j < L; ++j) {
    Rng rng(derive_seed(seed, {tag(Stream::kChannel), static_cast<std::uint64_t>(j)}));
    chan.h[j].resize(antennas, drop.total_users());
    const RVector variance = drop.gains.row(j).transpose();
    fill_complex_gaussian_columns(rng, chan.h[j], variance);
  }
  return chan;
}

CMatrix pilot_book(int pilot_length) {
  const int B = pilot_length;
  CMatrix v(B, B);
  for (int b = 0; b < B; ++b) {
    for (int n = 0; n < B; ++n) {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(b) * n / B;
      v(n, b) = std::polar(1.0, phase);
    }
  }
  return v;
}

CMatrix received_pilot_signal(const CMatrix& h_j, const UserDrop& drop,
                              const PowerProfile& powers, const CMatrix& book,
                              const CMatrix& noise) {
  const int B = static_cast<int>(book.cols());
  CMatrix per_pilot = CMatrix::Zero(h_j.rows(), B);
  for (int u = 0; u < drop.total_users(); ++u) {
    if (powers.pilot(u) == 0.0) continue;
    per_pilot.col(drop.pilot_index[u]) += std::sqrt(powers.pilot(u)) * h_j.col(u);
  }
  return per_pilot * book.transpose() + noise;
}

ChannelEstimate estimate_channels(const ChannelRealization& chan, const UserDrop& drop,
                                  const PowerProfile& powers,
                                  const EstimationStatistics& stats,
                                  const NetworkScenario& scenario, std::uint64_t seed) {
  const int L = drop.cells;
  const int LK = drop.total_users();
  const int B = scenario.pilot_length();
  const CMatrix book = pilot_book(B);
  const CMatrix book_conj = book.conjugate();

  ChannelEstimate est;
  est.directions.resize(L);
  est.estimates.resize(L);
  est.errors.resize(L);
  for (int j = 0; j < L; ++j) {
    const CMatrix& h = chan.h[j];
    const int M = static_cast<int>(h.rows());
    Rng rng(derive_seed(seed, {tag(Stream::kPilotNoise), static_cast<std::uint64_t>(j)}));
    CMatrix noise(M, B);
    fill_complex_gaussian(rng, noise, scenario.noise_power);
    const CMatrix y = received_pilot_signal(h, drop, powers, book, noise);

    // v_b^H Psi_j^{-1} = alpha_jb v_b^H, so Y (Psi^*)^{-1} v_b^* = alpha_jb Y v_b^*.
    est.directions[j] = y * book_conj;
    for (int b = 0; b < B; ++b) est.directions[j].col(b) *= stats.alpha(j, b);

    est.estimates[j].resize(M, LK);
    for (int u = 0; u < LK; ++u) {
      est.estimates[j].col(u) =
          estimate_scale(drop, powers, j, u) * est.directions[j].col(drop.pilot_index[u]);
    }
    est.errors[j] = h - est.estimates[j];
  }
  return est;
}

ChannelEstimate sample_estimate_directions(const EstimationStatistics& stats,
                                           int antennas, std::uint64_t seed) {
  const int L = static_cast<int>(stats.alpha.rows());
  const int B = static_cast<int>(stats.alpha.cols());
  ChannelEstimate est;
  est.directions.resize(L);
  for (int j = 0; j < L; ++j) {
    Rng rng(derive_seed(seed, {tag(Stream::kEstimateDirections),
                               static_cast<std::uint64_t>(j)}));
    est.directions[j].resize(antennas, B);
    const RVector variance = stats.alpha.row(j).transpose() * static_cast<double>(B);
    fill_complex_gaussian_columns(rng, est.directions[j], variance);
  }
  return est;
}

double estimate_scale(const UserDrop& drop, const PowerProfile& powers, int j, int u) {
  return std::sqrt(powers.pilot(u)) * drop.gains(j, u);
}

CVector estimated_channel(const ChannelEstimate& est, const UserDrop& drop,
                          const PowerProfile& powers, int j, int u) {
  return estimate_scale(drop, powers, j, u) * est.directions[j].col(drop.pilot_index[u]);
}

}  // namespace mmimo
