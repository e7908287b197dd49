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

#include "mmimo/mc_evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmimo/parallel.hpp"
#include "mmimo/rng.hpp"

namespace mmimo {

namespace {

// Shared tail of the uplink SINR: q = directions^H g, gnorm2 = ||g||^2.
double uplink_sinr_from_projection(const Eigen::Ref<const CVector>& q, double gnorm2,
                                   const EstimationStatistics& stats, const UserDrop& drop,
                                   const PowerProfile& powers, int j, int u) {
  if (!(gnorm2 > 0.0)) {
    throw UndefinedSinrError("zero detector for user " + std::to_string(u));
  }
  const double s2 = powers.pilot(u) * drop.gains(j, u) * drop.gains(j, u);
  const double signal = powers.ul(u) * s2 * std::norm(q(drop.pilot_index[u]));
  double received = 0.0;
  for (Eigen::Index b = 0; b < q.size(); ++b) {
    received += stats.lambda(j, b) * std::norm(q(b));
  }
  const double interference =
      std::max(0.0, received - signal) + (stats.phi(j) + stats.noise_power) * gnorm2;
  return signal / interference;
}

struct SchemeAccum {
  RVector ul_log;  // LK
  CVector own;     // LK, sum of h^H g for the serving link
  RVector gnorm;   // LK, sum of ||g||^2
  RMatrix cross;   // LK (precoder) x LK (receiving user), sum of |h^H g|^2
  RMatrix samples;
};

struct Partial {
  std::vector<SchemeAccum> schemes;
};

struct Setup {
  const NetworkScenario* scenario;
  const UserDrop* drop;
  const PowerProfile* powers;
  EstimationStatistics stats;
  std::vector<DetectorContext> contexts;
  McOptions options;
};

Partial make_partial(const Setup& st, int rows) {
  const int LK = st.drop->total_users();
  Partial p;
  p.schemes.resize(st.contexts.size());
  for (auto& a : p.schemes) {
    a.ul_log = RVector::Zero(LK);
    a.own = CVector::Zero(LK);
    a.gnorm = RVector::Zero(LK);
    if (st.options.downlink) a.cross = RMatrix::Zero(LK, LK);
    if (st.options.keep_samples) a.samples = RMatrix::Zero(rows, LK);
  }
  return p;
}

void accumulate_realization(const Setup& st, std::uint64_t seed, int row, Partial& out) {
  const auto& sc = *st.scenario;
  const auto& drop = *st.drop;
  const auto& powers = *st.powers;
  const int L = drop.cells;
  const int K = drop.users_per_cell;
  const int LK = drop.total_users();
  const bool full = st.options.sampling == SamplingMode::kFullChain;

  ChannelRealization chan;
  ChannelEstimate est;
  if (full) {
    chan = generate_channels(drop, sc.antennas, seed);
    est = estimate_channels(chan, drop, powers, st.stats, sc, seed);
  } else {
    est = sample_estimate_directions(st.stats, sc.antennas, seed);
  }

  for (int j = 0; j < L; ++j) {
    const CMatrix& dirs = est.directions[j];
    const CMatrix gram = dirs.adjoint() * dirs;
    CMatrix h_proj;
    if (full && st.options.downlink) h_proj = chan.h[j].adjoint() * dirs;  // LK x B

    for (std::size_t s = 0; s < st.contexts.size(); ++s) {
      SchemeAccum& acc = out.schemes[s];
      const CMatrix x = detector_coefficients(gram, st.contexts[s], j);
      const CMatrix q = gram * x;
      for (int k = 0; k < K; ++k) {
        const int u = j * K + k;
        if (!drop.active[u]) continue;
        const double gn = x.col(k).dot(q.col(k)).real();
        const double sinr =
            uplink_sinr_from_projection(q.col(k), gn, st.stats, drop, powers, j, u);
        acc.ul_log(u) += std::log2(1.0 + sinr);
        acc.gnorm(u) += gn;
        if (acc.samples.size() > 0) acc.samples(row, u) = sinr;
      }
      if (!st.options.downlink) continue;

      if (full) {
        const CMatrix a = h_proj * x;  // a(v, m) = h_jv^H g_jm
        for (int m = 0; m < K; ++m) {
          const int lm = j * K + m;
          if (!drop.active[lm]) continue;
          acc.own(lm) += a(lm, m);
          for (int v = 0; v < LK; ++v) acc.cross(lm, v) += std::norm(a(v, m));
        }
      } else {
        // Conditional on the estimate: E{h} = estimate, error variance adds ||g||^2.
        for (int m = 0; m < K; ++m) {
          const int lm = j * K + m;
          if (!drop.active[lm]) continue;
          const double gn = x.col(m).dot(q.col(m)).real();
          acc.own(lm) += estimate_scale(drop, powers, j, lm) * q(drop.pilot_index[lm], m);
          for (int v = 0; v < LK; ++v) {
            const double s2 = powers.pilot(v) * drop.gains(j, v) * drop.gains(j, v);
            acc.cross(lm, v) += s2 * std::norm(q(drop.pilot_index[v], m)) +
                                st.stats.err_coeff(j, v) * gn;
          }
        }
      }
    }
  }
}

}  // namespace

double uplink_sinr(const CVector& g, const CMatrix& directions,
                   const EstimationStatistics& stats, const UserDrop& drop,
                   const PowerProfile& powers, int j, int u) {
  const CVector q = directions.adjoint() * g;
  return uplink_sinr_from_projection(q, g.squaredNorm(), stats, drop, powers, j, u);
}

double uplink_sinr_from_coefficients(const CVector& x, const CMatrix& gram,
                                     const EstimationStatistics& stats,
                                     const UserDrop& drop, const PowerProfile& powers,
                                     int j, int u) {
  const CVector q = gram * x;
  return uplink_sinr_from_projection(q, x.dot(q).real(), stats, drop, powers, j, u);
}

double uplink_sinr(const FilterBank& bank, const ChannelEstimate& est,
                   const EstimationStatistics& stats, const UserDrop& drop,
                   const PowerProfile& powers, int j, int k) {
  return uplink_sinr(CVector(bank.detectors[j].col(k)), est.directions[j], stats, drop,
                     powers, j, j * drop.users_per_cell + k);
}

double SeReport::cell_sum_se() const {
  return cells > 0 ? joint_se.sum() / cells : 0.0;
}

double SeReport::user_avg_se() const {
  const auto n = std::count(active.begin(), active.end(), true);
  return n > 0 ? joint_se.sum() / static_cast<double>(n) : 0.0;
}

std::vector<SeReport> evaluate_schemes(const NetworkScenario& scenario, const UserDrop& drop,
                                       const PowerProfile& powers,
                                       const std::vector<DetectorKind>& schemes,
                                       const McOptions& options) {
  if (options.n_real < 1) throw ConfigError("n_real must be at least 1");
  if (options.chunk_size < 1) throw ConfigError("chunk_size must be at least 1");
  if (options.downlink && options.n_real < kMinDownlinkRealizations) {
    throw InsufficientSamplesError("downlink estimate needs at least " +
                                   std::to_string(kMinDownlinkRealizations) +
                                   " realizations");
  }
  powers.validate(drop);
  for (DetectorKind kind : schemes) check_detector_supported(kind, scenario);

  Setup st;
  st.scenario = &scenario;
  st.drop = &drop;
  st.powers = &powers;
  st.stats = compute_estimation_statistics(drop, powers, scenario);
  st.options = options;
  for (DetectorKind kind : schemes) {
    st.contexts.push_back(
        DetectorContext{&scenario, &drop, &powers, &st.stats, kind, options.s_mmse_model});
  }

  const int n = options.n_real;
  const int n_chunks = (n + options.chunk_size - 1) / options.chunk_size;
  Partial total = make_partial(st, n);
  ordered_parallel<Partial>(
      n_chunks, options.jobs,
      [&](int c) {
        const int first = c * options.chunk_size;
        const int last = std::min(n, first + options.chunk_size);
        Partial p = make_partial(st, last - first);
        for (int r = first; r < last; ++r) {
          const auto seed = derive_seed(options.seed, {tag(Stream::kRealization),
                                                       static_cast<std::uint64_t>(r)});
          accumulate_realization(st, seed, r - first, p);
        }
        return p;
      },
      [&](int c, Partial&& p) {
        for (std::size_t s = 0; s < schemes.size(); ++s) {
          auto& dst = total.schemes[s];
          auto& src = p.schemes[s];
          dst.ul_log += src.ul_log;
          dst.own += src.own;
          dst.gnorm += src.gnorm;
          if (options.downlink) dst.cross += src.cross;
          if (options.keep_samples) {
            dst.samples.middleRows(c * options.chunk_size, src.samples.rows()) = src.samples;
          }
        }
      });

  const int LK = drop.total_users();
  const double prelog = scenario.payload_fraction();
  std::vector<SeReport> reports;
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    const auto& acc = total.schemes[s];
    SeReport rep;
    rep.scheme = std::string(to_string(schemes[s]));
    rep.antennas = scenario.antennas;
    rep.users_per_cell = scenario.users_per_cell;
    rep.reuse_factor = scenario.reuse_factor;
    rep.cells = drop.cells;
    rep.seed = options.seed;
    rep.n_real = n;
    rep.active = drop.active;
    rep.ul_rate = acc.ul_log / n;
    rep.ul_se = scenario.ul_fraction * prelog * rep.ul_rate;
    rep.dl_sinr = RVector::Zero(LK);
    rep.dl_se = RVector::Zero(LK);
    if (options.downlink) {
      const RVector gamma = acc.gnorm / n;
      for (int u = 0; u < LK; ++u) {
        if (!drop.active[u]) continue;
        if (!(gamma(u) > 0.0)) {
          throw UndefinedSinrError("zero precoder for user " + std::to_string(u));
        }
        const double signal = powers.dl(u) * std::norm(acc.own(u) / double(n)) / gamma(u);
        double total_rx = 0.0;
        for (int lm = 0; lm < LK; ++lm) {
          if (!drop.active[lm] || powers.dl(lm) == 0.0) continue;
          total_rx += powers.dl(lm) * acc.cross(lm, u) / (n * gamma(lm));
        }
        const double den = total_rx - signal + scenario.noise_power;
        if (!(den > 0.0)) {
          throw InsufficientSamplesError("non-positive downlink interference estimate for user " +
                                         std::to_string(u));
        }
        rep.dl_sinr(u) = signal / den;
        rep.dl_se(u) = scenario.dl_fraction() * prelog * std::log2(1.0 + rep.dl_sinr(u));
      }
    }
    rep.joint_se = rep.ul_se + rep.dl_se;
    if (options.keep_samples) rep.ul_sinr_samples = acc.samples;
    reports.push_back(std::move(rep));
  }
  return reports;
}

SeReport uplink_se(DetectorKind scheme, const NetworkScenario& scenario,
                   const UserDrop& drop, const PowerProfile& powers, int n_real,
                   std::uint64_t seed) {
  McOptions opt;
  opt.n_real = n_real;
  opt.seed = seed;
  opt.downlink = false;
  return evaluate_schemes(scenario, drop, powers, {scheme}, opt).front();
}

RVector downlink_sinr(DetectorKind scheme, const NetworkScenario& scenario,
                      const UserDrop& drop, const PowerProfile& powers, int n_real,
                      std::uint64_t seed) {
  McOptions opt;
  opt.n_real = n_real;
  opt.seed = seed;
  return evaluate_schemes(scenario, drop, powers, {scheme}, opt).front().dl_sinr;
}

SeReport joint_se(const SeReport& ul, const SeReport& dl, const NetworkScenario& scenario) {
  if (ul.scheme != dl.scheme || ul.antennas != dl.antennas ||
      ul.users_per_cell != dl.users_per_cell || ul.reuse_factor != dl.reuse_factor ||
      ul.cells != dl.cells || ul.active != dl.active) {
    throw ConfigError("uplink and downlink reports describe different runs");
  }
  SeReport out = ul;
  out.dl_sinr = dl.dl_sinr;
  out.ul_se = scenario.ul_fraction * scenario.payload_fraction() * ul.ul_rate;
  out.dl_se = RVector::Zero(dl.dl_sinr.size());
  for (Eigen::Index u = 0; u < out.dl_se.size(); ++u) {
    if (out.active[u]) {
      out.dl_se(u) = scenario.dl_fraction() * scenario.payload_fraction() *
                     std::log2(1.0 + dl.dl_sinr(u));
    }
  }
  out.joint_se = out.ul_se + out.dl_se;
  return out;
}

}  // namespace mmimo
