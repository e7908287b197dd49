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

#include "mmimo/filters.hpp"

#include <cmath>
#include <string>

#include "mmimo/rng.hpp"

namespace mmimo {

namespace {

// (c I + S^{1/2} G S^{1/2}) is Hermitian positive definite for c > 0.
Eigen::LLT<CMatrix> factor_regularized(const CMatrix& gram, const RVector& sqrt_weights,
                                       double ridge) {
  CMatrix s = sqrt_weights.asDiagonal() * gram * sqrt_weights.asDiagonal();
  s.diagonal().array() += ridge;
  Eigen::LLT<CMatrix> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("regularized detector matrix is not positive definite");
  }
  return llt;
}

// Woodbury form of (U U^H + c I)^{-1} target with U = H S^{1/2} and the
// targets given as coefficient columns in the span of H.
CMatrix regularized_inverse_coefficients(const CMatrix& gram, const RVector& weights,
                                         double ridge, const CMatrix& targets) {
  const RVector sqrt_w = weights.cwiseSqrt();
  const auto llt = factor_regularized(gram, sqrt_w, ridge);
  const CMatrix rhs = sqrt_w.asDiagonal() * (gram * targets);
  const CMatrix correction = sqrt_w.asDiagonal() * llt.solve(rhs);
  return (targets - correction) / ridge;
}

const NetworkScenario& scenario_of(const DetectorContext& ctx) {
  if (ctx.scenario == nullptr || ctx.drop == nullptr || ctx.powers == nullptr) {
    throw ConfigError("detector context is incomplete");
  }
  return *ctx.scenario;
}

// B x K matrix with column k equal to scale_k e_{i_jk}.
CMatrix pilot_selection(const DetectorContext& ctx, int j, bool scaled) {
  const auto& sc = scenario_of(ctx);
  const int K = sc.users_per_cell;
  const int B = sc.pilot_length();
  CMatrix e = CMatrix::Zero(B, K);
  for (int k = 0; k < K; ++k) {
    const int u = j * K + k;
    if (!ctx.drop->active[u]) continue;
    const double s = scaled ? estimate_scale(*ctx.drop, *ctx.powers, j, u) : 1.0;
    e(ctx.drop->pilot_index[u], k) = s;
  }
  return e;
}

}  // namespace

std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kMultiCellMmse:
      return "M-MMSE";
    case DetectorKind::kSingleCellMmse:
      return "S-MMSE";
    case DetectorKind::kMultiCellZf:
      return "M-ZF";
    case DetectorKind::kMatchedFilter:
      return "MF";
  }
  return "?";
}

DetectorKind detector_from_string(std::string_view name) {
  if (name == "M-MMSE" || name == "M_MMSE") return DetectorKind::kMultiCellMmse;
  if (name == "S-MMSE" || name == "S_MMSE") return DetectorKind::kSingleCellMmse;
  if (name == "M-ZF" || name == "M_ZF") return DetectorKind::kMultiCellZf;
  if (name == "MF") return DetectorKind::kMatchedFilter;
  throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

void check_detector_supported(DetectorKind kind, const NetworkScenario& scenario) {
  if (kind == DetectorKind::kMultiCellZf && scenario.antennas <= scenario.pilot_length()) {
    throw UnsupportedConfigError("M-ZF needs M > beta*K (M = " +
                                 std::to_string(scenario.antennas) + ", B = " +
                                 std::to_string(scenario.pilot_length()) + ")");
  }
}

CMatrix m_mmse_coefficients(const CMatrix& gram, const DetectorContext& ctx, int j) {
  const auto& sc = scenario_of(ctx);
  const RVector lambda = ctx.stats->lambda.row(j).transpose();
  const double ridge = sc.noise_power + ctx.stats->phi(j);
  return regularized_inverse_coefficients(gram, lambda, ridge,
                                          pilot_selection(ctx, j, true));
}

double s_mmse_statistical_ridge(const DetectorContext& ctx, int j) {
  scenario_of(ctx);
  double z = 0.0;
  for (int u = 0; u < ctx.drop->total_users(); ++u) {
    const double tau = ctx.powers->ul(u);
    if (tau == 0.0) continue;
    if (ctx.drop->serving_cell(u) == j) {
      z += tau * ctx.stats->err_coeff(j, u);
    } else {
      z += tau * ctx.drop->gains(j, u);
    }
  }
  return z;
}

CMatrix s_mmse_coefficients(const CMatrix& gram, const DetectorContext& ctx, int j) {
  const auto& sc = scenario_of(ctx);
  const int K = sc.users_per_cell;
  const int B = sc.pilot_length();

  std::vector<int> own(K);
  RVector weights(K);
  for (int k = 0; k < K; ++k) {
    const int u = j * K + k;
    own[k] = ctx.drop->pilot_index[u];
    const double s = estimate_scale(*ctx.drop, *ctx.powers, j, u);
    weights(k) = ctx.powers->ul(u) * s * s;
  }
  CMatrix own_gram(K, K);
  for (int a = 0; a < K; ++a) {
    for (int b = 0; b < K; ++b) own_gram(a, b) = gram(own[a], own[b]);
  }
  CMatrix targets = CMatrix::Zero(K, K);
  for (int k = 0; k < K; ++k) {
    const int u = j * K + k;
    if (ctx.drop->active[u]) targets(k, k) = estimate_scale(*ctx.drop, *ctx.powers, j, u);
  }
  double ridge = sc.noise_power;
  if (ctx.s_mmse_model == InterferenceModel::kStatistical) {
    ridge += s_mmse_statistical_ridge(ctx, j);
  }
  const CMatrix own_coeff = regularized_inverse_coefficients(own_gram, weights, ridge, targets);

  CMatrix coeff = CMatrix::Zero(B, K);
  for (int a = 0; a < K; ++a) coeff.row(own[a]) = own_coeff.row(a);
  return coeff;
}

CMatrix m_zf_coefficients(const CMatrix& gram, const DetectorContext& ctx, int j) {
  check_detector_supported(DetectorKind::kMultiCellZf, scenario_of(ctx));
  Eigen::LLT<CMatrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("estimated directions are rank deficient; M-ZF undefined");
  }
  return llt.solve(pilot_selection(ctx, j, false));
}

CMatrix mf_coefficients(const DetectorContext& ctx, int j) {
  return pilot_selection(ctx, j, true);
}

CMatrix detector_coefficients(const CMatrix& gram, const DetectorContext& ctx, int j) {
  switch (ctx.kind) {
    case DetectorKind::kMultiCellMmse:
      return m_mmse_coefficients(gram, ctx, j);
    case DetectorKind::kSingleCellMmse:
      return s_mmse_coefficients(gram, ctx, j);
    case DetectorKind::kMultiCellZf:
      return m_zf_coefficients(gram, ctx, j);
    case DetectorKind::kMatchedFilter:
      return mf_coefficients(ctx, j);
  }
  throw ConfigError("unknown detector kind");
}

FilterBank build_filter_bank(const ChannelEstimate& est, const DetectorContext& ctx) {
  const auto& sc = scenario_of(ctx);
  check_detector_supported(ctx.kind, sc);
  FilterBank bank;
  bank.kind = ctx.kind;
  const int L = static_cast<int>(est.directions.size());
  bank.coefficients.resize(L);
  bank.detectors.resize(L);
  for (int j = 0; j < L; ++j) {
    const CMatrix& h = est.directions[j];
    const CMatrix gram = h.adjoint() * h;
    bank.coefficients[j] = detector_coefficients(gram, ctx, j);
    bank.detectors[j] = h * bank.coefficients[j];
  }
  return bank;
}

FilterBank m_mmse_detector(const ChannelEstimate& est, const EstimationStatistics& stats,
                           const UserDrop& drop, const PowerProfile& powers,
                           const NetworkScenario& scenario) {
  DetectorContext ctx{&scenario, &drop, &powers, &stats, DetectorKind::kMultiCellMmse,
                      InterferenceModel::kStatistical};
  return build_filter_bank(est, ctx);
}

FilterBank s_mmse_detector(const ChannelEstimate& est, const EstimationStatistics& stats,
                           const UserDrop& drop, const PowerProfile& powers,
                           const NetworkScenario& scenario, InterferenceModel model) {
  DetectorContext ctx{&scenario, &drop, &powers, &stats, DetectorKind::kSingleCellMmse,
                      model};
  return build_filter_bank(est, ctx);
}

FilterBank m_zf_detector(const ChannelEstimate& est, const UserDrop& drop,
                         const PowerProfile& powers, const NetworkScenario& scenario) {
  DetectorContext ctx{&scenario, &drop, &powers, nullptr, DetectorKind::kMultiCellZf,
                      InterferenceModel::kStatistical};
  return build_filter_bank(est, ctx);
}

FilterBank mf_detector(const ChannelEstimate& est, const UserDrop& drop,
                       const PowerProfile& powers, const NetworkScenario& scenario) {
  DetectorContext ctx{&scenario, &drop, &powers, nullptr, DetectorKind::kMatchedFilter,
                      InterferenceModel::kStatistical};
  return build_filter_bank(est, ctx);
}

DetectorFactory make_detector_factory(const DetectorContext& ctx) {
  return [ctx](std::uint64_t seed) {
    if (ctx.stats == nullptr) throw ConfigError("detector factory needs statistics");
    const ChannelEstimate est =
        sample_estimate_directions(*ctx.stats, ctx.scenario->antennas, seed);
    return build_filter_bank(est, ctx);
  };
}

RMatrix estimate_gamma(const DetectorFactory& factory, int trials, std::uint64_t seed) {
  if (trials < 1) throw ConfigError("gamma_trials must be at least 1");
  RMatrix sum;
  for (int t = 0; t < trials; ++t) {
    const FilterBank bank =
        factory(derive_seed(seed, {tag(Stream::kGamma), static_cast<std::uint64_t>(t)}));
    const int L = static_cast<int>(bank.detectors.size());
    if (t == 0) sum = RMatrix::Zero(L, bank.detectors[0].cols());
    for (int j = 0; j < L; ++j) {
      sum.row(j) += bank.detectors[j].colwise().squaredNorm();
    }
  }
  return sum / static_cast<double>(trials);
}

void apply_precoder_normalization(FilterBank& bank, const RMatrix& gamma) {
  bank.gamma = gamma;
  bank.precoders.resize(bank.detectors.size());
  for (std::size_t j = 0; j < bank.detectors.size(); ++j) {
    bank.precoders[j] = bank.detectors[j];
    for (Eigen::Index k = 0; k < bank.detectors[j].cols(); ++k) {
      const double g = gamma(static_cast<Eigen::Index>(j), k);
      if (g > 0.0) {
        bank.precoders[j].col(k) /= std::sqrt(g);
      } else {
        bank.precoders[j].col(k).setZero();
      }
    }
  }
}

FilterBank normalize_precoders(FilterBank bank, const DetectorFactory& factory,
                               int gamma_trials, std::uint64_t seed) {
  apply_precoder_normalization(bank, estimate_gamma(factory, gamma_trials, seed));
  return bank;
}

}  // namespace mmimo
