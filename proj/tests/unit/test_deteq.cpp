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

#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "mmimo/deteq.hpp"
#include "mmimo/mc_evaluator.hpp"

using namespace mmimo;
using mmimo::test::make_small_instance;

namespace {

std::vector<Covariance> scaled_list(const RVector& r) {
  std::vector<Covariance> out;
  for (int b = 0; b < r.size(); ++b) out.push_back(Covariance::scaled(r(b)));
  return out;
}

CMatrix random_hermitian_psd(int M, Rng& rng) {
  CMatrix a(M, M);
  fill_complex_gaussian(rng, a, 1.0);
  return a * a.adjoint() / M;
}

// Plain iteration of the dense equations with the perturbation rho I - x Theta,
// written independently of the library.
struct DenseOracle {
  std::vector<CMatrix> R;
  CMatrix theta;
  double rho;
  int M;

  std::pair<RVector, CMatrix> solve(double x) const {
    const int B = static_cast<int>(R.size());
    RVector delta = RVector::Ones(B);
    CMatrix T;
    for (int it = 0; it < 20000; ++it) {
      CMatrix a = rho * CMatrix::Identity(M, M) - x * theta;
      for (int b = 0; b < B; ++b) a += R[b] / (M * (1.0 + delta(b)));
      T = a.inverse();
      RVector next(B);
      for (int b = 0; b < B; ++b) next(b) = (R[b] * T).trace().real() / M;
      const double change = (next - delta).cwiseAbs().maxCoeff();
      delta = next;
      if (change < 1e-15) break;
    }
    return {delta, T};
  }
};

}  // namespace

TEST_CASE("symmetric instance has the golden-ratio solution") {
  for (int M : {4, 16, 64}) {
    const auto fp = solve_resolvent(scaled_list(RVector::Ones(M)), 1.0, M);
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int b = 0; b < M; ++b) CHECK(fp.delta(b) == doctest::Approx(golden).epsilon(1e-12));
    CHECK(fp.t_scaled == doctest::Approx(golden).epsilon(1e-12));
    const auto general = solve_resolvent_general(scaled_list(RVector::Ones(M)), 1.0, M);
    CHECK(general.delta(0) == doctest::Approx(golden).epsilon(1e-12));
  }
}

TEST_CASE("single covariance agrees with a bisection root") {
  const double r = 2.7, rho = 0.3;
  const int M = 5;
  auto f = [&](double d) { return d - r / (r / (M * (1.0 + d)) + rho); };
  double lo = 0.0, hi = r / rho;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  const auto fp = solve_resolvent_scaled(RVector::Constant(1, r), rho, M);
  CHECK(fp.delta(0) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-11));
}

TEST_CASE("degenerate inputs") {
  const int M = 6;
  const auto zero = solve_resolvent(scaled_list(RVector::Zero(3)), 0.5, M);
  CHECK(zero.delta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.t_scaled == doctest::Approx(2.0));

  std::vector<Covariance> zeros_general(3, Covariance::general(CMatrix::Zero(M, M)));
  const auto zg = solve_resolvent_general(zeros_general, 0.5, M);
  CHECK((zg.T - CMatrix::Identity(M, M) * 2.0).norm() < 1e-14);
  const auto dI = solve_resolvent_derivative(zeros_general, Covariance::scaled(1.0), 0.5, M, zg);
  CHECK((dI.T_prime - CMatrix::Identity(M, M) * 4.0).norm() < 1e-13);

  const RVector r = RVector::LinSpaced(4, 0.5, 2.0);
  const auto fp = solve_resolvent_scaled(r, 0.2, M);
  const auto d0 = solve_resolvent_derivative_scaled(r, 0.0, M, fp);
  CHECK(d0.delta_prime.cwiseAbs().maxCoeff() == 0.0);
  CHECK(d0.t_prime == 0.0);

  CHECK_THROWS_AS(solve_resolvent_scaled(r, 0.0, M), ConfigError);
  FixedPointOptions tight;
  tight.max_iter = 2;
  CHECK_THROWS_AS(solve_resolvent_scaled(r, 1e-3, M, tight), ConvergenceError);
}

TEST_CASE("scaled and general paths agree on random instances") {
  Rng rng(77);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int M = 2 + static_cast<int>(unif(rng) * 10);
    const int B = 1 + static_cast<int>(unif(rng) * 8);
    RVector r(B);
    for (int b = 0; b < B; ++b) r(b) = std::pow(10.0, 2.0 * unif(rng) - 1.0);
    const double rho = std::pow(10.0, 2.0 * unif(rng) - 1.5);
    const double theta = std::pow(10.0, unif(rng) - 0.5);
    const auto list = scaled_list(r);
    const auto s = solve_resolvent_scaled(r, rho, M);
    const auto g = solve_resolvent_general(list, rho, M);
    CHECK((s.delta - g.delta).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, s.delta.maxCoeff()));
    CHECK(s.normalized_trace() == doctest::Approx(g.normalized_trace()).epsilon(1e-10));
    const auto ds = solve_resolvent_derivative_scaled(r, theta, M, s);
    const auto dg = solve_resolvent_derivative(list, Covariance::general(
                                                         CMatrix::Identity(M, M) * theta),
                                               rho, M, g);
    CHECK((ds.delta_prime - dg.delta_prime).cwiseAbs().maxCoeff() <=
          1e-10 * std::max(1.0, ds.delta_prime.cwiseAbs().maxCoeff()));
    CHECK(ds.normalized_trace() == doctest::Approx(dg.normalized_trace()).epsilon(1e-10));
    CHECK((dg.T_prime - CMatrix::Identity(M, M) * ds.t_prime).norm() <=
          1e-10 * std::max(1.0, std::abs(ds.t_prime)) * M);
  }
}

TEST_CASE("residuals shrink geometrically") {
  const RVector r = RVector::LinSpaced(20, 0.1, 3.0);
  const auto fp = solve_resolvent_scaled(r, 0.05, 16);
  const auto& h = fp.residual_history;
  REQUIRE(h.size() >= 3);
  CHECK(fp.residual <= 1e-12 * std::max(1.0, fp.delta.maxCoeff()));
  for (std::size_t i = 2; i < h.size(); ++i) CHECK(h[i] <= h[i - 1]);
  // Asymptotic contraction factor below one.
  const std::size_t n = h.size();
  if (n >= 5 && h[n - 4] > 0) CHECK(std::pow(h[n - 1] / h[n - 4], 1.0 / 3.0) < 0.99);
}

TEST_CASE("derivative matches finite differences of a dense oracle") {
  Rng rng(9);
  const int M = 6;
  DenseOracle o;
  o.M = M;
  o.rho = 0.4;
  for (int b = 0; b < 3; ++b) o.R.push_back(random_hermitian_psd(M, rng));
  o.theta = random_hermitian_psd(M, rng);

  std::vector<Covariance> R;
  for (const auto& m : o.R) R.push_back(Covariance::general(m));
  const auto fp = solve_resolvent(R, o.rho, M);
  const auto [delta0, T0] = o.solve(0.0);
  CHECK((fp.delta - delta0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((fp.T - T0).norm() < 1e-12);

  const double h = 1e-5;
  const auto [dp, Tp] = o.solve(h);
  const auto [dm, Tm] = o.solve(-h);
  const RVector fd_delta = (dp - dm) / (2 * h);
  const CMatrix fd_T = (Tp - Tm) / (2 * h);
  const auto der = solve_resolvent_derivative(R, Covariance::general(o.theta), o.rho, M, fp);
  CHECK((der.delta_prime - fd_delta).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((der.T_prime - fd_T).norm() < 1e-7);

  // Linear in Theta.
  const auto der2 =
      solve_resolvent_derivative(R, Covariance::general(2.5 * o.theta), o.rho, M, fp);
  CHECK((der2.T_prime - 2.5 * der.T_prime).norm() < 1e-10 * der.T_prime.norm());
}

TEST_CASE("scaled derivative with identity perturbation is minus the rho-derivative") {
  const RVector r = RVector::LinSpaced(5, 0.3, 4.0);
  const int M = 12;
  const double rho = 0.25, h = 1e-6;
  const auto fp = solve_resolvent_scaled(r, rho, M);
  const auto plus = solve_resolvent_scaled(r, rho + h, M);
  const auto minus = solve_resolvent_scaled(r, rho - h, M);
  const auto der = solve_resolvent_derivative_scaled(r, 1.0, M, fp);
  CHECK(der.t_prime == doctest::Approx(-(plus.t_scaled - minus.t_scaled) / (2 * h)).epsilon(1e-6));
  for (int b = 0; b < 5; ++b) {
    CHECK(der.delta_prime(b) ==
          doctest::Approx(-(plus.delta(b) - minus.delta(b)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("report quantities follow the per-BS scalars") {
  const auto s = make_small_instance(3, 2, 1, 32, 5);
  const auto rep = ul_sinr_approx(s.drop, s.powers, s.stats, s.scenario);
  const int B = s.stats.pilot_length;
  for (int j = 0; j < 3; ++j) {
    const RVector r =
        (s.stats.lambda.row(j).array() * s.stats.alpha.row(j).array() * B).transpose();
    const auto fp = solve_resolvent_scaled(r, (1.0 + s.stats.phi(j)) / 32, 32);
    CHECK(rep.t(j) == doctest::Approx(fp.t_scaled).epsilon(1e-12));
    for (int k = 0; k < 2; ++k) {
      const int u = j * 2 + k;
      CHECK(rep.delta(j, k) ==
            doctest::Approx(s.stats.alpha(j, s.drop.pilot_index[u]) * B * fp.t_scaled)
                .epsilon(1e-12));
      CHECK(rep.theta_dprime(j, k) ==
            doctest::Approx(s.stats.alpha(j, s.drop.pilot_index[u]) * B * rep.t_dprime(j))
                .epsilon(1e-12));
    }
  }
  CHECK((rep.ul_sinr.array() > 0).all());
}

TEST_CASE("downlink with a single transmitting user is noise limited") {
  auto s = make_small_instance(2, 2, 1, 40, 15);
  s.powers.dl.setZero();
  s.powers.dl(2) = 3.0;
  DetEqReport rep = ul_sinr_approx(s.drop, s.powers, s.stats, s.scenario);
  dl_sinr_approx(rep, s.drop, s.powers, s.scenario);
  const double d = s.drop.gains(1, 2);
  const double delta = rep.delta_of(2);
  const double expected =
      3.0 * s.powers.pilot(2) * d * d * delta * delta / rep.theta_dprime_of(2) / (1.0 / 40);
  CHECK(rep.dl_sinr(2) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(rep.dl_sinr(0) == 0.0);
}

TEST_CASE("approximation tracks Monte Carlo when estimation errors are negligible") {
  // Distinct pilots per cell and strong pilots leave almost no estimation
  // error, the one term the approximation does not carry.
  auto s = make_small_instance(3, 2, 3, 256, 44);
  s.powers.pilot *= 1000.0;
  s.powers.dl = s.powers.ul;
  const auto rep = deterministic_equivalents(s.drop, s.powers, s.scenario);
  McOptions opt;
  opt.n_real = 1000;
  opt.seed = 8;
  const auto mc =
      evaluate_schemes(s.scenario, s.drop, s.powers, {DetectorKind::kMultiCellMmse}, opt).front();
  for (int u = 0; u < 6; ++u) {
    CHECK(std::log2(1.0 + rep.ul_sinr(u)) == doctest::Approx(mc.ul_rate(u)).epsilon(0.01));
    CHECK(std::log2(1.0 + rep.dl_sinr(u)) ==
          doctest::Approx(std::log2(1.0 + mc.dl_sinr(u))).epsilon(0.01));
  }
}

TEST_CASE("single-user approximation counts noise but not the estimation error") {
  // Exact M-MMSE SINR of a lone user is tau |hhat|^2 / (sigma^2 + phi), which
  // concentrates at M tau phi_hat / (sigma^2 + phi). The approximation tends
  // to M tau phi_hat / sigma^2.
  const auto s = make_small_instance(1, 1, 1, 16384, 44);
  const auto rep = deterministic_equivalents(s.drop, s.powers, s.scenario);
  const double sigma2 = s.scenario.noise_power;
  const double with_error =
      16384 * s.powers.ul(0) * s.stats.phi_hat_coeff(0, 0) / (sigma2 + s.stats.phi(0));
  CHECK(rep.ul_sinr(0) / with_error ==
        doctest::Approx((sigma2 + s.stats.phi(0)) / sigma2).epsilon(1e-3));
}

TEST_CASE("inactive users get zero SINR") {
  auto s = make_small_instance(2, 3, 1, 20, 2);
  s.drop.active[4] = false;
  s.powers.pilot(4) = s.powers.ul(4) = s.powers.dl(4) = 0.0;
  const auto rep = deterministic_equivalents(s.drop, s.powers, s.scenario);
  CHECK(rep.ul_sinr(4) == 0.0);
  CHECK(rep.dl_sinr(4) == 0.0);
  CHECK(rep.ul_sinr(3) > 0.0);
}
