// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nqs3d/kz.hpp"
#include "nqs3d/ode.hpp"
#include "support/flow_oracle.hpp"

using nqs::CollapseCurve;
using nqs::CollapseParams;

TEST_CASE("flow right-hand side fixed points") {
  // Gaussian fixed point: mean-field dr/dl = 2r.
  auto g = nqs::rg_flow_rhs(0.0, 0.7);
  CHECK(g.du_dl == 0.0);
  CHECK(g.dr_dl == doctest::Approx(1.4).epsilon(1e-15));
  // Two-loop zero of the coupling beta function.
  auto z = nqs::rg_flow_rhs(9.0 / 17.0, 1.0);
  CHECK(z.du_dl == doctest::Approx(0.0).epsilon(1e-15));
  // Criticality is flow invariant.
  CHECK(nqs::rg_flow_rhs(0.3, 0.0).dr_dl == 0.0);
  // Generic point, direct arithmetic.
  auto v = nqs::rg_flow_rhs(0.2, 0.5);
  CHECK(v.du_dl == doctest::Approx(-1.5 * 0.04 + (17.0 / 6.0) * 0.008).epsilon(1e-14));
  CHECK(v.dr_dl == doctest::Approx((2.0 - 0.1 + (5.0 / 12.0) * 0.04) * 0.5).epsilon(1e-14));
}

TEST_CASE("running coupling endpoints and asymptote") {
  CHECK(nqs::running_coupling(0.25, 0.0) == doctest::Approx(0.25).epsilon(1e-15));
  // One-loop decay u ~ 2/(3 l) at large l.
  const double u = nqs::running_coupling(0.1, 1e6);
  CHECK(u * 1.5 * 1e6 == doctest::Approx(1.0).epsilon(0.01));
  CHECK_THROWS(nqs::running_coupling(9.0 / 17.0, 1.0));  // pole of the resummation
  CHECK_THROWS(nqs::running_coupling(-0.1, 1.0));
  CHECK_THROWS(nqs::running_coupling(0.1, -1.0));
}

TEST_CASE("running coupling tracks the exact flow within 1% for l in [10, 1e4]") {
  const double u0 = 0.1;
  double worst = 0.0;
  for (double ell : {10.0, 31.6, 100.0, 1000.0, 10000.0}) {
    const double exact = nqs::test::exact_running_coupling(u0, ell);
    const double closed = nqs::running_coupling(u0, ell);
    worst = std::max(worst, std::abs(closed - exact) / exact);
  }
  CHECK(worst < 0.01);
}

TEST_CASE("exact parametric oracle matches brute-force integration of the rhs") {
  // Sanity for the oracle itself: integrate du/dl numerically and compare.
  const double u0 = 0.2, ell = 25.0;
  auto rhs = [](double, const Eigen::VectorXd& y) {
    return Eigen::VectorXd::Constant(1, nqs::rg_flow_rhs(y(0), 1.0).du_dl);
  };
  Eigen::VectorXd y = Eigen::VectorXd::Constant(1, u0);
  y = nqs::integrate_rk45(rhs, y, 0.0, ell);
  CHECK(y(0) == doctest::Approx(nqs::test::exact_running_coupling(u0, ell)).epsilon(1e-8));
}

TEST_CASE("flow integration matches the exact parametric endpoint") {
  for (double u0 : {0.05, 0.1, 0.3}) {
    for (double r : {1e-2, 1e-6, 1e-12}) {
      const auto want = nqs::test::exact_flow_endpoint(u0, r);
      const auto got = nqs::integrate_flow(u0, r);
      CHECK(got.xi == doctest::Approx(want.xi).epsilon(1e-8));
      CHECK(got.u_final == doctest::Approx(want.u_final).epsilon(1e-8));
      CHECK(got.ell_final == doctest::Approx(want.ell_final).epsilon(1e-8));
    }
  }
  CHECK_THROWS(nqs::integrate_flow(0.1, 1.5));  // r must start below 1
  CHECK_THROWS(nqs::integrate_flow(0.6, 0.1));  // u0 beyond the resummation pole
}

TEST_CASE("subleading correction G_mu") {
  // ln(1) = 0 leaves the constant part.
  CHECK(nqs::g_correction(0.5, 0.0) ==
        doctest::Approx(5.0 / 27.0 + 1.0 / 1.5).epsilon(1e-14));
  const double mu = 0.2, x = 7.0;
  CHECK(nqs::g_correction(mu, x) ==
        doctest::Approx(5.0 / 27.0 + 1.0 / (3.0 * mu) -
                        (34.0 / 81.0) * std::log(1.0 + mu * x / 3.0))
            .epsilon(1e-14));
  CHECK_THROWS(nqs::g_correction(-1.0, 1.0));
}

TEST_CASE("refined correlation length: form, limit, and guards") {
  nqs::RefinedXiParams p;
  p.P = 1.3;
  p.r0 = 0.8;
  p.mu = 0.4;
  const double r = 1e-5;
  const double x = std::log(p.r0 / r);
  const double want =
      p.P * std::pow(r, -0.5) * std::pow(x, 1.0 / 6.0) * (1.0 + nqs::g_correction(p.mu, x) / x);
  CHECK(nqs::correlation_length_refined(r, p) == doctest::Approx(want).epsilon(1e-14));

  // Leading behavior: the bracket tends to 1 as r -> 0.
  const double r_deep = 1e-30;
  const double x_deep = std::log(p.r0 / r_deep);
  const double ratio = nqs::correlation_length_refined(r_deep, p) /
                       (p.P * std::pow(r_deep, -0.5) * std::pow(x_deep, 1.0 / 6.0));
  CHECK(ratio == doctest::Approx(1.0).epsilon(0.01));

  CHECK_THROWS(nqs::correlation_length_refined(0.9, p));  // r >= r0
  CHECK_THROWS(nqs::correlation_length_refined(-1e-3, p));
}

TEST_CASE("freeze-out closed form, z = 1 identification, and guards") {
  const double A = 0.34673, mu = 0.19376, C = 81.18926;
  for (double tau : {0.15, 0.5, 2.0, 8.0}) {
    const auto f = nqs::freeze_out(tau, A, mu, C);
    const double x = std::log(C * tau);
    const double want = A * std::cbrt(tau) * std::pow(x, 1.0 / 9.0) *
                        (1.0 + nqs::g_correction(mu, x) / x);
    CHECK(f.t_hat == doctest::Approx(want).epsilon(1e-14));
    CHECK(f.xi_hat == f.t_hat);
    CHECK(f.t_hat > 0.0);
  }
  // Monotone increasing over the physical range.
  double prev = 0.0;
  for (double tau = 0.15; tau <= 8.0; tau *= 1.5) {
    const double cur = nqs::freeze_out(tau, A, mu, C).t_hat;
    CHECK(cur > prev);
    prev = cur;
  }
  CHECK_THROWS(nqs::freeze_out(0.01, A, mu, 10.0));  // C tau <= 1
  CHECK_THROWS(nqs::freeze_out(std::exp(1.0), 1.0, 50.0, 1.0));  // negative bracket
}

TEST_CASE("effective size") {
  CHECK(nqs::effective_size(std::exp(1.0)) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(nqs::effective_size(5.0) == doctest::Approx(5.0 * std::pow(std::log(5.0), 0.25))
                                        .epsilon(1e-10));
  CHECK(nqs::effective_size(5.0) == doctest::Approx(5.63).epsilon(1e-3));
  double prev = 0.0;
  for (double L = 2.0; L <= 12.0; L += 1.0) {
    const double cur = nqs::effective_size(L);
    CHECK(cur > prev);
    prev = cur;
  }
  CHECK_THROWS(nqs::effective_size(1.0));
}

TEST_CASE("rescaling maps synthetic fixed-point data onto the master curve") {
  const double xi_hat = 3.7, K = 0.3;
  nqs::RescaleInput in;
  in.xi_hat = xi_hat;
  for (int R = 1; R <= 6; ++R) {
    in.x.push_back(R);
    in.y.push_back(K * std::exp(-R / xi_hat) / (xi_hat * xi_hat));
  }
  const auto out = nqs::rescale_observable(nqs::RescaleKind::kCorrelation, in);
  for (std::size_t i = 0; i < out.x.size(); ++i) {
    CHECK(out.x[i] == doctest::Approx(in.x[i] / xi_hat).epsilon(1e-14));
    CHECK(out.y[i] == doctest::Approx(K * std::exp(-out.x[i])).epsilon(1e-12));
  }
}

TEST_CASE("rescaling kinds apply the published scaling dimensions") {
  nqs::RescaleInput in;
  in.x = {2.0};
  in.y = {5.0};
  in.xi_hat = 4.0;
  in.t_hat = 8.0;
  in.L_eff = 10.0;
  // Size-scaled kinds read per-point xi_hat values off the x channel.
  auto q = nqs::rescale_observable(nqs::RescaleKind::kExcessEnergy, in);
  CHECK(q.x[0] == doctest::Approx(in.x[0] / in.L_eff).epsilon(1e-14));
  CHECK(q.y[0] == doctest::Approx(5.0 * 1e4).epsilon(1e-12));  // Q * L_eff^4
  auto f = nqs::rescale_observable(nqs::RescaleKind::kQfiSize, in);
  CHECK(f.x[0] == doctest::Approx(in.x[0] / in.L_eff).epsilon(1e-14));
  CHECK(f.y[0] == doctest::Approx(0.5).epsilon(1e-14));  // f_Q / L_eff
  auto t = nqs::rescale_observable(nqs::RescaleKind::kQfiTime, in);
  CHECK(t.x[0] == doctest::Approx(2.0 / 8.0).epsilon(1e-14));
  CHECK(t.y[0] == doctest::Approx(5.0 / 4.0).epsilon(1e-14));  // f_Q / xi_hat

  // Two synthetic sizes generated from one scaling function collapse.
  auto master = [](double z) { return 0.7 * std::exp(-2.0 * z); };
  nqs::RescaledCurve c6, c8;
  for (double L : {6.0, 8.0}) {
    const double L_eff = nqs::effective_size(L);
    nqs::RescaleInput d;
    d.L_eff = L_eff;
    for (double xi : {1.0, 2.0, 3.0}) {
      d.x.push_back(xi);
      d.y.push_back(master(xi / L_eff) / std::pow(L_eff, 4.0));
    }
    (L == 6.0 ? c6 : c8) = nqs::rescale_observable(nqs::RescaleKind::kExcessEnergy, d);
  }
  for (std::size_t i = 0; i < c6.x.size(); ++i) {
    CHECK(c6.y[i] == doctest::Approx(master(c6.x[i])).epsilon(1e-12));
    CHECK(c8.y[i] == doctest::Approx(master(c8.x[i])).epsilon(1e-12));
  }
}

namespace {

std::vector<CollapseCurve> synthetic_collapse(const CollapseParams& p, double noise,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<CollapseCurve> data;
  for (double tau : {0.15, 0.3, 0.6, 1.2, 2.4, 4.8}) {
    const double xi = nqs::freeze_out(tau, p.A, p.mu, p.C).xi_hat;
    CollapseCurve c;
    c.tau_q = tau;
    for (int R = 1; R <= 6; ++R) {
      c.R.push_back(R);
      double v = p.K * std::exp(-R / xi) / (xi * xi);
      if (noise > 0.0) v *= 1.0 + noise * g(rng);
      c.C.push_back(v);
    }
    data.push_back(std::move(c));
  }
  return data;
}

}  // namespace

TEST_CASE("collapse cost is zero on exact synthetic data and matches the rms form") {
  const CollapseParams gen{0.34673, 0.19376, 81.18926, 0.21475};
  auto data = synthetic_collapse(gen, 0.0, 0);
  CHECK(nqs::collapse_chi(gen, data) <= 1e-14);

  // Hand-computed rms at a displaced parameter point, from stored xi values.
  CollapseParams q = gen;
  q.K = 0.3;
  double acc = 0.0;
  int n = 0;
  for (const auto& c : data) {
    const double xi = nqs::freeze_out(c.tau_q, q.A, q.mu, q.C).xi_hat;
    for (std::size_t i = 0; i < c.R.size(); ++i) {
      const double d = xi * xi * c.C[i] - q.K * std::exp(-c.R[i] / xi);
      acc += d * d;
      ++n;
    }
  }
  CHECK(nqs::collapse_chi(q, data) == doctest::Approx(std::sqrt(acc / n)).epsilon(1e-12));
}

TEST_CASE("frozen-scale K is the ordinary least-squares solution") {
  const CollapseParams gen{0.34673, 0.19376, 81.18926, 0.21475};
  auto data = synthetic_collapse(gen, 0.02, 5);
  // With (A, mu, C) frozen, chi^2 is quadratic in K; the OLS closed form
  // K* = sum(e_i y_i) / sum(e_i^2) with y = xi^2 C, e = exp(-R/xi).
  double num = 0.0, den = 0.0;
  for (const auto& c : data) {
    const double xi = nqs::freeze_out(c.tau_q, gen.A, gen.mu, gen.C).xi_hat;
    for (std::size_t i = 0; i < c.R.size(); ++i) {
      const double e = std::exp(-c.R[i] / xi);
      num += e * xi * xi * c.C[i];
      den += e * e;
    }
  }
  const double k_ols = num / den;
  CollapseParams p = gen;
  p.K = k_ols;
  const double chi_star = nqs::collapse_chi(p, data);
  for (double dk : {-1e-3, 1e-3}) {
    CollapseParams q = gen;
    q.K = k_ols + dk;
    CHECK(nqs::collapse_chi(q, data) > chi_star);
  }
}

TEST_CASE("collapse fit recovers the generator parameters from noiseless data") {
  const CollapseParams gen{0.34673, 0.19376, 81.18926, 0.21475};
  auto data = synthetic_collapse(gen, 0.0, 0);
  const auto fit = nqs::fit_collapse(data);
  CHECK(fit.chi < 1e-10);
  CHECK(std::abs(fit.params.A - gen.A) / gen.A < 1e-3);
  CHECK(std::abs(fit.params.mu - gen.mu) / gen.mu < 1e-3);
  CHECK(std::abs(fit.params.C - gen.C) / gen.C < 1e-3);
  CHECK(std::abs(fit.params.K - gen.K) / gen.K < 1e-3);
}

TEST_CASE("collapse fit tolerates small multiplicative noise") {
  // Recovery under noise needs a conditioned design: ramp scales reaching
  // down to C*tau near 1 (small ln(C*tau) separates C and mu from the
  // amplitude) and enough curves to average the noise. On narrow grids the
  // three xi-hat parameters are nearly degenerate and 1% data noise blows
  // up to tens of percent on mu and C.
  const CollapseParams gen{0.34673, 0.19376, 81.18926, 0.21475};
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<CollapseCurve> data;
  for (int i = 0; i < 384; ++i) {
    const double tau = 0.02 * std::pow(16.0 / 0.02, i / 383.0);
    const double xi = nqs::freeze_out(tau, gen.A, gen.mu, gen.C).xi_hat;
    CollapseCurve c;
    c.tau_q = tau;
    for (int R = 1; R <= 6; ++R) {
      c.R.push_back(R);
      c.C.push_back(gen.K * std::exp(-R / xi) / (xi * xi) * (1.0 + 0.01 * g(rng)));
    }
    data.push_back(std::move(c));
  }
  const auto fit = nqs::fit_collapse(data);
  CHECK(std::abs(fit.params.A - gen.A) / gen.A < 0.05);
  CHECK(std::abs(fit.params.mu - gen.mu) / gen.mu < 0.05);
  CHECK(std::abs(fit.params.C - gen.C) / gen.C < 0.05);
  CHECK(std::abs(fit.params.K - gen.K) / gen.K < 0.05);
}

TEST_CASE("collapse input validation") {
  CHECK_THROWS(nqs::collapse_chi({1, 1, 1, 1}, {}));
  CHECK_THROWS(nqs::fit_collapse({}));
  CollapseCurve bad;
  bad.tau_q = 1.0;
  bad.R = {1.0, 2.0};
  bad.C = {0.5};  // length mismatch
  CHECK_THROWS(nqs::collapse_chi({1, 1, 1, 1}, {bad}));
}
