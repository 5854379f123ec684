// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "nqs3d/kz.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "nqs3d/fit.hpp"
#include "nqs3d/ode.hpp"

namespace nqs {
namespace {

constexpr double kUMax = 9.0 / 17.0;  // running_coupling pole location

// Large sentinel used as an optimizer barrier for invalid parameters.
constexpr double kBarrier = 1e100;

}  // namespace

RgFlow rg_flow_rhs(double u, double r) {
  RgFlow f;
  f.du_dl = -1.5 * u * u + (17.0 / 6.0) * u * u * u;
  f.dr_dl = (2.0 - 0.5 * u + (5.0 / 12.0) * u * u) * r;
  return f;
}

double running_coupling(double u0, double ell) {
  if (!(u0 > 0.0) || !(u0 < kUMax)) {
    throw std::invalid_argument("running_coupling: need 0 < u0 < 9/17");
  }
  if (!(ell >= 0.0)) throw std::invalid_argument("running_coupling: need ell >= 0");
  const double k = 17.0 / 9.0;
  const double denom = 1.0 + 1.5 * u0 * ell -
                       k * u0 * std::log(1.0 + 1.5 * u0 * ell / (1.0 - k * u0));
  return u0 / denom;
}

double g_correction(double mu, double x) {
  if (!(mu > 0.0)) throw std::invalid_argument("g_correction: need mu > 0");
  const double arg = 1.0 + mu * x / 3.0;
  if (!(arg > 0.0)) throw std::invalid_argument("g_correction: log argument <= 0");
  return 5.0 / 27.0 + 1.0 / (3.0 * mu) - (34.0 / 81.0) * std::log(arg);
}

double correlation_length_refined(double r, const RefinedXiParams& p) {
  if (!(r > 0.0)) throw std::invalid_argument("correlation_length_refined: need r > 0");
  if (!(p.P > 0.0) || !(p.r0 > 0.0) || !(p.mu > 0.0)) {
    throw std::invalid_argument("correlation_length_refined: parameters must be positive");
  }
  const double x = std::log(p.r0 / r);
  if (!(x > 0.0)) {
    throw std::invalid_argument("correlation_length_refined: need r < r0");
  }
  return p.P * std::pow(r, -0.5) * std::pow(x, 1.0 / 6.0) *
         (1.0 + g_correction(p.mu, x) / x);
}

FlowResult integrate_flow(double u0, double r_start, double rtol) {
  if (!(u0 > 0.0) || !(u0 < kUMax)) {
    throw std::invalid_argument("integrate_flow: need 0 < u0 < 9/17");
  }
  if (!(r_start > 0.0) || !(r_start < 1.0)) {
    throw std::invalid_argument("integrate_flow: need 0 < r_start < 1");
  }
  // State (u, ell) on the independent variable x = ln r. From dr/dl = D(u) r,
  // dx/dl = D(u), so du/dx = beta_u / D and dl/dx = 1/D; D > 0 for all u.
  auto rhs = [](double /*x*/, const Eigen::VectorXd& y) {
    const double u = y(0);
    const RgFlow f = rg_flow_rhs(u, 1.0);
    const double d = f.dr_dl;  // D(u) since r = 1 here
    return Eigen::VectorXd{{f.du_dl / d, 1.0 / d}};
  };
  Eigen::VectorXd y0{{u0, 0.0}};
  OdeOptions opt;
  opt.rtol = rtol;
  opt.atol = 1e-14;
  const Eigen::VectorXd yf = integrate_rk45(rhs, y0, std::log(r_start), 0.0, opt);
  FlowResult out;
  out.u_final = yf(0);
  out.ell_final = yf(1);
  out.xi = std::exp(yf(1));
  return out;
}

FreezeOut freeze_out(double tau_q, double A, double mu, double C) {
  if (!(tau_q > 0.0) || !(A > 0.0) || !(mu > 0.0) || !(C > 0.0)) {
    throw std::invalid_argument("freeze_out: parameters must be positive");
  }
  const double x = std::log(C * tau_q);
  if (!(x > 0.0)) {
    throw std::invalid_argument("freeze_out: C tau_q <= 1 is outside the scaling regime");
  }
  const double factor = 1.0 + g_correction(mu, x) / x;
  if (!(factor > 0.0)) {
    throw std::invalid_argument("freeze_out: correction factor not positive");
  }
  FreezeOut out;
  out.t_hat = A * std::cbrt(tau_q) * std::pow(x, 1.0 / 9.0) * factor;
  out.xi_hat = out.t_hat;
  return out;
}

double effective_size(double L) {
  if (!(L > 1.0)) throw std::invalid_argument("effective_size: need L > 1");
  return L * std::pow(std::log(L), 0.25);
}

RescaledCurve rescale_observable(RescaleKind kind, const RescaleInput& in) {
  if (in.x.size() != in.y.size()) {
    throw std::invalid_argument("rescale_observable: x/y length mismatch");
  }
  auto require = [](double v, const char* what) {
    if (!(v > 0.0)) {
      throw std::invalid_argument(std::string("rescale_observable: need positive ") + what);
    }
  };
  RescaledCurve out;
  out.x.resize(in.x.size());
  out.y.resize(in.y.size());
  switch (kind) {
    case RescaleKind::kCorrelation:
      require(in.xi_hat, "xi_hat");
      for (std::size_t i = 0; i < in.x.size(); ++i) {
        out.x[i] = in.x[i] / in.xi_hat;
        out.y[i] = in.xi_hat * in.xi_hat * in.y[i];
      }
      break;
    case RescaleKind::kExcessEnergy:
      require(in.L_eff, "L_eff");
      for (std::size_t i = 0; i < in.x.size(); ++i) {
        out.x[i] = in.x[i] / in.L_eff;
        out.y[i] = in.y[i] * std::pow(in.L_eff, 4.0);
      }
      break;
    case RescaleKind::kQfiSize:
      require(in.L_eff, "L_eff");
      for (std::size_t i = 0; i < in.x.size(); ++i) {
        out.x[i] = in.x[i] / in.L_eff;
        out.y[i] = in.y[i] / in.L_eff;
      }
      break;
    case RescaleKind::kQfiTime:
      require(in.t_hat, "t_hat");
      require(in.xi_hat, "xi_hat");
      for (std::size_t i = 0; i < in.x.size(); ++i) {
        out.x[i] = in.x[i] / in.t_hat;
        out.y[i] = in.y[i] / in.xi_hat;
      }
      break;
  }
  return out;
}

double collapse_chi(const CollapseParams& p, const std::vector<CollapseCurve>& data) {
  if (data.empty()) throw std::invalid_argument("collapse_chi: no curves");
  if (!(p.A > 0.0) || !(p.mu > 0.0) || !(p.C > 0.0) || !(p.K > 0.0)) return kBarrier;
  double ss = 0.0;
  std::size_t n = 0;
  for (const CollapseCurve& curve : data) {
    if (curve.R.size() != curve.C.size() || curve.R.empty()) {
      throw std::invalid_argument("collapse_chi: malformed curve");
    }
    const double x = std::log(p.C * curve.tau_q);
    if (!(x > 0.0)) return kBarrier;
    const double factor = 1.0 + g_correction(p.mu, x) / x;
    if (!(factor > 0.0)) return kBarrier;
    const double xi = p.A * std::cbrt(curve.tau_q) * std::pow(x, 1.0 / 9.0) * factor;
    for (std::size_t i = 0; i < curve.R.size(); ++i) {
      const double resid = xi * xi * curve.C[i] - p.K * std::exp(-curve.R[i] / xi);
      ss += resid * resid;
      ++n;
    }
  }
  return std::sqrt(ss / static_cast<double>(n));
}

CollapseFit fit_collapse(const std::vector<CollapseCurve>& data) {
  if (data.empty()) throw std::invalid_argument("fit_collapse: no curves");
  // chi^2 in log-parameter space keeps the objective smooth at the optimum
  // and the parameters positive by construction.
  ObjectiveFn obj = [&data](const Eigen::VectorXd& lx) {
    const CollapseParams p{std::exp(lx(0)), std::exp(lx(1)), std::exp(lx(2)),
                           std::exp(lx(3))};
    const double chi = collapse_chi(p, data);
    return chi >= kBarrier ? kBarrier : chi * chi;
  };

  CollapseFit best;
  best.chi = kBarrier;
  TrustRegionOptions opt;
  opt.grad_tol = 1e-13;
  for (double c0 : {1.0, 31.6, 1000.0}) {
    for (double mu0 : {0.01, 0.1, 1.0}) {
      Eigen::VectorXd x0{{std::log(0.3), std::log(mu0), std::log(c0), std::log(0.2)}};
      const MinimizeResult r = minimize_trust_region(obj, x0, opt);
      best.iters += r.iters;
      const double chi = r.value >= kBarrier ? kBarrier : std::sqrt(r.value);
      if (chi < best.chi) {
        best.chi = chi;
        best.params = CollapseParams{std::exp(r.x(0)), std::exp(r.x(1)),
                                     std::exp(r.x(2)), std::exp(r.x(3))};
        best.converged = r.converged;
      }
    }
  }
  if (best.chi >= kBarrier) throw std::runtime_error("fit_collapse: no valid optimum found");
  return best;
}

}  // namespace nqs
