// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Critical-scaling toolkit at the cubic-lattice upper critical dimension:
// two-loop flow of the quartic coupling u and the reduced distance r, the
// logarithmically refined correlation length, ramp freeze-out scales, and
// scaling-collapse fitting.
//
// Conventions: ell is the flow "time" (log of the length rescaling factor),
// x = ln(r0/r) counts decades toward criticality, and the flow is valid for
// 0 < u0 < 9/17 where the one-loop-resummed running coupling exists.

#ifndef NQS3D_KZ_HPP_
#define NQS3D_KZ_HPP_

#include <vector>

namespace nqs {

struct RgFlow {
  double du_dl = 0.0;
  double dr_dl = 0.0;
};

// Two-loop beta functions:
//   du/dl = -(3/2) u^2 + (17/6) u^3,
//   dr/dl = (2 - u/2 + (5/12) u^2) r.
RgFlow rg_flow_rhs(double u, double r);

// Closed-form two-loop running coupling u(ell) from u(0) = u0.
double running_coupling(double u0, double ell);

// Subleading logarithmic correction G_mu(x).
double g_correction(double mu, double x);

// Refined ground-state correlation length
//   xi(r) = P r^{-1/2} x^{1/6} (1 + G_mu(x)/x),  x = ln(r0/r) > 0.
struct RefinedXiParams {
  double P = 1.0;
  double r0 = 1.0;
  double mu = 0.5;
};
double correlation_length_refined(double r, const RefinedXiParams& p);

// Numerically integrated flow from (u0, r_start) until r reaches 1; the
// correlation length is e^{ell} at that point. Uses ln r as the
// independent variable so the endpoint is exact.
struct FlowResult {
  double xi = 0.0;
  double u_final = 0.0;
  double ell_final = 0.0;
};
FlowResult integrate_flow(double u0, double r_start, double rtol = 1e-10);

// Freeze-out time and length for a critical-crossing ramp of scale tau_q:
//   t_hat = A tau^{1/3} x^{1/9} (1 + G_mu(x)/x),  x = ln(C tau),
// and xi_hat = t_hat in units where the dynamical exponent is 1.
struct FreezeOut {
  double t_hat = 0.0;
  double xi_hat = 0.0;
};
FreezeOut freeze_out(double tau_q, double A, double mu, double C);

// Logarithmically corrected effective linear size L (ln L)^{1/4}, L > 1.
double effective_size(double L);

// Rescaling of measured curves into collapse coordinates.
//   kCorrelation:  (R, C)      -> (R/xi_hat, xi_hat^2 C)        [needs xi_hat]
//   kExcessEnergy: (xi_hat, Q) -> (xi_hat/L_eff, Q L_eff^4)     [needs L_eff]
//   kQfiSize:      (xi_hat, f) -> (xi_hat/L_eff, f/L_eff)       [needs L_eff]
//   kQfiTime:      (t, f)      -> (t/t_hat, f/xi_hat)           [needs both]
enum class RescaleKind { kCorrelation, kExcessEnergy, kQfiSize, kQfiTime };
struct RescaleInput {
  std::vector<double> x;
  std::vector<double> y;
  double xi_hat = 0.0;
  double t_hat = 0.0;
  double L_eff = 0.0;
};
struct RescaledCurve {
  std::vector<double> x;
  std::vector<double> y;
};
RescaledCurve rescale_observable(RescaleKind kind, const RescaleInput& in);

// Scaling collapse of correlation profiles measured at the crossing for a
// family of ramp scales: chi(A, mu, C, K) is the rms of
// xi_hat(tau)^2 C_tau(R) - K exp(-R/xi_hat(tau)) over all points, and
// fit_collapse minimizes it over the four positive parameters
// (trust-region Newton in log-parameter space, multi-start).
struct CollapseCurve {
  double tau_q = 0.0;
  std::vector<double> R;
  std::vector<double> C;
};
struct CollapseParams {
  double A = 0.0;
  double mu = 0.0;
  double C = 0.0;
  double K = 0.0;
};
double collapse_chi(const CollapseParams& p, const std::vector<CollapseCurve>& data);

struct CollapseFit {
  CollapseParams params;
  double chi = 0.0;
  int iters = 0;
  bool converged = false;
};
CollapseFit fit_collapse(const std::vector<CollapseCurve>& data);

}  // namespace nqs

#endif  // NQS3D_KZ_HPP_
