// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Time-dependent variational dynamics over the real network parameters.
//
// With O_k(s) = d lnPsi(s)/d theta_k and centered quantities Obar = O - <O>,
// etilde = E_loc - <E_loc>, the equations of motion are
//   real time:       Re(S) dtheta/dt =  Im(F)
//   imaginary time:  Re(S) dtheta/dt = -Re(F)
// where S = <Obar^dag Obar> and F = <Obar^dag etilde> over |Psi|^2.
//
// Estimates are held factored: with per-row weights w and
// A = sqrt(w) Re(Obar), B = sqrt(w) Im(Obar) (both M x P),
// Re(S) = A^T A + B^T B = X^T X for the stacked X = [A; B] (2M x P). The
// linear systems are solved by eigendecomposition of either X^T X (P x P)
// or the Gram matrix X X^T (2M x 2M), whichever is smaller; each eigenpair
// is weighted by a smooth spectral gate 1/(1 + (lambda_cut*lambda_max /
// lambda)^6) that suppresses directions below the relative threshold, and
// the inversion carries a diagonal shift epsilon. The gate (rather than a
// hard discard) keeps theta_dot continuous in theta as eigenvalues grow
// through the threshold, which the adaptive integrator requires. Both
// routes produce the same solution. Because Obar is centered, the solution
// is invariant under constant shifts of any O column (normalization and
// phase gauge).

#ifndef NQS3D_TDVP_HPP_
#define NQS3D_TDVP_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include "nqs3d/lattice.hpp"
#include "nqs3d/network.hpp"
#include "nqs3d/pauli.hpp"
#include "nqs3d/sampler.hpp"

namespace nqs {

struct TdvpConfig {
  double lambda_cut = 1e-8;  // relative eigenvalue cutoff (smooth gate knee)
  double epsilon = 1e-10;    // shift added to gated eigenvalues
  enum class Route { kAuto, kNormal, kGram } route = Route::kAuto;
};

struct TdvpEstimates {
  Eigen::MatrixXd A;  // sqrt(w) Re(Obar), M x P
  Eigen::MatrixXd B;  // sqrt(w) Im(Obar), M x P
  Eigen::VectorXd er_w;  // sqrt(w) Re(etilde), length M
  Eigen::VectorXd ei_w;  // sqrt(w) Im(etilde)
  Complex energy_mean{0.0, 0.0};
  double energy_error = 0.0;     // split-chain error on Re(E_loc); 0 when exact
  double energy_variance = 0.0;  // sum_s w_s |E_loc(s) - mean|^2
  std::vector<Complex> local_energies;  // per row, for diagnostics

  int n_rows() const { return static_cast<int>(A.rows()); }
  int n_params() const { return static_cast<int>(A.cols()); }
  // Dense assemblies for tests and diagnostics (P x P / P); the solver never
  // forms these.
  Eigen::MatrixXcd dense_S() const;
  Eigen::VectorXcd dense_F() const;
};

// Centers O and E_loc under the ensemble weights and builds the factored
// estimates. O_rows is M x P with row r = O(configs[r]).
TdvpEstimates build_estimates(const Eigen::MatrixXcd& O_rows,
                              const std::vector<Complex>& local_energies,
                              const Ensemble& e);

// Evaluates log derivatives and local energies on the ensemble rows and
// assembles the estimates. Off-diagonal amplitude ratios are served by a
// canonical-orbit ln Psi cache.
TdvpEstimates estimate_sf(const NetworkState& net, const LocalEnergyKernel& kernel,
                          const Ensemble& e, const Lattice3D& lat);

struct TdvpSolveInfo {
  int n_retained = 0;
  double lambda_max = 0.0;
  bool used_gram = false;
};

// Solves for dtheta/dt. Throws "rank-deficient geometric tensor" when the
// largest eigenvalue is not positive.
Eigen::VectorXd solve_tdvp(const TdvpEstimates& est, bool imaginary_time,
                           const TdvpConfig& cfg = {}, TdvpSolveInfo* info = nullptr);

// One adaptive Heun (trapezoidal predictor-corrector) trial step for
// dtheta/dt = rhs(theta, t). k1 = rhs(theta, t) is supplied by the caller so
// a rejected step can be retried without recomputing it.
//   predictor theta_p = theta + dt k1, corrector theta_c with (k1+k2)/2;
//   error = ||theta_c - theta_p|| / 2 / (||theta|| + 1);
//   dt_next = dt * clip(0.9 sqrt(tol/error), 0.2, 2.0); accepted iff
//   error <= tol.
struct HeunOutcome {
  bool accepted = false;
  double error = 0.0;
  double dt_next = 0.0;
  Eigen::VectorXd theta_new;
};

template <typename Rhs>
HeunOutcome heun_step(const Eigen::VectorXd& theta, double t, double dt, double tol,
                      Rhs&& rhs, const Eigen::VectorXd& k1) {
  if (!(dt > 0.0) || !(tol > 0.0)) {
    throw std::invalid_argument("heun_step: dt and tol must be positive");
  }
  const Eigen::VectorXd theta_p = theta + dt * k1;
  const Eigen::VectorXd k2 = rhs(theta_p, t + dt);
  HeunOutcome out;
  out.theta_new = theta + 0.5 * dt * (k1 + k2);
  out.error = 0.5 * (out.theta_new - theta_p).norm() / (theta.norm() + 1.0);
  const double raw = 0.9 * std::sqrt(tol / std::max(out.error, 1e-300));
  out.dt_next = dt * std::min(2.0, std::max(0.2, raw));
  out.accepted = out.error <= tol;
  return out;
}

// Advances theta from t to t_target with adaptive Heun steps, calling
// on_step(theta, t, dt_used) after each accepted step. dt is updated in
// place so integration can resume; dt < dt_min is a hard error.
template <typename Rhs, typename Callback>
void integrate_heun(Eigen::VectorXd& theta, double& t, double t_target, double& dt,
                    double tol, double dt_min, Rhs&& rhs, Callback&& on_step) {
  if (!(t_target >= t)) throw std::invalid_argument("integrate_heun: t_target < t");
  while (t < t_target - 1e-12 * std::max(1.0, std::abs(t_target))) {
    const double dt_trial = std::min(dt, t_target - t);
    const Eigen::VectorXd k1 = rhs(theta, t);
    double dt_cur = dt_trial;
    bool rejected = false;
    for (;;) {
      if (dt_cur < dt_min) {
        throw std::runtime_error("integrate_heun: step size underflow");
      }
      HeunOutcome o = heun_step(theta, t, dt_cur, tol, rhs, k1);
      if (o.accepted) {
        theta = std::move(o.theta_new);
        t += dt_cur;
        // A truncated-but-clean trial must not shrink the resume step.
        dt = (!rejected && dt_trial < dt) ? std::max(dt, o.dt_next) : o.dt_next;
        on_step(theta, t, dt_cur);
        break;
      }
      rejected = true;
      dt_cur = o.dt_next;
    }
  }
  t = t_target;
}

struct GroundSearchConfig {
  int max_iters = 500;
  double dt = 0.05;           // fixed imaginary-time Euler step
  double energy_tol = 1e-8;   // relative energy change for convergence
  int patience = 3;           // consecutive converged iterations required
  TdvpConfig tdvp;
};

struct GroundSearchResult {
  NetworkState net;
  double energy = 0.0;
  double energy_error = 0.0;
  double energy_variance = 0.0;
  int iters = 0;
  bool converged = false;
};

using EnsembleProvider = std::function<Ensemble(const NetworkState&)>;

// Imaginary-time Euler descent until the energy stalls.
GroundSearchResult ground_state_search(const NetworkState& start,
                                       const LocalEnergyKernel& kernel,
                                       const Lattice3D& lat,
                                       const EnsembleProvider& provider,
                                       const GroundSearchConfig& cfg = {});

}  // namespace nqs

#endif  // NQS3D_TDVP_HPP_
