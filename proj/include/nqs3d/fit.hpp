// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Derivative-free smooth minimization: trust-region Newton with central
// finite-difference gradients and Hessians. Intended for few-parameter
// objectives that are cheap to evaluate.

#ifndef NQS3D_FIT_HPP_
#define NQS3D_FIT_HPP_

#include <Eigen/Dense>

#include <functional>

namespace nqs {

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;

struct TrustRegionOptions {
  int max_iters = 300;
  double grad_tol = 1e-10;  // on ||grad||_inf relative to max(1, |f|)
  double initial_radius = 0.5;
  double max_radius = 8.0;
  double min_radius = 1e-13;
  double fd_step_grad = 1e-6;  // scaled by max(1, |x_i|)
  double fd_step_hess = 1e-4;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iters = 0;
  bool converged = false;
};

Eigen::VectorXd fd_gradient(const ObjectiveFn& f, const Eigen::VectorXd& x, double step);
Eigen::MatrixXd fd_hessian(const ObjectiveFn& f, const Eigen::VectorXd& x, double step);

MinimizeResult minimize_trust_region(const ObjectiveFn& f, Eigen::VectorXd x0,
                                     const TrustRegionOptions& opt = {});

}  // namespace nqs

#endif  // NQS3D_FIT_HPP_
