// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "nqs3d/fit.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace nqs {
namespace {

// Solves min_p g^T p + p^T H p / 2 s.t. ||p|| <= radius through the
// eigendecomposition of H, with a bisection on the Levenberg shift.
Eigen::VectorXd trust_region_step(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                                  double radius) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  if (es.info() != Eigen::Success) throw std::runtime_error("Hessian eigensolve failed");
  const Eigen::VectorXd& lam = es.eigenvalues();
  const Eigen::VectorXd gt = es.eigenvectors().transpose() * g;

  auto step_norm = [&](double shift) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      const double d = lam(i) + shift;
      s += (gt(i) / d) * (gt(i) / d);
    }
    return std::sqrt(s);
  };
  auto assemble = [&](double shift) -> Eigen::VectorXd {
    Eigen::VectorXd pt(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) pt(i) = -gt(i) / (lam(i) + shift);
    return es.eigenvectors() * pt;
  };

  const double lam_min = lam(0);
  if (lam_min > 0.0 && step_norm(0.0) <= radius) return assemble(0.0);

  // ||p(shift)|| is decreasing; bracket then bisect.
  double lo = std::max(0.0, -lam_min) + 1e-14 * std::max(1.0, std::abs(lam_min));
  double hi = lo + std::max(1.0, g.norm() / radius);
  while (step_norm(hi) > radius) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (step_norm(mid) > radius) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return assemble(hi);
}

}  // namespace

Eigen::VectorXd fd_gradient(const ObjectiveFn& f, const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const ObjectiveFn& f, const Eigen::VectorXd& x, double step) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd H(n, n);
  Eigen::VectorXd xp = x;
  const double f0 = f(x);
  std::vector<double> hs(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    hs[static_cast<std::size_t>(i)] = step * std::max(1.0, std::abs(x(i)));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = hs[static_cast<std::size_t>(i)];
    xp(i) = x(i) + hi;
    const double fp = f(xp);
    xp(i) = x(i) - hi;
    const double fm = f(xp);
    xp(i) = x(i);
    H(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double hj = hs[static_cast<std::size_t>(j)];
      xp(i) = x(i) + hi;
      xp(j) = x(j) + hj;
      const double fpp = f(xp);
      xp(j) = x(j) - hj;
      const double fpm = f(xp);
      xp(i) = x(i) - hi;
      const double fmm = f(xp);
      xp(j) = x(j) + hj;
      const double fmp = f(xp);
      xp(i) = x(i);
      xp(j) = x(j);
      H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
    }
  }
  return H;
}

MinimizeResult minimize_trust_region(const ObjectiveFn& f, Eigen::VectorXd x0,
                                     const TrustRegionOptions& opt) {
  MinimizeResult res;
  res.x = std::move(x0);
  res.value = f(res.x);
  double radius = opt.initial_radius;
  for (int it = 0; it < opt.max_iters; ++it) {
    res.iters = it;
    const Eigen::VectorXd g = fd_gradient(f, res.x, opt.fd_step_grad);
    if (g.cwiseAbs().maxCoeff() < opt.grad_tol * std::max(1.0, std::abs(res.value))) {
      res.converged = true;
      return res;
    }
    const Eigen::MatrixXd H = fd_hessian(f, res.x, opt.fd_step_hess);
    const Eigen::VectorXd p = trust_region_step(H, g, radius);
    const double predicted = -(g.dot(p) + 0.5 * p.dot(H * p));
    const double f_new = f(res.x + p);
    const double actual = res.value - f_new;
    const double rho = predicted > 0.0 ? actual / predicted : -1.0;
    if (rho > 1e-4) {
      res.x += p;
      res.value = f_new;
    }
    if (rho < 0.25) {
      radius *= 0.25;
    } else if (rho > 0.75 && p.norm() > 0.99 * radius) {
      radius = std::min(2.0 * radius, opt.max_radius);
    }
    if (radius < opt.min_radius) {
      // Stagnation at finite-difference noise level; treat as converged.
      res.converged = true;
      return res;
    }
  }
  return res;
}

}  // namespace nqs
