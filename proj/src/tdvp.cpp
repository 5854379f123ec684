// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "nqs3d/tdvp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nqs {

Eigen::MatrixXcd TdvpEstimates::dense_S() const {
  const Eigen::MatrixXd re = A.transpose() * A + B.transpose() * B;
  const Eigen::MatrixXd im = A.transpose() * B - B.transpose() * A;
  return re.cast<Complex>() + Complex{0.0, 1.0} * im.cast<Complex>();
}

Eigen::VectorXcd TdvpEstimates::dense_F() const {
  const Eigen::VectorXd re = A.transpose() * er_w + B.transpose() * ei_w;
  const Eigen::VectorXd im = A.transpose() * ei_w - B.transpose() * er_w;
  return re.cast<Complex>() + Complex{0.0, 1.0} * im.cast<Complex>();
}

TdvpEstimates build_estimates(const Eigen::MatrixXcd& O_rows,
                              const std::vector<Complex>& local_energies,
                              const Ensemble& e) {
  const auto M = static_cast<Eigen::Index>(e.weights.size());
  if (O_rows.rows() != M || static_cast<Eigen::Index>(local_energies.size()) != M) {
    throw std::invalid_argument("build_estimates: row count mismatch");
  }
  const Eigen::Index P = O_rows.cols();

  Eigen::VectorXd w(M);
  for (Eigen::Index r = 0; r < M; ++r) w(r) = e.weights[static_cast<std::size_t>(r)];

  const Eigen::RowVectorXcd O_mean = w.transpose().cast<Complex>() * O_rows;
  Complex E_mean{0.0, 0.0};
  for (Eigen::Index r = 0; r < M; ++r) {
    E_mean += w(r) * local_energies[static_cast<std::size_t>(r)];
  }

  TdvpEstimates est;
  est.A.resize(M, P);
  est.B.resize(M, P);
  est.er_w.resize(M);
  est.ei_w.resize(M);
  est.energy_mean = E_mean;
  est.local_energies = local_energies;
  const Eigen::VectorXd sw = w.cwiseSqrt();
  for (Eigen::Index r = 0; r < M; ++r) {
    const Complex et = local_energies[static_cast<std::size_t>(r)] - E_mean;
    est.er_w(r) = sw(r) * et.real();
    est.ei_w(r) = sw(r) * et.imag();
    est.energy_variance += w(r) * std::norm(et);
    for (Eigen::Index k = 0; k < P; ++k) {
      const Complex ob = O_rows(r, k) - O_mean(k);
      est.A(r, k) = sw(r) * ob.real();
      est.B(r, k) = sw(r) * ob.imag();
    }
  }

  std::vector<double> re_e(static_cast<std::size_t>(M));
  for (Eigen::Index r = 0; r < M; ++r) {
    re_e[static_cast<std::size_t>(r)] = local_energies[static_cast<std::size_t>(r)].real();
  }
  est.energy_error = ensemble_stats(e, re_e).error;
  return est;
}

TdvpEstimates estimate_sf(const NetworkState& net, const LocalEnergyKernel& kernel,
                          const Ensemble& e, const Lattice3D& lat) {
  const auto M = static_cast<Eigen::Index>(e.configs.size());
  if (M == 0) throw std::invalid_argument("estimate_sf: empty ensemble");
  const auto P = static_cast<Eigen::Index>(parameter_count(net.arch));

  LogPsiCache cache(net, lat);
  Eigen::MatrixXcd O_rows(M, P);
  std::vector<Complex> e_loc(static_cast<std::size_t>(M));
  for (Eigen::Index r = 0; r < M; ++r) {
    const SpinConfiguration& s = e.configs[static_cast<std::size_t>(r)];
    const ForwardBackwardResult fb = log_psi_and_derivatives(net, s);
    for (Eigen::Index k = 0; k < P; ++k) {
      O_rows(r, k) = fb.o[static_cast<std::size_t>(k)];
    }
    const std::uint64_t mask = config_to_mask(s);
    auto ratio = [&](const SpinConfiguration& /*flipped*/,
                     const std::vector<int>& flip_sites) {
      std::uint64_t fmask = mask;
      for (int site : flip_sites) fmask ^= std::uint64_t{1} << site;
      return std::exp(cache.at(fmask) - fb.log_psi);
    };
    e_loc[static_cast<std::size_t>(r)] = kernel.eval(s, ratio);
  }
  return build_estimates(O_rows, e_loc, e);
}

namespace {

// Spectral gate at the relative threshold lambda_cut * lambda_max. A hard
// discard makes theta_dot discontinuous in theta whenever an eigenvalue
// crosses the threshold; during a quench the spectrum keeps growing new
// directions through any fixed ratio, and the adaptive integrator stalls on
// the jump. The sixth-power rolloff keeps the same threshold and limits but
// turns the indicator into a smooth weight.
double spectral_gate(double lam, double lam_cut_abs) {
  if (!(lam > 0.0)) return 0.0;
  const double r = lam_cut_abs / lam;
  const double r6 = r * r * r * r * r * r;
  if (!std::isfinite(r6)) return 0.0;
  return 1.0 / (1.0 + r6);
}

// theta_dot = X^T sum_k g(lambda_k) u_k u_k^T v / (lambda_k + eps) over
// eigenpairs of G = X X^T.
Eigen::VectorXd solve_gram(const TdvpEstimates& est, const Eigen::VectorXd& v,
                           const TdvpConfig& cfg, TdvpSolveInfo* info) {
  const Eigen::Index M = est.A.rows();
  Eigen::MatrixXd G(2 * M, 2 * M);
  G.topLeftCorner(M, M) = est.A * est.A.transpose();
  G.topRightCorner(M, M) = est.A * est.B.transpose();
  G.bottomLeftCorner(M, M) = G.topRightCorner(M, M).transpose();
  G.bottomRightCorner(M, M) = est.B * est.B.transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  if (es.info() != Eigen::Success) throw std::runtime_error("Gram eigensolve failed");
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double lam_max = lam(lam.size() - 1);
  if (!(lam_max > 0.0)) throw std::runtime_error("rank-deficient geometric tensor");

  Eigen::VectorXd y = Eigen::VectorXd::Zero(2 * M);
  int retained = 0;
  for (Eigen::Index k = 0; k < lam.size(); ++k) {
    const double g = spectral_gate(lam(k), cfg.lambda_cut * lam_max);
    if (g >= 0.5) ++retained;
    if (g == 0.0) continue;
    const Eigen::VectorXd u = es.eigenvectors().col(k);
    y += u * (g * u.dot(v) / (lam(k) + cfg.epsilon));
  }
  if (retained == 0) throw std::runtime_error("rank-deficient geometric tensor");
  if (info) {
    info->n_retained = retained;
    info->lambda_max = lam_max;
    info->used_gram = true;
  }
  return est.A.transpose() * y.head(M) + est.B.transpose() * y.tail(M);
}

Eigen::VectorXd solve_normal(const TdvpEstimates& est, const Eigen::VectorXd& v,
                             const TdvpConfig& cfg, TdvpSolveInfo* info) {
  const Eigen::Index M = est.A.rows();
  const Eigen::MatrixXd S = est.A.transpose() * est.A + est.B.transpose() * est.B;
  const Eigen::VectorXd rhs =
      est.A.transpose() * v.head(M) + est.B.transpose() * v.tail(M);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw std::runtime_error("metric eigensolve failed");
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double lam_max = lam(lam.size() - 1);
  if (!(lam_max > 0.0)) throw std::runtime_error("rank-deficient geometric tensor");

  Eigen::VectorXd theta_dot = Eigen::VectorXd::Zero(S.rows());
  int retained = 0;
  for (Eigen::Index k = 0; k < lam.size(); ++k) {
    const double g = spectral_gate(lam(k), cfg.lambda_cut * lam_max);
    if (g >= 0.5) ++retained;
    if (g == 0.0) continue;
    const Eigen::VectorXd u = es.eigenvectors().col(k);
    theta_dot += u * (g * u.dot(rhs) / (lam(k) + cfg.epsilon));
  }
  if (retained == 0) throw std::runtime_error("rank-deficient geometric tensor");
  if (info) {
    info->n_retained = retained;
    info->lambda_max = lam_max;
    info->used_gram = false;
  }
  return theta_dot;
}

}  // namespace

Eigen::VectorXd solve_tdvp(const TdvpEstimates& est, bool imaginary_time,
                           const TdvpConfig& cfg, TdvpSolveInfo* info) {
  const Eigen::Index M = est.A.rows();
  const Eigen::Index P = est.A.cols();
  if (M == 0 || P == 0) throw std::invalid_argument("solve_tdvp: empty estimates");

  Eigen::VectorXd v(2 * M);
  if (imaginary_time) {
    v.head(M) = -est.er_w;
    v.tail(M) = -est.ei_w;
  } else {
    v.head(M) = est.ei_w;
    v.tail(M) = -est.er_w;
  }

  bool gram = false;
  switch (cfg.route) {
    case TdvpConfig::Route::kAuto:
      gram = (2 * M < P);
      break;
    case TdvpConfig::Route::kNormal:
      gram = false;
      break;
    case TdvpConfig::Route::kGram:
      gram = true;
      break;
  }
  return gram ? solve_gram(est, v, cfg, info) : solve_normal(est, v, cfg, info);
}

GroundSearchResult ground_state_search(const NetworkState& start,
                                       const LocalEnergyKernel& kernel,
                                       const Lattice3D& lat,
                                       const EnsembleProvider& provider,
                                       const GroundSearchConfig& cfg) {
  if (cfg.max_iters <= 0 || !(cfg.dt > 0.0) || !(cfg.energy_tol > 0.0)) {
    throw std::invalid_argument("ground_state_search: bad configuration");
  }
  GroundSearchResult res;
  res.net = start;
  double prev_energy = 0.0;
  int streak = 0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const Ensemble e = provider(res.net);
    const TdvpEstimates est = estimate_sf(res.net, kernel, e, lat);
    res.energy = est.energy_mean.real();
    res.energy_error = est.energy_error;
    res.energy_variance = est.energy_variance;
    res.iters = it;
    if (it > 0) {
      const double scale = std::max(1.0, std::abs(res.energy));
      streak = (std::abs(res.energy - prev_energy) < cfg.energy_tol * scale) ? streak + 1 : 0;
      if (streak >= cfg.patience) {
        res.converged = true;
        return res;
      }
    }
    prev_energy = res.energy;
    const Eigen::VectorXd theta_dot = solve_tdvp(est, /*imaginary_time=*/true, cfg.tdvp);
    for (std::size_t k = 0; k < res.net.theta.size(); ++k) {
      res.net.theta[k] += cfg.dt * theta_dot(static_cast<Eigen::Index>(k));
    }
  }
  return res;
}

}  // namespace nqs
