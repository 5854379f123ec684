// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exact state-vector reference for N <= 24 sites: matrix-free Hamiltonian
// application on 2^N amplitudes, Lanczos ground states, and Krylov
// exponential time stepping with midpoint coupling evaluation.
//
// Basis convention: basis index bit k set <=> spin k = -1, so the all-up
// product state is index 0 (shared with config_to_mask).

#ifndef NQS3D_ED_HPP_
#define NQS3D_ED_HPP_

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "nqs3d/lattice.hpp"
#include "nqs3d/pauli.hpp"

namespace nqs {

struct DenseState {
  int n_sites = 0;
  std::vector<Complex> amplitudes;  // length 2^n_sites
};

DenseState make_basis_state(const SpinConfiguration& s);
DenseState make_uniform_state(int n_sites);

double state_norm(const DenseState& s);
void normalize(DenseState& s);
Complex inner(const DenseState& a, const DenseState& b);  // <a|b>

// out = H in, matrix-free: Z diagonal signs, X bit flips, Y bit flips with
// +-i phases. Errors for n_sites > 24.
void apply_hamiltonian(const PauliStringHamiltonian& H, const DenseState& in,
                       DenseState& out);
DenseState apply_hamiltonian(const PauliStringHamiltonian& H, const DenseState& in);

Complex expectation(const PauliStringHamiltonian& op, const DenseState& state);

// Diagonal observables evaluated without operator application.
double expectation_z(const DenseState& state, int site);
double fq_density(const DenseState& state);  // (<M^2> - <M>^2)/N, M = sum_i sigma^z_i
// Axis-and-site-averaged <sigma^z_0 sigma^z_R>; R = 0..max_R.
std::vector<double> correlation_profile_dense(const DenseState& state,
                                              const Lattice3D& lat, int max_R);
double expectation_x(const DenseState& state, int site);
double expectation_y(const DenseState& state, int site);

struct GroundStateResult {
  double energy = 0.0;
  DenseState state;
  bool degenerate = false;  // Ritz gap below 1e-8 * max(1, |E0|)
  double residual = 0.0;    // ||Hv - Ev||
};

// Restarted Lanczos with full reorthogonalization; residual < tol on return.
// The degeneracy flag comes from a deflated second-eigenvalue estimate.
GroundStateResult ground_state(const PauliStringHamiltonian& H,
                               std::uint64_t seed = 1234, double tol = 1e-10,
                               int block_size = 30, int max_restarts = 400);

// Krylov exponential stepping of i d/dt psi = H(t) psi from t0 to t1 with
// step dt (the coupling schedule is evaluated at each step midpoint). The
// step must resolve the maximum coupling scale: dt * max_term_coeff < 0.1.
// Non-convergent Krylov expansions halve dt for that step and retry; the
// norm is restored after every step.
DenseState propagate(const DenseState& initial,
                     const std::function<PauliStringHamiltonian(double)>& H_of_t,
                     double t0, double t1, double dt, double krylov_tol = 1e-10,
                     int max_krylov = 40);

// Largest |coefficient| over terms; the coupling scale used by the
// propagate precondition.
double max_coupling_scale(const PauliStringHamiltonian& H);

}  // namespace nqs

#endif  // NQS3D_ED_HPP_
