// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Weighted-ensemble estimators for the observables tracked during
// evolution. Off-diagonal operators are estimated through local values
// <s|Op|Psi>/<s|Psi>; diagonal ones read the configurations directly.
// Errors are split-chain standard errors (zero for exact ensembles).

#ifndef NQS3D_OBSERVABLES_HPP_
#define NQS3D_OBSERVABLES_HPP_

#include <vector>

#include "nqs3d/lattice.hpp"
#include "nqs3d/network.hpp"
#include "nqs3d/pauli.hpp"
#include "nqs3d/sampler.hpp"

namespace nqs {

// Per-row local values <s|Op|Psi>/<s|Psi> for an arbitrary Pauli operator.
std::vector<Complex> local_values(const NetworkState& net,
                                  const LocalEnergyKernel& kernel,
                                  const Ensemble& e, const Lattice3D& lat);

// Site-averaged <sigma^axis>.
WeightedStats magnetization(const NetworkState& net, const Ensemble& e,
                            const Lattice3D& lat, PauliOp axis);

// Quantum Fisher information density of the pure state for the generator
// M = sum_i sigma^z_i: f_Q = (<M^2> - <M>^2) / n_sites. Diagonal, so the
// network is not consulted.
WeightedStats qfi_density(const Ensemble& e, const Lattice3D& lat);

// Axis-and-site-averaged <sigma^z_i sigma^z_{i+R e_mu}> for R = 0..max_R
// (R wraps periodically). Matches correlation_profile_dense row for row.
std::vector<WeightedStats> correlation_profile(const Ensemble& e,
                                               const Lattice3D& lat, int max_R);

// Energy density above a reference ground energy:
// (<H> - ground_energy) / n_sites.
WeightedStats excess_energy(const NetworkState& net, const LocalEnergyKernel& kernel,
                            const Ensemble& e, const Lattice3D& lat,
                            double ground_energy);

}  // namespace nqs

#endif  // NQS3D_OBSERVABLES_HPP_
