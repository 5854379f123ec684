// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Weighted Pauli-string Hamiltonians: the transverse-field Ising model, its
// y-rotated basis form, the interaction-picture transform, and a generic
// local-energy kernel E_loc(s) = sum_{s'} <s|H|s'> Psi(s')/Psi(s).

#ifndef NQS3D_PAULI_HPP_
#define NQS3D_PAULI_HPP_

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "nqs3d/lattice.hpp"

namespace nqs {

using Complex = std::complex<double>;

enum class PauliOp : std::uint8_t { X, Y, Z };

// A tensor product of single-site Pauli operators times a coefficient.
// Sites are unique and kept sorted; an empty op list is the identity.
struct PauliString {
  std::vector<std::pair<int, PauliOp>> ops;
  Complex coefficient{0.0, 0.0};
};

struct PauliStringHamiltonian {
  int n_sites = 0;
  std::vector<PauliString> terms;
};

// H = -J sum_<ij> Z_i Z_j - h sum_i X_i over deduplicated bonds.
PauliStringHamiltonian build_tfim(const Lattice3D& lattice, double J, double h);

// Global pi/2 rotation about the y axis, applied per site: Z -> X, X -> -Z,
// Y -> Y. Spectrum-preserving; sign convention fixed here once.
PauliStringHamiltonian rotate_basis_y(const PauliStringHamiltonian& H);

// U(t) V U(t)^dagger with U(t) = exp(i H_0 t), H_0 = -h sum_i X_i. V must
// contain only Z operators; each Z_i becomes cos(2ht) Z_i - sin(2ht) Y_i,
// expanded into a Pauli-string list.
PauliStringHamiltonian interaction_picture(double h, const PauliStringHamiltonian& V,
                                           double t);

// Sum over terms is Hermitian: the total coefficient of every distinct
// string is real to within tol.
bool is_hermitian(const PauliStringHamiltonian& H, double tol = 1e-12);

// JSON document: term list with site/op/coefficient, for reproducibility
// logging. Round-trips exactly.
nlohmann::json hamiltonian_to_json(const PauliStringHamiltonian& H);
PauliStringHamiltonian hamiltonian_from_json(const nlohmann::json& j);

// Time-dependent couplings in units of (J_c, h_c); tag is one of
// sudden | smooth-ramp | linear-ramp | constant.
struct CouplingSchedule {
  std::function<double(double)> J_of_t;
  std::function<double(double)> h_of_t;
  std::string tag;
};

// Per-Hamiltonian compilation of the local-energy sum: terms are grouped by
// their flip set (X/Y sites) so each distinct connected configuration costs
// one amplitude-ratio evaluation per sample. The diagonal group needs none.
class LocalEnergyKernel {
 public:
  explicit LocalEnergyKernel(const PauliStringHamiltonian& H);

  // ratio_fn(flipped_config, flip_sites) must return Psi(s')/Psi(s).
  template <typename RatioFn>
  Complex eval(const SpinConfiguration& s, RatioFn&& ratio_fn) const {
    Complex e{0.0, 0.0};
    SpinConfiguration flipped;
    for (const auto& g : groups_) {
      Complex acc{0.0, 0.0};
      for (const auto& t : g.terms) {
        Complex m = t.coefficient;
        for (int site : t.z_sites) m *= static_cast<double>(s[site]);
        for (int site : t.y_sites) m *= Complex(0.0, -static_cast<double>(s[site]));
        acc += m;
      }
      if (g.flip_sites.empty()) {
        e += acc;
      } else {
        flipped = s;
        for (int site : g.flip_sites) flipped[site] = -flipped[site];
        e += acc * ratio_fn(flipped, g.flip_sites);
      }
    }
    return e;
  }

  // Diagonal part only; independent of the wavefunction.
  Complex eval_diagonal(const SpinConfiguration& s) const {
    return eval(s, [](const SpinConfiguration&, const std::vector<int>&) {
      return Complex{0.0, 0.0};
    });
  }

  std::size_t n_groups() const { return groups_.size(); }
  std::size_t n_offdiagonal_groups() const;

 private:
  struct Term {
    Complex coefficient;
    std::vector<int> z_sites;
    std::vector<int> y_sites;
  };
  struct Group {
    std::vector<int> flip_sites;  // sorted; empty for the diagonal group
    std::vector<Term> terms;
  };
  std::vector<Group> groups_;
};

}  // namespace nqs

#endif  // NQS3D_PAULI_HPP_
