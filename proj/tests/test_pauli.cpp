// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <random>
#include <vector>

#include "nqs3d/lattice.hpp"
#include "nqs3d/pauli.hpp"
#include "support/dense_oracle.hpp"

using nqs::Complex;
using nqs::Lattice3D;
using nqs::LocalEnergyKernel;
using nqs::PauliOp;
using nqs::PauliString;
using nqs::PauliStringHamiltonian;
using nqs::SpinConfiguration;

namespace {

// Z-only Ising interaction -J sum_<ij> Z_i Z_j, without the field terms.
PauliStringHamiltonian ising_zz(const Lattice3D& lat, double J) {
  PauliStringHamiltonian V;
  V.n_sites = lat.n_sites();
  for (auto [i, j] : lat.bonds()) {
    V.terms.push_back({{{i, PauliOp::Z}, {j, PauliOp::Z}}, Complex{-J, 0.0}});
  }
  return V;
}

// Random state with amplitudes bounded away from zero, so ratio denominators
// are safe.
std::vector<Complex> random_dense_state(int n_sites, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(0.5, 1.5);
  std::uniform_real_distribution<double> phase(-3.0, 3.0);
  std::vector<Complex> psi(std::size_t{1} << n_sites);
  for (auto& a : psi) a = std::polar(mag(rng), phase(rng));
  return psi;
}

SpinConfiguration random_config(int n_sites, std::mt19937_64& rng) {
  SpinConfiguration s(n_sites);
  for (auto& v : s) v = (rng() & 1u) ? 1 : -1;
  return s;
}

// E_loc(s) straight from the dense matrix: (H psi)[s] / psi[s].
Complex dense_local_energy(const Eigen::MatrixXcd& Hm, const std::vector<Complex>& psi,
                           const SpinConfiguration& s) {
  const auto v = nqs::test::to_eigen(psi);
  const Eigen::VectorXcd hv = Hm * v;
  const auto b = static_cast<Eigen::Index>(nqs::config_to_mask(s));
  return hv(b) / v(b);
}

Complex kernel_local_energy(const LocalEnergyKernel& kernel, const std::vector<Complex>& psi,
                            const SpinConfiguration& s) {
  const Complex psi_s = psi[nqs::config_to_mask(s)];
  return kernel.eval(s, [&](const SpinConfiguration& flipped, const std::vector<int>&) {
    return psi[nqs::config_to_mask(flipped)] / psi_s;
  });
}

}  // namespace

TEST_CASE("transverse-field model has one ZZ term per bond and one X term per site") {
  Lattice3D lat(2, 2, 3);
  const double J = 1.3, h = 4.2;
  auto H = nqs::build_tfim(lat, J, h);
  CHECK(H.n_sites == 12);
  int n_zz = 0, n_x = 0;
  for (const auto& t : H.terms) {
    if (t.ops.size() == 2) {
      CHECK(t.ops[0].second == PauliOp::Z);
      CHECK(t.ops[1].second == PauliOp::Z);
      CHECK(t.coefficient.real() == doctest::Approx(-J).epsilon(1e-15));
      CHECK(t.coefficient.imag() == 0.0);
      ++n_zz;
    } else {
      REQUIRE(t.ops.size() == 1);
      CHECK(t.ops[0].second == PauliOp::X);
      CHECK(t.coefficient.real() == doctest::Approx(-h).epsilon(1e-15));
      ++n_x;
    }
  }
  CHECK(n_zz == 24);
  CHECK(n_x == 12);
  CHECK(nqs::is_hermitian(H));
}

TEST_CASE("local energy kernel matches dense matrix-vector product on 12 sites") {
  Lattice3D lat(2, 2, 3);
  auto H = nqs::build_tfim(lat, 1.1, 3.7);
  LocalEnergyKernel kernel(H);
  auto psi = random_dense_state(12, 7);
  const auto Hm = nqs::test::dense_operator(H);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = random_config(12, rng);
    const Complex want = dense_local_energy(Hm, psi, s);
    const Complex got = kernel_local_energy(kernel, psi, s);
    CHECK(std::abs(got - want) <= 1e-10 * std::abs(want));
  }
}

TEST_CASE("kernel handles X, Y, Z strings from the rotated interaction picture") {
  Lattice3D lat(2, 2, 2);
  auto V = ising_zz(lat, 0.9);
  auto H = nqs::rotate_basis_y(nqs::interaction_picture(2.2, V, 0.37));
  CHECK(nqs::is_hermitian(H));
  LocalEnergyKernel kernel(H);
  auto psi = random_dense_state(8, 11);
  const auto Hm = nqs::test::dense_operator(H);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto s = random_config(8, rng);
    const Complex want = dense_local_energy(Hm, psi, s);
    const Complex got = kernel_local_energy(kernel, psi, s);
    CHECK(std::abs(got - want) <= 1e-10 * (std::abs(want) + 1.0));
  }
}

TEST_CASE("basis rotation preserves the eigenvalue multiset") {
  Lattice3D lat(2, 2, 2);
  auto H = nqs::build_tfim(lat, 1.0, 2.5);
  auto Hr = nqs::rotate_basis_y(H);
  CHECK(nqs::is_hermitian(Hr));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ea(nqs::test::dense_operator(H));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eb(nqs::test::dense_operator(Hr));
  for (Eigen::Index k = 0; k < ea.eigenvalues().size(); ++k) {
    CHECK(ea.eigenvalues()(k) == doctest::Approx(eb.eigenvalues()(k)).epsilon(1e-10));
  }
}

TEST_CASE("interaction picture is a spectrum-preserving conjugation of V") {
  Lattice3D lat(2, 2, 2);
  auto V = ising_zz(lat, 1.4);
  const auto Vm = nqs::test::dense_operator(V);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ev(Vm);
  for (double t : {0.0, 0.21, 1.7}) {
    auto Hi = nqs::interaction_picture(3.3, V, t);
    CHECK(nqs::is_hermitian(Hi));
    const auto Him = nqs::test::dense_operator(Hi);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eh(Him);
    for (Eigen::Index k = 0; k < ev.eigenvalues().size(); ++k) {
      CHECK(eh.eigenvalues()(k) == doctest::Approx(ev.eigenvalues()(k)).epsilon(1e-10));
    }
  }
}

TEST_CASE("interaction picture at t = 0 is V itself") {
  Lattice3D lat(2, 2, 2);
  auto V = ising_zz(lat, 1.0);
  auto Hi = nqs::interaction_picture(5.0, V, 0.0);
  const Eigen::MatrixXcd diff =
      nqs::test::dense_operator(Hi) - nqs::test::dense_operator(V);
  CHECK(diff.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("interaction picture explicit single-site coefficients") {
  // V = 2 Z_0 on one site: H_I = 2 cos(2ht) Z_0 - 2 sin(2ht) Y_0.
  PauliStringHamiltonian V;
  V.n_sites = 1;
  V.terms.push_back({{{0, PauliOp::Z}}, Complex{2.0, 0.0}});
  const double h = 0.8, t = 0.45;
  auto Hi = nqs::interaction_picture(h, V, t);
  double cz = 0.0, cy = 0.0;
  for (const auto& term : Hi.terms) {
    REQUIRE(term.ops.size() == 1);
    if (term.ops[0].second == PauliOp::Z) cz += term.coefficient.real();
    if (term.ops[0].second == PauliOp::Y) cy += term.coefficient.real();
  }
  CHECK(cz == doctest::Approx(2.0 * std::cos(2 * h * t)).epsilon(1e-14));
  CHECK(cy == doctest::Approx(-2.0 * std::sin(2 * h * t)).epsilon(1e-14));
}

TEST_CASE("interaction picture rejects operators outside the Z algebra") {
  PauliStringHamiltonian V;
  V.n_sites = 2;
  V.terms.push_back({{{0, PauliOp::X}}, Complex{1.0, 0.0}});
  CHECK_THROWS(nqs::interaction_picture(1.0, V, 0.1));
}

TEST_CASE("hermiticity check sums coefficients per distinct string") {
  PauliStringHamiltonian H;
  H.n_sites = 2;
  H.terms.push_back({{{0, PauliOp::Z}}, Complex{0.0, 1.0}});
  CHECK_FALSE(nqs::is_hermitian(H));
  // A cancelling partner restores hermiticity of the sum.
  H.terms.push_back({{{0, PauliOp::Z}}, Complex{0.0, -1.0}});
  CHECK(nqs::is_hermitian(H));
}

TEST_CASE("JSON round-trip preserves terms exactly") {
  Lattice3D lat(2, 2, 2);
  auto H = nqs::rotate_basis_y(nqs::interaction_picture(1.7, ising_zz(lat, 0.6), 0.9));
  auto j = nqs::hamiltonian_to_json(H);
  auto H2 = nqs::hamiltonian_from_json(j);
  REQUIRE(H2.n_sites == H.n_sites);
  REQUIRE(H2.terms.size() == H.terms.size());
  for (std::size_t k = 0; k < H.terms.size(); ++k) {
    CHECK(H2.terms[k].ops == H.terms[k].ops);
    CHECK(H2.terms[k].coefficient == H.terms[k].coefficient);
  }
}

TEST_CASE("kernel groups terms by flip set; diagonal needs no ratios") {
  Lattice3D lat(2, 2, 3);
  auto H = nqs::build_tfim(lat, 1.0, 2.0);
  LocalEnergyKernel kernel(H);
  // One diagonal group (all ZZ) plus one group per single-site X flip.
  CHECK(kernel.n_groups() == 13);
  CHECK(kernel.n_offdiagonal_groups() == 12);

  std::mt19937_64 rng(3);
  auto s = random_config(12, rng);
  double zz = 0.0;
  for (auto [i, j] : lat.bonds()) zz += static_cast<double>(s[i]) * s[j];
  const Complex diag = kernel.eval_diagonal(s);
  CHECK(diag.real() == doctest::Approx(-zz).epsilon(1e-13));
  CHECK(diag.imag() == 0.0);
}
