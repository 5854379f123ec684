// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// The 3D residual CNN wavefunction ln Psi_theta(s) and its per-parameter
// log-derivatives O_k(s) = d ln Psi / d theta_k.
//
// Pipeline: the spin field (one real channel, values +-1) passes through
// `depth` residual blocks; each block applies [3x3x3 circular conv -> GELU]
// twice and adds the result, rescaled by 1/sqrt(i+1) for 0-based block
// index i, to the block input. The first conv of block 0 lifts 1 -> 2c
// channels without bias and that block's skip path is the zero map; every
// other conv is 2c -> 2c with bias. The final 2c real channels pair into c
// complex fields (channel 2k real part, 2k+1 imaginary part), and
// ln Psi = log sum_{ch,sites} exp(field), evaluated with a max-shifted
// log-sum-exp whose summands are accumulated in a canonical (sorted) order
// so lattice translations of the input produce bit-identical outputs.
//
// Parameter layout: convs in block order (conv_a then conv_b per block);
// per conv, weights W[(o * in_ch + i) * 27 + k] with kernel offset index
// k = (dx+1)*9 + (dy+1)*3 + (dz+1), dx,dy,dz in {-1,0,1}, followed by the
// per-output-channel bias when present. GELU is the exact erf form.

#ifndef NQS3D_NETWORK_HPP_
#define NQS3D_NETWORK_HPP_

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "nqs3d/lattice.hpp"
#include "nqs3d/pauli.hpp"

namespace nqs {

struct ArchitectureSpec {
  int depth = 2;     // residual blocks n
  int channels = 4;  // complex output channels c; conv width is 2c
};

// 27*2c (bias-free lift) + (2n-1)*(27*(2c)^2 + 2c).
int parameter_count(const ArchitectureSpec& arch);

struct NetworkState {
  ArchitectureSpec arch;
  std::array<int, 3> dims{0, 0, 0};  // current evaluation lattice
  std::vector<double> theta;         // length parameter_count(arch), dims-independent
};

// Zero parameters: ln Psi = log(c * n_sites) exactly.
NetworkState make_network(const ArchitectureSpec& arch, const std::array<int, 3>& dims);

// i.i.d. Gaussian entries, std = scale / fan-in per layer, deterministic in seed.
NetworkState init_parameters(const ArchitectureSpec& arch, const std::array<int, 3>& dims,
                             std::uint64_t seed, double scale);

Complex log_psi(const NetworkState& net, const SpinConfiguration& s);

// Reverse-mode pass; complex cotangents through the real-valued network.
std::vector<Complex> log_derivatives(const NetworkState& net, const SpinConfiguration& s);

struct ForwardBackwardResult {
  Complex log_psi;
  std::vector<Complex> o;  // O_k(s), length parameter_count
};
ForwardBackwardResult log_psi_and_derivatives(const NetworkState& net,
                                              const SpinConfiguration& s);

// E_loc(s) for a compiled Hamiltonian, amplitude ratios from the network.
Complex local_energy(const LocalEnergyKernel& kernel, const NetworkState& net,
                     const SpinConfiguration& s, Complex log_psi_s);

// Checkpoint container: arch, dims, seed, theta. Round-trip is bit-exact.
void save_checkpoint(const NetworkState& net, std::uint64_t seed, const std::string& path);
struct Checkpoint {
  NetworkState net;
  std::uint64_t seed = 0;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nqs

#endif  // NQS3D_NETWORK_HPP_
