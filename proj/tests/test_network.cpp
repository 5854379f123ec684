// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <random>
#include <vector>

#include "nqs3d/lattice.hpp"
#include "nqs3d/network.hpp"
#include "support/reference_network.hpp"

using nqs::ArchitectureSpec;
using nqs::Complex;
using nqs::Lattice3D;
using nqs::NetworkState;
using nqs::SpinConfiguration;

namespace {

SpinConfiguration random_config(int n_sites, std::mt19937_64& rng) {
  SpinConfiguration s(n_sites);
  for (auto& v : s) v = (rng() & 1u) ? 1 : -1;
  return s;
}

// Offset of conv_b's bias for a 0-based block, from the documented layout:
// convs in block order, weights then bias per conv, block 0's first conv
// bias-free.
int conv_b_bias_offset(const ArchitectureSpec& arch, int block) {
  const int w = 2 * arch.channels;
  int off = 0;
  for (int b = 0; b <= block; ++b) {
    off += 27 * (b == 0 ? 1 : w) * w + (b == 0 ? 0 : w);  // conv_a
    off += 27 * w * w;                                    // conv_b weights
    if (b == block) return off;
    off += w;  // conv_b bias
  }
  return off;
}

}  // namespace

TEST_CASE("parameter counts for the published architectures") {
  CHECK(nqs::parameter_count({2, 4}) == 5424);
  CHECK(nqs::parameter_count({3, 4}) == 8896);
  CHECK(nqs::parameter_count({4, 4}) == 12368);
  // Closed form: 27*2c + (2n-1)*(27*(2c)^2 + 2c).
  CHECK(nqs::parameter_count({1, 1}) == 164);
  CHECK(nqs::parameter_count({3, 2}) == 2288);
}

TEST_CASE("zero parameters give ln Psi = ln(c * n_sites) for any configuration") {
  for (auto dims : {std::array<int, 3>{2, 2, 3}, {3, 3, 3}, {2, 3, 4}}) {
    for (int c : {1, 4}) {
      auto net = nqs::make_network({2, c}, dims);
      const int V = dims[0] * dims[1] * dims[2];
      std::mt19937_64 rng(9);
      for (int trial = 0; trial < 3; ++trial) {
        auto s = random_config(V, rng);
        const Complex lp = nqs::log_psi(net, s);
        CHECK(lp.real() == doctest::Approx(std::log(static_cast<double>(c) * V))
                               .epsilon(1e-14));
        CHECK(lp.imag() == doctest::Approx(0.0).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("forward pass matches the scalar reference implementation") {
  std::mt19937_64 rng(31);
  struct Case {
    std::array<int, 3> dims;
    ArchitectureSpec arch;
    double scale;
  };
  for (const auto& cs : {Case{{2, 2, 3}, {2, 4}, 0.1}, Case{{3, 3, 3}, {2, 4}, 0.1},
                         Case{{2, 2, 2}, {3, 2}, 1.0}, Case{{2, 3, 4}, {1, 1}, 0.5}}) {
    auto net = nqs::init_parameters(cs.arch, cs.dims, 1234 + cs.dims[2], cs.scale);
    const int V = cs.dims[0] * cs.dims[1] * cs.dims[2];
    for (int trial = 0; trial < 5; ++trial) {
      auto s = random_config(V, rng);
      const Complex got = nqs::log_psi(net, s);
      const Complex want = nqs::test::reference_log_psi(net, s);
      CHECK(std::abs(got - want) <= 1e-10 * (1.0 + std::abs(want)));
    }
  }
}

TEST_CASE("log-derivatives match central finite differences") {
  const ArchitectureSpec arch{1, 1};
  const std::array<int, 3> dims{2, 2, 2};
  auto net = nqs::init_parameters(arch, dims, 77, 0.2);
  std::mt19937_64 rng(13);
  const double h = 1e-5;
  for (int trial = 0; trial < 2; ++trial) {
    auto s = random_config(8, rng);
    const auto o = nqs::log_derivatives(net, s);
    REQUIRE(static_cast<int>(o.size()) == nqs::parameter_count(arch));
    double max_abs = 1.0;
    for (const auto& v : o) max_abs = std::max(max_abs, std::abs(v));
    for (std::size_t k = 0; k < o.size(); ++k) {
      NetworkState p = net, m = net;
      p.theta[k] += h;
      m.theta[k] -= h;
      const Complex fd = (nqs::log_psi(p, s) - nqs::log_psi(m, s)) / (2.0 * h);
      CHECK(std::abs(fd - o[k]) <= 1e-6 * max_abs);
    }
  }
}

TEST_CASE("zero-parameter log-derivatives are the analytic head-through-skip value") {
  // At theta = 0 every field is zero, so only the second conv's bias in each
  // block reaches the head (through the skip chain), with weight
  // gelu'(0)/sqrt(block+1) = 0.5/sqrt(block+1) per site, and the head adjoint
  // averages to 1/(c V) (real channels) and i/(c V) (imaginary channels).
  const ArchitectureSpec arch{3, 2};
  const std::array<int, 3> dims{2, 2, 3};
  auto net = nqs::make_network(arch, dims);
  std::mt19937_64 rng(41);
  const int P = nqs::parameter_count(arch);
  for (int trial = 0; trial < 2; ++trial) {
    auto s = random_config(12, rng);
    const auto o = nqs::log_derivatives(net, s);
    std::vector<Complex> expect(static_cast<std::size_t>(P), Complex{0.0, 0.0});
    for (int block = 0; block < arch.depth; ++block) {
      const int base = conv_b_bias_offset(arch, block);
      const double g = 0.5 / (arch.channels * std::sqrt(static_cast<double>(block + 1)));
      for (int ch = 0; ch < 2 * arch.channels; ++ch) {
        expect[static_cast<std::size_t>(base + ch)] =
            (ch % 2 == 0) ? Complex{g, 0.0} : Complex{0.0, g};
      }
    }
    for (int k = 0; k < P; ++k) {
      CHECK(std::abs(o[static_cast<std::size_t>(k)] - expect[static_cast<std::size_t>(k)]) <=
            1e-13);
    }
  }
}

TEST_CASE("fused forward-backward agrees with the separate entry points") {
  auto net = nqs::init_parameters({2, 2}, {2, 2, 3}, 5, 0.3);
  std::mt19937_64 rng(17);
  auto s = random_config(12, rng);
  const auto fused = nqs::log_psi_and_derivatives(net, s);
  CHECK(fused.log_psi == nqs::log_psi(net, s));
  const auto o = nqs::log_derivatives(net, s);
  REQUIRE(fused.o.size() == o.size());
  for (std::size_t k = 0; k < o.size(); ++k) CHECK(fused.o[k] == o[k]);
}

TEST_CASE("lattice translations leave ln Psi bit-identical") {
  Lattice3D lat(2, 2, 3);
  auto net = nqs::init_parameters({2, 4}, {2, 2, 3}, 99, 0.5);
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 4; ++trial) {
    auto s = random_config(12, rng);
    const Complex base = nqs::log_psi(net, s);
    for (int t = 0; t < lat.n_sites(); ++t) {
      const Complex shifted = nqs::log_psi(net, lat.translate(s, t));
      CHECK(shifted.real() == base.real());
      CHECK(shifted.imag() == base.imag());
    }
  }
}

TEST_CASE("the same parameters evaluate on any lattice size") {
  auto net = nqs::init_parameters({2, 4}, {2, 2, 3}, 7, 0.1);
  const auto theta = net.theta;
  net.dims = {3, 3, 3};
  std::mt19937_64 rng(3);
  auto s = random_config(27, rng);
  CHECK_NOTHROW(nqs::log_psi(net, s));
  CHECK(net.theta == theta);  // dims change does not touch parameters
}

TEST_CASE("initialization is deterministic in the seed") {
  auto a = nqs::init_parameters({2, 4}, {2, 2, 3}, 42, 0.01);
  auto b = nqs::init_parameters({2, 4}, {2, 2, 3}, 42, 0.01);
  auto c = nqs::init_parameters({2, 4}, {2, 2, 3}, 43, 0.01);
  CHECK(a.theta == b.theta);
  CHECK(a.theta != c.theta);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  auto net = nqs::init_parameters({3, 4}, {2, 2, 3}, 1001, 0.05);
  const std::string path = "checkpoint_roundtrip_test.json";
  nqs::save_checkpoint(net, 1001, path);
  auto loaded = nqs::load_checkpoint(path);
  std::remove(path.c_str());
  CHECK(loaded.seed == 1001);
  CHECK(loaded.net.arch.depth == net.arch.depth);
  CHECK(loaded.net.arch.channels == net.arch.channels);
  CHECK(loaded.net.dims == net.dims);
  REQUIRE(loaded.net.theta.size() == net.theta.size());
  CHECK(loaded.net.theta == net.theta);
}

TEST_CASE("configuration length must match the evaluation lattice") {
  auto net = nqs::make_network({2, 4}, {2, 2, 3});
  SpinConfiguration wrong(8, 1);
  CHECK_THROWS(nqs::log_psi(net, wrong));
}
