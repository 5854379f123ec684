// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Sampling of |Psi|^2: Metropolis single-spin-flip chains and exact
// enumeration, both returning a weighted row ensemble.
//
// Rows are unique configurations with weights summing to 1. Because the
// network and every observable used here are invariant under lattice
// translations, sampled configurations can be replaced by the
// lexicographically minimal translate of their orbit ("canonicalized")
// without changing any weighted estimate; this bounds the number of rows by
// the orbit count rather than the sample count. Canonicalization is on by
// default for Metropolis sampling and available as a separate transform for
// enumerated ensembles.

#ifndef NQS3D_SAMPLER_HPP_
#define NQS3D_SAMPLER_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <unordered_map>
#include <vector>

#include "nqs3d/lattice.hpp"
#include "nqs3d/network.hpp"
#include "nqs3d/pauli.hpp"

namespace nqs {

struct SamplerConfig {
  int n_samples = 4096;  // total retained samples; must divide by n_chains
  int n_chains = 8;
  int burn_in_sweeps = 10;  // discarded sweeps per chain (1 sweep = n_sites proposals)
  int thin_sweeps = 1;      // sweeps between retained samples
  std::uint64_t seed = 0;   // chain c uses seed + c
  bool canonicalize = true;
};

struct Ensemble {
  std::vector<SpinConfiguration> configs;  // unique rows
  std::vector<Complex> log_amps;           // ln Psi per row
  std::vector<double> weights;             // per-row weight, sums to 1
  // chain_weights[c][row]: fraction of chain c's samples on each row; every
  // chain row sums to 1. Exact ensembles have a single pseudo-chain.
  std::vector<std::vector<double>> chain_weights;
  double acceptance_rate = 1.0;
  bool exact = false;
  int n_chains = 1;
};

// Mean and a split-chain standard error for a per-row quantity. Exact
// ensembles report error 0.
struct WeightedStats {
  double mean = 0.0;
  double error = 0.0;
};
WeightedStats ensemble_stats(const Ensemble& e, const std::vector<double>& values);
Complex ensemble_mean(const Ensemble& e, const std::vector<Complex>& values);

// Lexicographically minimal translated bitmask over the orbit.
std::uint64_t canonical_orbit_mask(std::uint64_t mask, const Lattice3D& lat);

// Memoized ln Psi lookup keyed by canonical orbit mask; valid for any orbit
// member because log_psi is bit-exactly translation invariant. Holds
// references: keep net and lat alive and unchanged while using it.
class LogPsiCache {
 public:
  LogPsiCache(const NetworkState& net, const Lattice3D& lat);
  Complex at(std::uint64_t mask);
  std::size_t size() const { return cache_.size(); }

 private:
  const NetworkState& net_;
  const Lattice3D& lat_;
  std::unordered_map<std::uint64_t, Complex> cache_;
};

// Full 2^N ensemble with Boltzmann weights |Psi(s)|^2 / Z. One pseudo-chain,
// exact flag set. Limited to n_sites <= 20.
Ensemble exact_enumeration(const NetworkState& net, const Lattice3D& lat);

// Merge rows onto canonical orbit representatives (weights add; the log
// amplitude is re-evaluated at the representative).
Ensemble compress_to_orbits(const Ensemble& e, const NetworkState& net,
                            const Lattice3D& lat);

// Metropolis |Psi|^2 sampler with persistent (warm-started) chains. Chains
// start at independent uniformly random configurations and persist across
// sample() calls, so consecutive calls during time evolution start near the
// previous distribution.
class MetropolisSampler {
 public:
  MetropolisSampler(const Lattice3D& lat, const SamplerConfig& cfg);

  Ensemble sample(const NetworkState& net);
  void reset_chains();

  // min(1, |Psi(s')/Psi(s)|^2) from the log-amplitude difference.
  static double acceptance_probability(const Complex& delta_log_psi);

 private:
  Lattice3D lat_;
  SamplerConfig cfg_;
  std::vector<SpinConfiguration> chains_;
  std::vector<std::mt19937_64> rngs_;
};

}  // namespace nqs

#endif  // NQS3D_SAMPLER_HPP_
