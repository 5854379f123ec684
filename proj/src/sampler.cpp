// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "nqs3d/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace nqs {
namespace {

std::uint64_t translate_mask(std::uint64_t mask, const std::vector<int>& perm) {
  std::uint64_t out = 0;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if ((mask >> i) & 1u) out |= std::uint64_t{1} << perm[i];
  }
  return out;
}

void validate_config_struct(const SamplerConfig& cfg) {
  if (cfg.n_samples <= 0 || cfg.n_chains <= 0) {
    throw std::invalid_argument("sampler: n_samples and n_chains must be positive");
  }
  if (cfg.n_samples % cfg.n_chains != 0) {
    throw std::invalid_argument("sampler: n_samples must be divisible by n_chains");
  }
  if (cfg.burn_in_sweeps < 0 || cfg.thin_sweeps < 1) {
    throw std::invalid_argument("sampler: burn_in_sweeps >= 0 and thin_sweeps >= 1 required");
  }
}

// Assembles an Ensemble from per-chain mask counts; rows sorted by mask.
Ensemble build_ensemble(const std::vector<std::map<std::uint64_t, std::int64_t>>& counts,
                        LogPsiCache& cache, int n_sites, int per_chain) {
  std::map<std::uint64_t, std::size_t> row_of;
  for (const auto& chain : counts) {
    for (const auto& [mask, c] : chain) row_of.emplace(mask, 0);
  }
  Ensemble e;
  e.n_chains = static_cast<int>(counts.size());
  std::size_t idx = 0;
  for (auto& [mask, row] : row_of) {
    row = idx++;
    e.configs.push_back(mask_to_config(mask, n_sites));
    e.log_amps.push_back(cache.at(mask));
  }
  const std::size_t n_rows = row_of.size();
  e.weights.assign(n_rows, 0.0);
  e.chain_weights.assign(counts.size(), std::vector<double>(n_rows, 0.0));
  const double total = static_cast<double>(per_chain) * static_cast<double>(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (const auto& [mask, cnt] : counts[c]) {
      const std::size_t row = row_of[mask];
      e.chain_weights[c][row] = static_cast<double>(cnt) / per_chain;
      e.weights[row] += static_cast<double>(cnt) / total;
    }
  }
  return e;
}

}  // namespace

LogPsiCache::LogPsiCache(const NetworkState& net, const Lattice3D& lat)
    : net_(net), lat_(lat) {}

Complex LogPsiCache::at(std::uint64_t mask) {
  const std::uint64_t canon = canonical_orbit_mask(mask, lat_);
  auto it = cache_.find(canon);
  if (it != cache_.end()) return it->second;
  const Complex v = log_psi(net_, mask_to_config(canon, lat_.n_sites()));
  cache_.emplace(canon, v);
  return v;
}

WeightedStats ensemble_stats(const Ensemble& e, const std::vector<double>& values) {
  if (values.size() != e.weights.size()) {
    throw std::invalid_argument("ensemble_stats: value count != row count");
  }
  WeightedStats out;
  for (std::size_t r = 0; r < values.size(); ++r) out.mean += e.weights[r] * values[r];
  if (e.exact || e.n_chains < 2) return out;

  std::vector<double> chain_means;
  chain_means.reserve(e.chain_weights.size());
  for (const auto& cw : e.chain_weights) {
    double m = 0.0;
    for (std::size_t r = 0; r < values.size(); ++r) m += cw[r] * values[r];
    chain_means.push_back(m);
  }
  double avg = 0.0;
  for (double m : chain_means) avg += m;
  avg /= static_cast<double>(chain_means.size());
  double var = 0.0;
  for (double m : chain_means) var += (m - avg) * (m - avg);
  var /= static_cast<double>(chain_means.size() - 1);
  out.error = std::sqrt(var / static_cast<double>(chain_means.size()));
  return out;
}

Complex ensemble_mean(const Ensemble& e, const std::vector<Complex>& values) {
  if (values.size() != e.weights.size()) {
    throw std::invalid_argument("ensemble_mean: value count != row count");
  }
  Complex m{0.0, 0.0};
  for (std::size_t r = 0; r < values.size(); ++r) m += e.weights[r] * values[r];
  return m;
}

std::uint64_t canonical_orbit_mask(std::uint64_t mask, const Lattice3D& lat) {
  std::uint64_t best = mask;
  for (const auto& perm : lat.translations()) {
    best = std::min(best, translate_mask(mask, perm));
  }
  return best;
}

Ensemble exact_enumeration(const NetworkState& net, const Lattice3D& lat) {
  const int n = lat.n_sites();
  if (n > 20) throw std::invalid_argument("exact_enumeration limited to n_sites <= 20");
  const std::uint64_t dim = std::uint64_t{1} << n;
  LogPsiCache cache(net, lat);

  Ensemble e;
  e.exact = true;
  e.n_chains = 1;
  e.acceptance_rate = 1.0;
  e.configs.reserve(dim);
  e.log_amps.reserve(dim);
  double max_re = -1e300;
  for (std::uint64_t mask = 0; mask < dim; ++mask) {
    e.configs.push_back(mask_to_config(mask, n));
    e.log_amps.push_back(cache.at(mask));
    max_re = std::max(max_re, e.log_amps.back().real());
  }
  e.weights.resize(dim);
  double z = 0.0;
  for (std::uint64_t mask = 0; mask < dim; ++mask) {
    e.weights[mask] = std::exp(2.0 * (e.log_amps[mask].real() - max_re));
    z += e.weights[mask];
  }
  for (double& w : e.weights) w /= z;
  e.chain_weights = {e.weights};
  return e;
}

Ensemble compress_to_orbits(const Ensemble& e, const NetworkState& net,
                            const Lattice3D& lat) {
  std::map<std::uint64_t, std::size_t> row_of;
  for (const SpinConfiguration& s : e.configs) {
    row_of.emplace(canonical_orbit_mask(config_to_mask(s), lat), 0);
  }
  Ensemble out;
  out.exact = e.exact;
  out.acceptance_rate = e.acceptance_rate;
  out.n_chains = e.n_chains;
  LogPsiCache cache(net, lat);
  std::size_t idx = 0;
  for (auto& [mask, row] : row_of) {
    row = idx++;
    out.configs.push_back(mask_to_config(mask, lat.n_sites()));
    out.log_amps.push_back(cache.at(mask));
  }
  out.weights.assign(row_of.size(), 0.0);
  out.chain_weights.assign(e.chain_weights.size(), std::vector<double>(row_of.size(), 0.0));
  for (std::size_t r = 0; r < e.configs.size(); ++r) {
    const std::size_t row = row_of[canonical_orbit_mask(config_to_mask(e.configs[r]), lat)];
    out.weights[row] += e.weights[r];
    for (std::size_t c = 0; c < e.chain_weights.size(); ++c) {
      out.chain_weights[c][row] += e.chain_weights[c][r];
    }
  }
  return out;
}

MetropolisSampler::MetropolisSampler(const Lattice3D& lat, const SamplerConfig& cfg)
    : lat_(lat), cfg_(cfg) {
  validate_config_struct(cfg_);
  rngs_.reserve(static_cast<std::size_t>(cfg_.n_chains));
  for (int c = 0; c < cfg_.n_chains; ++c) {
    rngs_.emplace_back(cfg_.seed + static_cast<std::uint64_t>(c));
  }
  reset_chains();
}

void MetropolisSampler::reset_chains() {
  chains_.assign(static_cast<std::size_t>(cfg_.n_chains),
                 SpinConfiguration(static_cast<std::size_t>(lat_.n_sites()), 1));
  for (int c = 0; c < cfg_.n_chains; ++c) {
    auto& rng = rngs_[static_cast<std::size_t>(c)];
    for (auto& s : chains_[static_cast<std::size_t>(c)]) {
      s = (rng() & 1u) ? std::int8_t{1} : std::int8_t{-1};
    }
  }
}

double MetropolisSampler::acceptance_probability(const Complex& delta_log_psi) {
  const double two_re = 2.0 * delta_log_psi.real();
  return two_re >= 0.0 ? 1.0 : std::exp(two_re);
}

Ensemble MetropolisSampler::sample(const NetworkState& net) {
  const int n = lat_.n_sites();
  const int per_chain = cfg_.n_samples / cfg_.n_chains;
  LogPsiCache cache(net, lat_);
  std::uniform_int_distribution<int> site_dist(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::map<std::uint64_t, std::int64_t>> counts(
      static_cast<std::size_t>(cfg_.n_chains));
  std::int64_t accepted = 0, proposed = 0;

  for (int c = 0; c < cfg_.n_chains; ++c) {
    auto& rng = rngs_[static_cast<std::size_t>(c)];
    SpinConfiguration& s = chains_[static_cast<std::size_t>(c)];
    std::uint64_t mask = config_to_mask(s);
    Complex lp = cache.at(mask);

    auto sweep = [&]() {
      for (int p = 0; p < n; ++p) {
        const int k = site_dist(rng);
        const std::uint64_t mask_new = mask ^ (std::uint64_t{1} << k);
        const Complex lp_new = cache.at(mask_new);
        ++proposed;
        if (unit(rng) < acceptance_probability(lp_new - lp)) {
          ++accepted;
          mask = mask_new;
          lp = lp_new;
          s[static_cast<std::size_t>(k)] =
              static_cast<std::int8_t>(-s[static_cast<std::size_t>(k)]);
        }
      }
    };

    for (int b = 0; b < cfg_.burn_in_sweeps; ++b) sweep();
    for (int r = 0; r < per_chain; ++r) {
      for (int t = 0; t < cfg_.thin_sweeps; ++t) sweep();
      const std::uint64_t key =
          cfg_.canonicalize ? canonical_orbit_mask(mask, lat_) : mask;
      ++counts[static_cast<std::size_t>(c)][key];
    }
  }

  Ensemble e = build_ensemble(counts, cache, n, per_chain);
  e.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(proposed);
  if (e.acceptance_rate < 0.01) {
    std::fprintf(stderr,
                 "warning: Metropolis acceptance rate %.4f below 0.01; "
                 "samples are likely strongly correlated\n",
                 e.acceptance_rate);
  }
  return e;
}

}  // namespace nqs
