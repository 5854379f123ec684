// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "nqs3d/observables.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace nqs {
namespace {

std::vector<double> row_masks_values(const Ensemble& e,
                                     const std::vector<std::uint64_t>& pair_masks) {
  std::vector<double> vals(e.configs.size());
  for (std::size_t r = 0; r < e.configs.size(); ++r) {
    const std::uint64_t mask = config_to_mask(e.configs[r]);
    double acc = 0.0;
    for (std::uint64_t m : pair_masks) {
      acc += (std::popcount(m & mask) & 1) ? -1.0 : 1.0;
    }
    vals[r] = acc / static_cast<double>(pair_masks.size());
  }
  return vals;
}

double qfi_from_weights(const std::vector<double>& w, const std::vector<double>& m,
                        int n_sites) {
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t r = 0; r < w.size(); ++r) {
    m1 += w[r] * m[r];
    m2 += w[r] * m[r] * m[r];
  }
  return (m2 - m1 * m1) / static_cast<double>(n_sites);
}

}  // namespace

std::vector<Complex> local_values(const NetworkState& net,
                                  const LocalEnergyKernel& kernel,
                                  const Ensemble& e, const Lattice3D& lat) {
  LogPsiCache cache(net, lat);
  std::vector<Complex> out(e.configs.size());
  for (std::size_t r = 0; r < e.configs.size(); ++r) {
    const std::uint64_t mask = config_to_mask(e.configs[r]);
    const Complex lp = e.log_amps[r];
    auto ratio = [&](const SpinConfiguration& /*flipped*/,
                     const std::vector<int>& flip_sites) {
      std::uint64_t fmask = mask;
      for (int site : flip_sites) fmask ^= std::uint64_t{1} << site;
      return std::exp(cache.at(fmask) - lp);
    };
    out[r] = kernel.eval(e.configs[r], ratio);
  }
  return out;
}

WeightedStats magnetization(const NetworkState& net, const Ensemble& e,
                            const Lattice3D& lat, PauliOp axis) {
  const int n = lat.n_sites();
  PauliStringHamiltonian op;
  op.n_sites = n;
  for (int i = 0; i < n; ++i) {
    op.terms.push_back(PauliString{{{i, axis}}, Complex{1.0 / n, 0.0}});
  }
  const LocalEnergyKernel kernel(op);
  const std::vector<Complex> lv = local_values(net, kernel, e, lat);
  std::vector<double> re(lv.size());
  for (std::size_t r = 0; r < lv.size(); ++r) re[r] = lv[r].real();
  return ensemble_stats(e, re);
}

WeightedStats qfi_density(const Ensemble& e, const Lattice3D& lat) {
  const int n = lat.n_sites();
  std::vector<double> m(e.configs.size());
  for (std::size_t r = 0; r < e.configs.size(); ++r) {
    if (static_cast<int>(e.configs[r].size()) != n) {
      throw std::invalid_argument("qfi_density: configuration size mismatch");
    }
    double acc = 0.0;
    for (std::int8_t s : e.configs[r]) acc += s;
    m[r] = acc;
  }
  WeightedStats out;
  out.mean = qfi_from_weights(e.weights, m, n);
  if (e.exact || e.n_chains < 2) return out;
  std::vector<double> per_chain;
  per_chain.reserve(e.chain_weights.size());
  for (const auto& cw : e.chain_weights) per_chain.push_back(qfi_from_weights(cw, m, n));
  double avg = 0.0;
  for (double q : per_chain) avg += q;
  avg /= static_cast<double>(per_chain.size());
  double var = 0.0;
  for (double q : per_chain) var += (q - avg) * (q - avg);
  var /= static_cast<double>(per_chain.size() - 1);
  out.error = std::sqrt(var / static_cast<double>(per_chain.size()));
  return out;
}

std::vector<WeightedStats> correlation_profile(const Ensemble& e,
                                               const Lattice3D& lat, int max_R) {
  if (max_R < 0) throw std::invalid_argument("correlation_profile: max_R must be >= 0");
  const auto& [lx, ly, lz] = lat.dims();
  std::vector<WeightedStats> prof;
  prof.reserve(static_cast<std::size_t>(max_R) + 1);
  for (int R = 0; R <= max_R; ++R) {
    std::vector<std::uint64_t> pair_masks;
    for (int x = 0; x < lx; ++x) {
      for (int y = 0; y < ly; ++y) {
        for (int z = 0; z < lz; ++z) {
          const int i = lat.site_index(x, y, z);
          const int jx = lat.site_index((x + R) % lx, y, z);
          const int jy = lat.site_index(x, (y + R) % ly, z);
          const int jz = lat.site_index(x, y, (z + R) % lz);
          for (int j : {jx, jy, jz}) {
            pair_masks.push_back((std::uint64_t{1} << i) ^ (std::uint64_t{1} << j));
          }
        }
      }
    }
    prof.push_back(ensemble_stats(e, row_masks_values(e, pair_masks)));
  }
  return prof;
}

WeightedStats excess_energy(const NetworkState& net, const LocalEnergyKernel& kernel,
                            const Ensemble& e, const Lattice3D& lat,
                            double ground_energy) {
  const std::vector<Complex> lv = local_values(net, kernel, e, lat);
  std::vector<double> re(lv.size());
  for (std::size_t r = 0; r < lv.size(); ++r) re[r] = lv[r].real();
  WeightedStats stats = ensemble_stats(e, re);
  stats.mean = (stats.mean - ground_energy) / static_cast<double>(lat.n_sites());
  stats.error /= static_cast<double>(lat.n_sites());
  return stats;
}

}  // namespace nqs
