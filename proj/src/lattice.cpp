// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "nqs3d/lattice.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace nqs {

Lattice3D::Lattice3D(int lx, int ly, int lz) : dims_{lx, ly, lz} {
  for (int d : dims_) {
    if (d < 2) {
      throw std::invalid_argument("Lattice3D: every axis length must be >= 2, got " +
                                  std::to_string(lx) + "x" + std::to_string(ly) + "x" +
                                  std::to_string(lz));
    }
  }
  n_sites_ = lx * ly * lz;

  std::set<std::pair<int, int>> pairs;
  for (int x = 0; x < lx; ++x) {
    for (int y = 0; y < ly; ++y) {
      for (int z = 0; z < lz; ++z) {
        const int i = site_index(x, y, z);
        const int nbr[3] = {site_index((x + 1) % lx, y, z),
                            site_index(x, (y + 1) % ly, z),
                            site_index(x, y, (z + 1) % lz)};
        for (int j : nbr) {
          pairs.emplace(std::min(i, j), std::max(i, j));
        }
      }
    }
  }
  bonds_.assign(pairs.begin(), pairs.end());

  translations_.resize(n_sites_);
  for (int ax = 0; ax < lx; ++ax) {
    for (int ay = 0; ay < ly; ++ay) {
      for (int az = 0; az < lz; ++az) {
        const int t = site_index(ax, ay, az);
        auto& perm = translations_[t];
        perm.resize(n_sites_);
        for (int x = 0; x < lx; ++x) {
          for (int y = 0; y < ly; ++y) {
            for (int z = 0; z < lz; ++z) {
              perm[site_index(x, y, z)] =
                  site_index((x + ax) % lx, (y + ay) % ly, (z + az) % lz);
            }
          }
        }
      }
    }
  }
}

int Lattice3D::site_index(int x, int y, int z) const {
  if (x < 0 || x >= dims_[0] || y < 0 || y >= dims_[1] || z < 0 || z >= dims_[2]) {
    throw std::out_of_range("Lattice3D::site_index: coordinate out of range");
  }
  return (x * dims_[1] + y) * dims_[2] + z;
}

std::array<int, 3> Lattice3D::site_coords(int index) const {
  if (index < 0 || index >= n_sites_) {
    throw std::out_of_range("Lattice3D::site_coords: index out of range");
  }
  const int z = index % dims_[2];
  const int y = (index / dims_[2]) % dims_[1];
  const int x = index / (dims_[1] * dims_[2]);
  return {x, y, z};
}

SpinConfiguration Lattice3D::translate(const SpinConfiguration& s, int t) const {
  const auto& perm = translations_.at(t);
  SpinConfiguration out(n_sites_);
  for (int i = 0; i < n_sites_; ++i) out[perm[i]] = s[i];
  return out;
}

std::uint64_t config_to_mask(const SpinConfiguration& s) {
  std::uint64_t m = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] < 0) m |= (std::uint64_t{1} << k);
  }
  return m;
}

SpinConfiguration mask_to_config(std::uint64_t mask, int n_sites) {
  SpinConfiguration s(n_sites);
  for (int k = 0; k < n_sites; ++k) {
    s[k] = (mask >> k) & 1 ? std::int8_t{-1} : std::int8_t{1};
  }
  return s;
}

void validate_configuration(const SpinConfiguration& s, const Lattice3D& lat) {
  if (static_cast<int>(s.size()) != lat.n_sites()) {
    throw std::invalid_argument("configuration length does not match lattice");
  }
  for (auto v : s) {
    if (v != 1 && v != -1) {
      throw std::invalid_argument("configuration entries must be +1 or -1");
    }
  }
}

}  // namespace nqs
