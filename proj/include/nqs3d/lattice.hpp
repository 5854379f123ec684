// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Periodic 3D lattices: site indexing, deduplicated nearest-neighbor bonds,
// translations, and spin configurations.

#ifndef NQS3D_LATTICE_HPP_
#define NQS3D_LATTICE_HPP_

#include <array>
#include <cstdint>
#include <vector>

namespace nqs {

// One sigma^z assignment per site; values are strictly +1 or -1.
using SpinConfiguration = std::vector<std::int8_t>;

class Lattice3D {
 public:
  // Axis lengths must all be >= 2.
  Lattice3D(int lx, int ly, int lz);

  const std::array<int, 3>& dims() const { return dims_; }
  int n_sites() const { return n_sites_; }

  // Row-major index, z fastest. Errors on out-of-range coordinates.
  int site_index(int x, int y, int z) const;
  std::array<int, 3> site_coords(int index) const;

  // Deduplicated unordered nearest-neighbor pairs (i < j), sorted.
  // 3*n_sites entries when all axes >= 3; an axis of length 2 contributes
  // half its naive count because the wrap-around bond duplicates the
  // interior bond.
  const std::vector<std::pair<int, int>>& bonds() const { return bonds_; }

  // translations()[t] is the site permutation of the t-th lattice
  // translation (t indexes shift vectors row-major, t=0 is the identity):
  // site i maps to translations()[t][i].
  const std::vector<std::vector<int>>& translations() const {
    return translations_;
  }

  // Applies translation t to a configuration.
  SpinConfiguration translate(const SpinConfiguration& s, int t) const;

 private:
  std::array<int, 3> dims_;
  int n_sites_;
  std::vector<std::pair<int, int>> bonds_;
  std::vector<std::vector<int>> translations_;
};

// Bitmask encoding for n_sites <= 64: bit k set <=> spins[k] == -1, so the
// all-up configuration is mask 0. Shared convention with the ED module.
std::uint64_t config_to_mask(const SpinConfiguration& s);
SpinConfiguration mask_to_config(std::uint64_t mask, int n_sites);

// Asserts every entry is +1 or -1 and the length matches; errors otherwise.
void validate_configuration(const SpinConfiguration& s, const Lattice3D& lat);

}  // namespace nqs

#endif  // NQS3D_LATTICE_HPP_
