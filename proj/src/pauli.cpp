// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "nqs3d/pauli.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nqs {

namespace {

void sort_ops(PauliString& p) {
  std::sort(p.ops.begin(), p.ops.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
}

// Canonical key of the operator content, ignoring the coefficient.
std::string string_key(const PauliString& p) {
  std::string k;
  for (const auto& [site, op] : p.ops) {
    k += std::to_string(site);
    k += "XYZ"[static_cast<int>(op)];
  }
  return k;
}

}  // namespace

PauliStringHamiltonian build_tfim(const Lattice3D& lattice, double J, double h) {
  if (!std::isfinite(J) || !std::isfinite(h)) {
    throw std::invalid_argument("build_tfim: couplings must be finite");
  }
  PauliStringHamiltonian H;
  H.n_sites = lattice.n_sites();
  for (auto [i, j] : lattice.bonds()) {
    PauliString p;
    p.ops = {{i, PauliOp::Z}, {j, PauliOp::Z}};
    p.coefficient = Complex(-J, 0.0);
    H.terms.push_back(std::move(p));
  }
  for (int i = 0; i < lattice.n_sites(); ++i) {
    PauliString p;
    p.ops = {{i, PauliOp::X}};
    p.coefficient = Complex(-h, 0.0);
    H.terms.push_back(std::move(p));
  }
  return H;
}

PauliStringHamiltonian rotate_basis_y(const PauliStringHamiltonian& H) {
  PauliStringHamiltonian out;
  out.n_sites = H.n_sites;
  out.terms.reserve(H.terms.size());
  for (const auto& t : H.terms) {
    PauliString p;
    p.coefficient = t.coefficient;
    p.ops.reserve(t.ops.size());
    for (const auto& [site, op] : t.ops) {
      switch (op) {
        case PauliOp::Z:
          p.ops.emplace_back(site, PauliOp::X);
          break;
        case PauliOp::X:
          p.ops.emplace_back(site, PauliOp::Z);
          p.coefficient = -p.coefficient;
          break;
        case PauliOp::Y:
          p.ops.emplace_back(site, PauliOp::Y);
          break;
      }
    }
    out.terms.push_back(std::move(p));
  }
  return out;
}

PauliStringHamiltonian interaction_picture(double h, const PauliStringHamiltonian& V,
                                           double t) {
  for (const auto& term : V.terms) {
    for (const auto& [site, op] : term.ops) {
      if (op != PauliOp::Z) {
        throw std::invalid_argument(
            "interaction_picture: V must contain only Z operators");
      }
    }
  }
  const double c = std::cos(2.0 * h * t);
  const double s = std::sin(2.0 * h * t);
  PauliStringHamiltonian out;
  out.n_sites = V.n_sites;
  for (const auto& term : V.terms) {
    const std::size_t k = term.ops.size();
    // Expand prod_i (c Z_i - s Y_i) over the 2^k o choices.
    for (std::uint64_t choice = 0; choice < (std::uint64_t{1} << k); ++choice) {
      PauliString p;
      p.coefficient = term.coefficient;
      p.ops.reserve(k);
      for (std::size_t b = 0; b < k; ++b) {
        const int site = term.ops[b].first;
        if ((choice >> b) & 1) {
          p.ops.emplace_back(site, PauliOp::Y);
          p.coefficient *= -s;
        } else {
          p.ops.emplace_back(site, PauliOp::Z);
          p.coefficient *= c;
        }
      }
      sort_ops(p);
      out.terms.push_back(std::move(p));
    }
  }
  return out;
}

bool is_hermitian(const PauliStringHamiltonian& H, double tol) {
  std::map<std::string, Complex> total;
  for (const auto& t : H.terms) {
    PauliString sorted = t;
    sort_ops(sorted);
    total[string_key(sorted)] += t.coefficient;
  }
  for (const auto& [key, c] : total) {
    if (std::abs(c.imag()) > tol) return false;
  }
  return true;
}

nlohmann::json hamiltonian_to_json(const PauliStringHamiltonian& H) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["n_sites"] = H.n_sites;
  auto& terms = j["terms"] = nlohmann::json::array();
  for (const auto& t : H.terms) {
    nlohmann::json jt;
    jt["coefficient"] = {t.coefficient.real(), t.coefficient.imag()};
    auto& ops = jt["ops"] = nlohmann::json::array();
    for (const auto& [site, op] : t.ops) {
      ops.push_back({{"site", site},
                     {"op", std::string(1, "XYZ"[static_cast<int>(op)])}});
    }
    terms.push_back(std::move(jt));
  }
  return j;
}

PauliStringHamiltonian hamiltonian_from_json(const nlohmann::json& j) {
  if (j.at("schema_version").get<int>() != 1) {
    throw std::runtime_error("hamiltonian_from_json: unknown schema version");
  }
  PauliStringHamiltonian H;
  H.n_sites = j.at("n_sites").get<int>();
  for (const auto& jt : j.at("terms")) {
    PauliString p;
    const auto& c = jt.at("coefficient");
    p.coefficient = Complex(c.at(0).get<double>(), c.at(1).get<double>());
    for (const auto& jo : jt.at("ops")) {
      const std::string op = jo.at("op").get<std::string>();
      PauliOp o;
      if (op == "X") {
        o = PauliOp::X;
      } else if (op == "Y") {
        o = PauliOp::Y;
      } else if (op == "Z") {
        o = PauliOp::Z;
      } else {
        throw std::runtime_error("hamiltonian_from_json: bad op " + op);
      }
      p.ops.emplace_back(jo.at("site").get<int>(), o);
    }
    H.terms.push_back(std::move(p));
  }
  return H;
}

LocalEnergyKernel::LocalEnergyKernel(const PauliStringHamiltonian& H) {
  std::map<std::vector<int>, std::size_t> group_of;
  for (const auto& t : H.terms) {
    Term term;
    term.coefficient = t.coefficient;
    std::vector<int> flips;
    for (const auto& [site, op] : t.ops) {
      if (site < 0 || site >= H.n_sites) {
        throw std::invalid_argument("LocalEnergyKernel: site out of range");
      }
      switch (op) {
        case PauliOp::Z:
          term.z_sites.push_back(site);
          break;
        case PauliOp::X:
          flips.push_back(site);
          break;
        case PauliOp::Y:
          term.y_sites.push_back(site);
          flips.push_back(site);
          break;
      }
    }
    std::sort(flips.begin(), flips.end());
    auto [it, inserted] = group_of.try_emplace(flips, groups_.size());
    if (inserted) {
      groups_.push_back(Group{flips, {}});
    }
    groups_[it->second].terms.push_back(std::move(term));
  }
}

std::size_t LocalEnergyKernel::n_offdiagonal_groups() const {
  std::size_t n = 0;
  for (const auto& g : groups_) n += !g.flip_sites.empty();
  return n;
}

}  // namespace nqs
