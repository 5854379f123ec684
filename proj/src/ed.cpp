// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "nqs3d/ed.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>

namespace nqs {
namespace {

constexpr int kMaxDenseSites = 24;

// One Pauli string reduced to bit masks: out[b ^ flip] +=
// coeff * (-1)^popcount(b & sign_mask) * in[b], with the i^{n_y} ket phase
// folded into coeff.
struct CompiledTerm {
  std::uint64_t flip = 0;
  std::uint64_t sign_mask = 0;
  Complex coeff{0.0, 0.0};
};

std::vector<CompiledTerm> compile_terms(const PauliStringHamiltonian& H) {
  if (H.n_sites <= 0 || H.n_sites > kMaxDenseSites) {
    throw std::invalid_argument("dense reference limited to 1..24 sites, got " +
                                std::to_string(H.n_sites));
  }
  static const Complex kIPow[4] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
  std::vector<CompiledTerm> out;
  out.reserve(H.terms.size());
  for (const PauliString& term : H.terms) {
    CompiledTerm ct;
    std::uint64_t seen = 0;
    int ny = 0;
    for (const auto& [site, op] : term.ops) {
      if (site < 0 || site >= H.n_sites) {
        throw std::invalid_argument("operator site out of range");
      }
      const std::uint64_t bit = std::uint64_t{1} << site;
      if (seen & bit) throw std::invalid_argument("repeated site in one Pauli string");
      seen |= bit;
      switch (op) {
        case PauliOp::X:
          ct.flip |= bit;
          break;
        case PauliOp::Y:
          ct.flip |= bit;
          ct.sign_mask |= bit;
          ++ny;
          break;
        case PauliOp::Z:
          ct.sign_mask |= bit;
          break;
      }
    }
    ct.coeff = term.coefficient * kIPow[ny & 3];
    out.push_back(ct);
  }
  return out;
}

void apply_compiled(const std::vector<CompiledTerm>& terms, const std::vector<Complex>& in,
                    std::vector<Complex>& out) {
  const std::size_t dim = in.size();
  out.assign(dim, Complex{0.0, 0.0});
  for (const CompiledTerm& t : terms) {
    for (std::uint64_t b = 0; b < dim; ++b) {
      const double sign = (std::popcount(b & t.sign_mask) & 1) ? -1.0 : 1.0;
      out[b ^ t.flip] += t.coeff * sign * in[b];
    }
  }
}

double vec_norm(const std::vector<Complex>& v) {
  double s = 0.0;
  for (const Complex& a : v) s += std::norm(a);
  return std::sqrt(s);
}

Complex vec_dot(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

void vec_axpy(const Complex& alpha, const std::vector<Complex>& x, std::vector<Complex>& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// Lanczos tridiagonalization of a Hermitian operator restricted to the
// orthogonal complement of `deflate` vectors. Fully reorthogonalized.
struct LanczosBasis {
  std::vector<std::vector<Complex>> q;
  std::vector<double> alpha;
  std::vector<double> beta;  // beta[j] couples q[j-1] and q[j]; beta[0] unused
  double beta_next = 0.0;    // norm of the residual after the last vector
};

LanczosBasis lanczos(const std::vector<CompiledTerm>& terms, std::vector<Complex> v0,
                     int m, const std::vector<const std::vector<Complex>*>& deflate) {
  LanczosBasis out;
  for (const auto* d : deflate) vec_axpy(-vec_dot(*d, v0), *d, v0);
  double nrm = vec_norm(v0);
  if (nrm < 1e-300) throw std::runtime_error("lanczos start vector vanished");
  for (Complex& a : v0) a /= nrm;
  out.q.push_back(std::move(v0));
  std::vector<Complex> w;
  for (int j = 0; j < m; ++j) {
    apply_compiled(terms, out.q[static_cast<std::size_t>(j)], w);
    const double a = vec_dot(out.q[static_cast<std::size_t>(j)], w).real();
    out.alpha.push_back(a);
    for (const auto* d : deflate) vec_axpy(-vec_dot(*d, w), *d, w);
    for (const auto& qi : out.q) vec_axpy(-vec_dot(qi, w), qi, w);
    const double b = vec_norm(w);
    out.beta_next = b;
    if (b < 1e-13) break;  // invariant subspace reached
    if (j + 1 < m) {
      out.beta.push_back(b);
      std::vector<Complex> qn = w;
      for (Complex& x : qn) x /= b;
      out.q.push_back(std::move(qn));
    }
  }
  return out;
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tridiag_eig(const LanczosBasis& lb) {
  const int k = static_cast<int>(lb.alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    T(i, i) = lb.alpha[static_cast<std::size_t>(i)];
    if (i + 1 < k) {
      T(i, i + 1) = lb.beta[static_cast<std::size_t>(i)];
      T(i + 1, i) = lb.beta[static_cast<std::size_t>(i)];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  if (es.info() != Eigen::Success) throw std::runtime_error("tridiagonal eigensolve failed");
  return es;
}

// Lowest eigenpair of H (deflated), via restarted Lanczos.
struct EigResult {
  double value = 0.0;
  std::vector<Complex> vec;
  double residual = 0.0;
};

EigResult lowest_eigenpair(const std::vector<CompiledTerm>& terms, std::vector<Complex> v0,
                           double tol, int block_size, int max_restarts,
                           const std::vector<const std::vector<Complex>*>& deflate) {
  EigResult res;
  std::vector<Complex> hv;
  for (int restart = 0; restart < max_restarts; ++restart) {
    LanczosBasis lb = lanczos(terms, std::move(v0), block_size, deflate);
    const auto es = tridiag_eig(lb);
    const Eigen::VectorXd y = es.eigenvectors().col(0);
    res.value = es.eigenvalues()(0);
    std::vector<Complex> v(lb.q[0].size(), Complex{0.0, 0.0});
    for (std::size_t i = 0; i < lb.alpha.size(); ++i) {
      vec_axpy(Complex{y(static_cast<int>(i)), 0.0}, lb.q[i], v);
    }
    const double nrm = vec_norm(v);
    for (Complex& a : v) a /= nrm;
    apply_compiled(terms, v, hv);
    vec_axpy(Complex{-res.value, 0.0}, v, hv);
    for (const auto* d : deflate) vec_axpy(-vec_dot(*d, hv), *d, hv);
    res.residual = vec_norm(hv);
    res.vec = std::move(v);
    if (res.residual < tol * std::max(1.0, std::abs(res.value))) return res;
    v0 = res.vec;
  }
  throw std::runtime_error("lanczos failed to converge: residual " +
                           std::to_string(res.residual));
}

std::vector<Complex> random_vector(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Complex> v(dim);
  for (Complex& a : v) a = Complex{gauss(rng), gauss(rng)};
  return v;
}

// One Krylov exponential step: returns exp(-i h H) psi to relative accuracy
// tol, or false if max_krylov vectors are not enough.
bool krylov_exp_step(const std::vector<CompiledTerm>& terms, std::vector<Complex>& psi,
                     double h, double tol, int max_krylov) {
  const double beta0 = vec_norm(psi);
  if (beta0 < 1e-300) throw std::runtime_error("propagated state vanished");
  LanczosBasis lb;
  {
    std::vector<Complex> q0 = psi;
    for (Complex& a : q0) a /= beta0;
    lb.q.push_back(std::move(q0));
  }
  std::vector<Complex> w;
  Eigen::VectorXcd u;
  for (int j = 0; j < max_krylov; ++j) {
    apply_compiled(terms, lb.q[static_cast<std::size_t>(j)], w);
    const double a = vec_dot(lb.q[static_cast<std::size_t>(j)], w).real();
    lb.alpha.push_back(a);
    for (const auto& qi : lb.q) vec_axpy(-vec_dot(qi, w), qi, w);
    const double b = vec_norm(w);
    lb.beta_next = b;

    const auto es = tridiag_eig(lb);
    const int k = static_cast<int>(lb.alpha.size());
    Eigen::VectorXcd phase(k);
    for (int i = 0; i < k; ++i) {
      phase(i) = std::exp(Complex{0.0, -h * es.eigenvalues()(i)});
    }
    const Eigen::VectorXd e1_coeff = es.eigenvectors().row(0).transpose();
    u = es.eigenvectors() * phase.cwiseProduct(e1_coeff.cast<Complex>());
    const double err = b * std::abs(u(k - 1));  // residual estimate
    if (err < tol || b < 1e-13) {
      psi.assign(psi.size(), Complex{0.0, 0.0});
      for (int i = 0; i < k; ++i) {
        vec_axpy(beta0 * u(i), lb.q[static_cast<std::size_t>(i)], psi);
      }
      return true;
    }
    if (j + 1 < max_krylov) {
      lb.beta.push_back(b);
      std::vector<Complex> qn = w;
      for (Complex& x : qn) x /= b;
      lb.q.push_back(std::move(qn));
    }
  }
  return false;
}

void check_state(const DenseState& s) {
  if (s.n_sites <= 0 || s.n_sites > kMaxDenseSites) {
    throw std::invalid_argument("dense state must have 1..24 sites");
  }
  if (s.amplitudes.size() != (std::size_t{1} << s.n_sites)) {
    throw std::invalid_argument("dense state amplitude count != 2^n_sites");
  }
}

}  // namespace

DenseState make_basis_state(const SpinConfiguration& s) {
  const int n = static_cast<int>(s.size());
  if (n <= 0 || n > kMaxDenseSites) {
    throw std::invalid_argument("basis state must have 1..24 sites");
  }
  DenseState out;
  out.n_sites = n;
  out.amplitudes.assign(std::size_t{1} << n, Complex{0.0, 0.0});
  out.amplitudes[config_to_mask(s)] = Complex{1.0, 0.0};
  return out;
}

DenseState make_uniform_state(int n_sites) {
  if (n_sites <= 0 || n_sites > kMaxDenseSites) {
    throw std::invalid_argument("uniform state must have 1..24 sites");
  }
  DenseState out;
  out.n_sites = n_sites;
  const std::size_t dim = std::size_t{1} << n_sites;
  out.amplitudes.assign(dim, Complex{1.0 / std::sqrt(static_cast<double>(dim)), 0.0});
  return out;
}

double state_norm(const DenseState& s) { return vec_norm(s.amplitudes); }

void normalize(DenseState& s) {
  const double n = state_norm(s);
  if (n < 1e-300) throw std::runtime_error("cannot normalize zero state");
  for (Complex& a : s.amplitudes) a /= n;
}

Complex inner(const DenseState& a, const DenseState& b) {
  if (a.n_sites != b.n_sites) throw std::invalid_argument("inner: site count mismatch");
  return vec_dot(a.amplitudes, b.amplitudes);
}

void apply_hamiltonian(const PauliStringHamiltonian& H, const DenseState& in,
                       DenseState& out) {
  check_state(in);
  if (H.n_sites != in.n_sites) {
    throw std::invalid_argument("apply_hamiltonian: site count mismatch");
  }
  const auto terms = compile_terms(H);
  out.n_sites = in.n_sites;
  apply_compiled(terms, in.amplitudes, out.amplitudes);
}

DenseState apply_hamiltonian(const PauliStringHamiltonian& H, const DenseState& in) {
  DenseState out;
  apply_hamiltonian(H, in, out);
  return out;
}

Complex expectation(const PauliStringHamiltonian& op, const DenseState& state) {
  DenseState tmp = apply_hamiltonian(op, state);
  const double n2 = vec_dot(state.amplitudes, state.amplitudes).real();
  return vec_dot(state.amplitudes, tmp.amplitudes) / n2;
}

double expectation_z(const DenseState& state, int site) {
  check_state(state);
  if (site < 0 || site >= state.n_sites) throw std::invalid_argument("site out of range");
  const std::uint64_t bit = std::uint64_t{1} << site;
  double num = 0.0, den = 0.0;
  for (std::uint64_t b = 0; b < state.amplitudes.size(); ++b) {
    const double p = std::norm(state.amplitudes[b]);
    num += (b & bit) ? -p : p;
    den += p;
  }
  return num / den;
}

double fq_density(const DenseState& state) {
  check_state(state);
  double m1 = 0.0, m2 = 0.0, den = 0.0;
  for (std::uint64_t b = 0; b < state.amplitudes.size(); ++b) {
    const double p = std::norm(state.amplitudes[b]);
    const double m = static_cast<double>(state.n_sites) - 2.0 * std::popcount(b);
    m1 += p * m;
    m2 += p * m * m;
    den += p;
  }
  m1 /= den;
  m2 /= den;
  return (m2 - m1 * m1) / static_cast<double>(state.n_sites);
}

std::vector<double> correlation_profile_dense(const DenseState& state,
                                              const Lattice3D& lat, int max_R) {
  check_state(state);
  if (lat.n_sites() != state.n_sites) {
    throw std::invalid_argument("correlation profile: lattice size mismatch");
  }
  if (max_R < 0) throw std::invalid_argument("max_R must be >= 0");
  const auto [lx, ly, lz] = lat.dims();
  const int n = lat.n_sites();
  // pair_masks[R] lists bit pairs (i, i + R e_mu) for all sites i, axes mu.
  std::vector<std::vector<std::uint64_t>> pair_masks(static_cast<std::size_t>(max_R) + 1);
  for (int R = 0; R <= max_R; ++R) {
    for (int x = 0; x < lx; ++x) {
      for (int y = 0; y < ly; ++y) {
        for (int z = 0; z < lz; ++z) {
          const int i = lat.site_index(x, y, z);
          const int jx = lat.site_index((x + R) % lx, y, z);
          const int jy = lat.site_index(x, (y + R) % ly, z);
          const int jz = lat.site_index(x, y, (z + R) % lz);
          for (int j : {jx, jy, jz}) {
            pair_masks[static_cast<std::size_t>(R)].push_back(
                (std::uint64_t{1} << i) ^ (std::uint64_t{1} << j));
          }
        }
      }
    }
  }
  std::vector<double> prof(static_cast<std::size_t>(max_R) + 1, 0.0);
  double den = 0.0;
  for (std::uint64_t b = 0; b < state.amplitudes.size(); ++b) {
    const double p = std::norm(state.amplitudes[b]);
    if (p == 0.0) continue;
    den += p;
    for (int R = 0; R <= max_R; ++R) {
      double acc = 0.0;
      for (std::uint64_t m : pair_masks[static_cast<std::size_t>(R)]) {
        acc += (std::popcount(b & m) & 1) ? -1.0 : 1.0;
      }
      prof[static_cast<std::size_t>(R)] += p * acc;
    }
  }
  for (int R = 0; R <= max_R; ++R) {
    prof[static_cast<std::size_t>(R)] /=
        den * static_cast<double>(pair_masks[static_cast<std::size_t>(R)].size());
  }
  return prof;
}

double expectation_x(const DenseState& state, int site) {
  check_state(state);
  if (site < 0 || site >= state.n_sites) throw std::invalid_argument("site out of range");
  const std::uint64_t bit = std::uint64_t{1} << site;
  Complex num{0.0, 0.0};
  double den = 0.0;
  for (std::uint64_t b = 0; b < state.amplitudes.size(); ++b) {
    num += std::conj(state.amplitudes[b ^ bit]) * state.amplitudes[b];
    den += std::norm(state.amplitudes[b]);
  }
  return num.real() / den;
}

double expectation_y(const DenseState& state, int site) {
  check_state(state);
  if (site < 0 || site >= state.n_sites) throw std::invalid_argument("site out of range");
  const std::uint64_t bit = std::uint64_t{1} << site;
  Complex num{0.0, 0.0};
  double den = 0.0;
  for (std::uint64_t b = 0; b < state.amplitudes.size(); ++b) {
    const double s = (b & bit) ? -1.0 : 1.0;  // ket spin before the flip
    num += std::conj(state.amplitudes[b ^ bit]) * Complex{0.0, s} * state.amplitudes[b];
    den += std::norm(state.amplitudes[b]);
  }
  return num.real() / den;
}

GroundStateResult ground_state(const PauliStringHamiltonian& H, std::uint64_t seed,
                               double tol, int block_size, int max_restarts) {
  const auto terms = compile_terms(H);
  const std::size_t dim = std::size_t{1} << H.n_sites;
  const int m = std::min<int>(block_size, static_cast<int>(std::min<std::size_t>(dim, 1000)));

  EigResult e0 = lowest_eigenpair(terms, random_vector(dim, seed), tol, m, max_restarts, {});

  GroundStateResult out;
  out.energy = e0.value;
  out.residual = e0.residual;
  out.state.n_sites = H.n_sites;

  // Deflated second eigenvalue: a loose estimate suffices for the gap flag.
  out.degenerate = false;
  if (dim > 1) {
    const std::vector<const std::vector<Complex>*> deflate{&e0.vec};
    EigResult e1 = lowest_eigenpair(terms, random_vector(dim, seed + 1), 1e-6, m,
                                    max_restarts, deflate);
    out.degenerate = (e1.value - e0.value) < 1e-8 * std::max(1.0, std::abs(e0.value));
  }
  out.state.amplitudes = std::move(e0.vec);
  return out;
}

double max_coupling_scale(const PauliStringHamiltonian& H) {
  double s = 0.0;
  for (const PauliString& t : H.terms) s = std::max(s, std::abs(t.coefficient));
  return s;
}

DenseState propagate(const DenseState& initial,
                     const std::function<PauliStringHamiltonian(double)>& H_of_t,
                     double t0, double t1, double dt, double krylov_tol,
                     int max_krylov) {
  check_state(initial);
  if (!(dt > 0.0)) throw std::invalid_argument("propagate: dt must be positive");
  if (t1 < t0) throw std::invalid_argument("propagate: t1 must be >= t0");
  DenseState psi = initial;
  double t = t0;
  const double t_eps = 1e-12 * std::max(1.0, std::abs(t1 - t0));
  while (t < t1 - t_eps) {
    const double h_full = std::min(dt, t1 - t);
    // Split the step until the Krylov expansion converges.
    double h = h_full;
    double done = 0.0;
    int halvings = 0;
    while (done < h_full - 1e-15 * h_full) {
      h = std::min(h, h_full - done);
      const PauliStringHamiltonian H_mid = H_of_t(t + done + 0.5 * h);
      if (H_mid.n_sites != psi.n_sites) {
        throw std::invalid_argument("propagate: schedule changed the site count");
      }
      const double scale = max_coupling_scale(H_mid);
      if (dt * scale >= 0.1) {
        throw std::invalid_argument(
            "propagate: dt too large for the coupling scale (dt*max|coeff| >= 0.1)");
      }
      const auto terms = compile_terms(H_mid);
      if (krylov_exp_step(terms, psi.amplitudes, h, krylov_tol, max_krylov)) {
        done += h;
      } else {
        h *= 0.5;
        if (++halvings > 40) {
          throw std::runtime_error("propagate: Krylov step failed to converge");
        }
      }
    }
    normalize(psi);
    t += h_full;
  }
  return psi;
}

}  // namespace nqs
