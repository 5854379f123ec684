// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "nqs3d/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace nqs {

namespace {

constexpr int kKernel = 27;
constexpr double kInvSqrt2 = 0.70710678118654752440;

struct ConvSpec {
  int in_ch, out_ch;
  bool bias;
  int w_offset, b_offset;  // b_offset = -1 when bias-free
};

// Two convs per block; offsets into the flat parameter vector.
std::vector<ConvSpec> conv_layout(const ArchitectureSpec& arch) {
  const int w = 2 * arch.channels;
  std::vector<ConvSpec> specs;
  int off = 0;
  for (int block = 0; block < arch.depth; ++block) {
    const int in_a = (block == 0) ? 1 : w;
    const bool bias_a = (block != 0);
    ConvSpec a{in_a, w, bias_a, off, -1};
    off += kKernel * in_a * w;
    if (bias_a) {
      a.b_offset = off;
      off += w;
    }
    specs.push_back(a);
    ConvSpec b{w, w, true, off, -1};
    off += kKernel * w * w;
    b.b_offset = off;
    off += w;
    specs.push_back(b);
  }
  return specs;
}

// Periodic neighbor table: nbr[x*27 + k] = index of x offset by
// (dx,dy,dz) = (k/9-1, (k/3)%3-1, k%3-1).
struct ConvGeometry {
  std::array<int, 3> dims;
  int V;
  std::vector<std::int32_t> nbr;
};

const ConvGeometry& geometry_for(const std::array<int, 3>& dims) {
  static std::mutex mu;
  static std::map<std::array<int, 3>, std::unique_ptr<ConvGeometry>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(dims);
  if (it != cache.end()) return *it->second;
  auto geo = std::make_unique<ConvGeometry>();
  geo->dims = dims;
  const int lx = dims[0], ly = dims[1], lz = dims[2];
  geo->V = lx * ly * lz;
  geo->nbr.resize(static_cast<std::size_t>(geo->V) * kKernel);
  for (int x = 0; x < lx; ++x) {
    for (int y = 0; y < ly; ++y) {
      for (int z = 0; z < lz; ++z) {
        const int site = (x * ly + y) * lz + z;
        for (int k = 0; k < kKernel; ++k) {
          const int dx = k / 9 - 1, dy = (k / 3) % 3 - 1, dz = k % 3 - 1;
          const int xx = (x + dx + lx) % lx;
          const int yy = (y + dy + ly) % ly;
          const int zz = (z + dz + lz) % lz;
          geo->nbr[static_cast<std::size_t>(site) * kKernel + k] =
              (xx * ly + yy) * lz + zz;
        }
      }
    }
  }
  auto [ins, ok] = cache.emplace(dims, std::move(geo));
  (void)ok;
  return *ins->second;
}

double gelu(double z) { return 0.5 * z * (1.0 + std::erf(z * kInvSqrt2)); }

double gelu_prime(double z) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779;
  return 0.5 * (1.0 + std::erf(z * kInvSqrt2)) + z * inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

// out[o*V + x] = bias_o + sum_{i,k} W[(o*in+i)*27+k] * in[i*V + nbr(x,k)]
void conv_forward(const ConvGeometry& geo, const ConvSpec& spec, const double* theta,
                  const double* in, double* out) {
  const int V = geo.V;
  const double* W = theta + spec.w_offset;
  for (int o = 0; o < spec.out_ch; ++o) {
    const double b = spec.bias ? theta[spec.b_offset + o] : 0.0;
    double* out_o = out + static_cast<std::size_t>(o) * V;
    std::fill(out_o, out_o + V, b);
    for (int i = 0; i < spec.in_ch; ++i) {
      const double* w = W + (static_cast<std::size_t>(o) * spec.in_ch + i) * kKernel;
      const double* in_i = in + static_cast<std::size_t>(i) * V;
      for (int x = 0; x < V; ++x) {
        const std::int32_t* nb = geo.nbr.data() + static_cast<std::size_t>(x) * kKernel;
        double acc = 0.0;
        for (int k = 0; k < kKernel; ++k) acc += w[k] * in_i[nb[k]];
        out_o[x] += acc;
      }
    }
  }
}

// Accumulates weight/bias gradients and the input adjoint. The transposed
// kernel offset of k is 26-k.
void conv_backward(const ConvGeometry& geo, const ConvSpec& spec, const double* theta,
                   const double* in, const Complex* adj_out, Complex* grad,
                   Complex* adj_in) {
  const int V = geo.V;
  const double* W = theta + spec.w_offset;
  Complex* gW = grad + spec.w_offset;
  for (int o = 0; o < spec.out_ch; ++o) {
    const Complex* a_o = adj_out + static_cast<std::size_t>(o) * V;
    for (int i = 0; i < spec.in_ch; ++i) {
      const double* in_i = in + static_cast<std::size_t>(i) * V;
      Complex* g = gW + (static_cast<std::size_t>(o) * spec.in_ch + i) * kKernel;
      for (int x = 0; x < V; ++x) {
        const std::int32_t* nb = geo.nbr.data() + static_cast<std::size_t>(x) * kKernel;
        const Complex a = a_o[x];
        for (int k = 0; k < kKernel; ++k) g[k] += a * in_i[nb[k]];
      }
    }
    if (spec.bias) {
      Complex acc{0.0, 0.0};
      for (int x = 0; x < V; ++x) acc += a_o[x];
      grad[spec.b_offset + o] += acc;
    }
  }
  if (adj_in != nullptr) {
    for (int i = 0; i < spec.in_ch; ++i) {
      Complex* ai = adj_in + static_cast<std::size_t>(i) * V;
      std::fill(ai, ai + V, Complex{0.0, 0.0});
      for (int o = 0; o < spec.out_ch; ++o) {
        const double* w = W + (static_cast<std::size_t>(o) * spec.in_ch + i) * kKernel;
        const Complex* a_o = adj_out + static_cast<std::size_t>(o) * V;
        for (int y = 0; y < V; ++y) {
          const std::int32_t* nb = geo.nbr.data() + static_cast<std::size_t>(y) * kKernel;
          Complex acc{0.0, 0.0};
          for (int k = 0; k < kKernel; ++k) acc += w[k] * a_o[nb[kKernel - 1 - k]];
          ai[y] += acc;
        }
      }
    }
  }
}

struct ForwardTrace {
  // Per conv layer: pre-activation field (out_ch * V).
  std::vector<std::vector<double>> z;
  // Per block: output field (2c * V); block_out[depth-1] feeds the head.
  std::vector<std::vector<double>> block_out;
  std::vector<double> input;  // spin field, 1 * V
  Complex zsum;               // shifted head sum
  double shift;               // max real part of the complex fields
  Complex log_psi;
};

void forward_pass(const NetworkState& net, const SpinConfiguration& s,
                  const ConvGeometry& geo, const std::vector<ConvSpec>& specs,
                  ForwardTrace& tr) {
  const int V = geo.V;
  const int w = 2 * net.arch.channels;
  const double* theta = net.theta.data();

  tr.input.resize(V);
  for (int x = 0; x < V; ++x) tr.input[x] = static_cast<double>(s[x]);

  tr.z.assign(specs.size(), {});
  tr.block_out.assign(net.arch.depth, {});
  std::vector<double> act(static_cast<std::size_t>(w) * V);

  const double* block_in = tr.input.data();
  for (int block = 0; block < net.arch.depth; ++block) {
    const ConvSpec& ca = specs[2 * block];
    const ConvSpec& cb = specs[2 * block + 1];
    auto& za = tr.z[2 * block];
    auto& zb = tr.z[2 * block + 1];
    za.resize(static_cast<std::size_t>(w) * V);
    zb.resize(static_cast<std::size_t>(w) * V);

    conv_forward(geo, ca, theta, block_in, za.data());
    for (std::size_t j = 0; j < za.size(); ++j) act[j] = gelu(za[j]);
    conv_forward(geo, cb, theta, act.data(), zb.data());

    auto& out = tr.block_out[block];
    out.resize(static_cast<std::size_t>(w) * V);
    const double rescale = 1.0 / std::sqrt(static_cast<double>(block + 1));
    if (block == 0) {
      // Channel-lifting block: zero skip path.
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = gelu(zb[j]) * rescale;
    } else {
      const double* prev = tr.block_out[block - 1].data();
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = prev[j] + gelu(zb[j]) * rescale;
    }
    block_in = out.data();
  }

  // Head: c complex fields from channel pairs, shifted log-sum-exp with
  // canonically ordered accumulation.
  const int c = net.arch.channels;
  const double* field = tr.block_out.back().data();
  double m = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < c; ++k) {
    const double* re = field + static_cast<std::size_t>(2 * k) * V;
    for (int x = 0; x < V; ++x) m = std::max(m, re[x]);
  }
  std::vector<Complex> summands;
  summands.reserve(static_cast<std::size_t>(c) * V);
  for (int k = 0; k < c; ++k) {
    const double* re = field + static_cast<std::size_t>(2 * k) * V;
    const double* im = field + static_cast<std::size_t>(2 * k + 1) * V;
    for (int x = 0; x < V; ++x) {
      const double r = std::exp(re[x] - m);
      summands.emplace_back(r * std::cos(im[x]), r * std::sin(im[x]));
    }
  }
  std::sort(summands.begin(), summands.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  Complex zsum{0.0, 0.0};
  for (const auto& v : summands) zsum += v;
  tr.zsum = zsum;
  tr.shift = m;
  tr.log_psi = m + std::log(zsum);
  if (!std::isfinite(tr.log_psi.real()) || !std::isfinite(tr.log_psi.imag())) {
    throw std::runtime_error("log_psi: non-finite value (head sum cancelled to zero?)");
  }
}

std::vector<Complex> backward_pass(const NetworkState& net, const ConvGeometry& geo,
                                   const std::vector<ConvSpec>& specs,
                                   const ForwardTrace& tr) {
  const int V = geo.V;
  const int w = 2 * net.arch.channels;
  const int c = net.arch.channels;
  const double* theta = net.theta.data();
  std::vector<Complex> grad(net.theta.size(), Complex{0.0, 0.0});

  // Head adjoint: d lnPsi / d field.
  std::vector<Complex> adj(static_cast<std::size_t>(w) * V);
  const double* field = tr.block_out.back().data();
  for (int k = 0; k < c; ++k) {
    const double* re = field + static_cast<std::size_t>(2 * k) * V;
    const double* im = field + static_cast<std::size_t>(2 * k + 1) * V;
    for (int x = 0; x < V; ++x) {
      const double r = std::exp(re[x] - tr.shift);
      const Complex omega = Complex(r * std::cos(im[x]), r * std::sin(im[x])) / tr.zsum;
      adj[static_cast<std::size_t>(2 * k) * V + x] = omega;
      adj[static_cast<std::size_t>(2 * k + 1) * V + x] = omega * Complex(0.0, 1.0);
    }
  }

  std::vector<Complex> adj_z(static_cast<std::size_t>(w) * V);
  std::vector<Complex> adj_mid(static_cast<std::size_t>(w) * V);
  std::vector<double> act(static_cast<std::size_t>(w) * V);
  std::vector<Complex> adj_prev;

  for (int block = net.arch.depth - 1; block >= 0; --block) {
    const ConvSpec& ca = specs[2 * block];
    const ConvSpec& cb = specs[2 * block + 1];
    const auto& za = tr.z[2 * block];
    const auto& zb = tr.z[2 * block + 1];
    const double rescale = 1.0 / std::sqrt(static_cast<double>(block + 1));

    for (std::size_t j = 0; j < zb.size(); ++j) {
      adj_z[j] = adj[j] * (rescale * gelu_prime(zb[j]));
    }
    for (std::size_t j = 0; j < za.size(); ++j) act[j] = gelu(za[j]);
    conv_backward(geo, cb, theta, act.data(), adj_z.data(), grad.data(), adj_mid.data());
    for (std::size_t j = 0; j < za.size(); ++j) {
      adj_mid[j] *= gelu_prime(za[j]);
    }
    if (block == 0) {
      conv_backward(geo, ca, theta, tr.input.data(), adj_mid.data(), grad.data(), nullptr);
    } else {
      adj_prev.resize(static_cast<std::size_t>(w) * V);
      conv_backward(geo, ca, theta, tr.block_out[block - 1].data(), adj_mid.data(),
                    grad.data(), adj_prev.data());
      // Skip path: the block input adjoint adds to the conv path's.
      for (std::size_t j = 0; j < adj_prev.size(); ++j) adj[j] += adj_prev[j];
    }
  }
  return grad;
}

}  // namespace

int parameter_count(const ArchitectureSpec& arch) {
  if (arch.depth < 1 || arch.channels < 1) {
    throw std::invalid_argument("parameter_count: depth and channels must be >= 1");
  }
  const int w = 2 * arch.channels;
  return kKernel * w + (2 * arch.depth - 1) * (kKernel * w * w + w);
}

NetworkState make_network(const ArchitectureSpec& arch, const std::array<int, 3>& dims) {
  NetworkState net;
  net.arch = arch;
  net.dims = dims;
  net.theta.assign(parameter_count(arch), 0.0);
  return net;
}

NetworkState init_parameters(const ArchitectureSpec& arch, const std::array<int, 3>& dims,
                             std::uint64_t seed, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("init_parameters: scale must be > 0");
  NetworkState net = make_network(arch, dims);
  std::mt19937_64 rng(seed);
  for (const auto& spec : conv_layout(arch)) {
    const double std_dev = scale / (spec.in_ch * kKernel);
    std::normal_distribution<double> dist(0.0, std_dev);
    const int nw = kKernel * spec.in_ch * spec.out_ch;
    for (int j = 0; j < nw; ++j) net.theta[spec.w_offset + j] = dist(rng);
    if (spec.bias) {
      for (int o = 0; o < spec.out_ch; ++o) net.theta[spec.b_offset + o] = dist(rng);
    }
  }
  return net;
}

Complex log_psi(const NetworkState& net, const SpinConfiguration& s) {
  const auto& geo = geometry_for(net.dims);
  if (static_cast<int>(s.size()) != geo.V) {
    throw std::invalid_argument("log_psi: configuration does not match lattice dims");
  }
  if (static_cast<int>(net.theta.size()) != parameter_count(net.arch)) {
    throw std::invalid_argument("log_psi: theta length does not match architecture");
  }
  const auto specs = conv_layout(net.arch);
  ForwardTrace tr;
  forward_pass(net, s, geo, specs, tr);
  return tr.log_psi;
}

ForwardBackwardResult log_psi_and_derivatives(const NetworkState& net,
                                              const SpinConfiguration& s) {
  const auto& geo = geometry_for(net.dims);
  if (static_cast<int>(s.size()) != geo.V) {
    throw std::invalid_argument("log_derivatives: configuration does not match dims");
  }
  const auto specs = conv_layout(net.arch);
  ForwardTrace tr;
  forward_pass(net, s, geo, specs, tr);
  ForwardBackwardResult res;
  res.log_psi = tr.log_psi;
  res.o = backward_pass(net, geo, specs, tr);
  for (const auto& v : res.o) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw std::runtime_error("log_derivatives: non-finite derivative");
    }
  }
  return res;
}

std::vector<Complex> log_derivatives(const NetworkState& net, const SpinConfiguration& s) {
  return log_psi_and_derivatives(net, s).o;
}

Complex local_energy(const LocalEnergyKernel& kernel, const NetworkState& net,
                     const SpinConfiguration& s, Complex log_psi_s) {
  return kernel.eval(s, [&](const SpinConfiguration& flipped, const std::vector<int>&) {
    return std::exp(log_psi(net, flipped) - log_psi_s);
  });
}

void save_checkpoint(const NetworkState& net, std::uint64_t seed, const std::string& path) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["arch"] = {{"depth", net.arch.depth}, {"channels", net.arch.channels}};
  j["dims"] = net.dims;
  j["seed"] = seed;
  j["theta"] = net.theta;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.at("schema_version").get<int>() != 1) {
    throw std::runtime_error("load_checkpoint: unknown schema version");
  }
  Checkpoint ck;
  ck.net.arch.depth = j.at("arch").at("depth").get<int>();
  ck.net.arch.channels = j.at("arch").at("channels").get<int>();
  const auto dims = j.at("dims").get<std::vector<int>>();
  if (dims.size() != 3) throw std::runtime_error("load_checkpoint: bad dims");
  ck.net.dims = {dims[0], dims[1], dims[2]};
  ck.seed = j.at("seed").get<std::uint64_t>();
  ck.net.theta = j.at("theta").get<std::vector<double>>();
  if (static_cast<int>(ck.net.theta.size()) != parameter_count(ck.net.arch)) {
    throw std::runtime_error("load_checkpoint: theta length mismatch");
  }
  return ck;
}

}  // namespace nqs
