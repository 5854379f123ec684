// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "nqs3d/runio.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "nqs3d/ed.hpp"
#include "nqs3d/kz.hpp"
#include "nqs3d/observables.hpp"
#include "nqs3d/tdvp.hpp"

namespace nqs {

namespace fs = std::filesystem;

namespace {

void require_field(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void write_failure_marker(const std::string& dir, const std::string& msg) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream f(fs::path(dir) / "FAILED");
  if (f) f << msg << "\n";
}

int guarded(const std::string& out_dir, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    write_failure_marker(out_dir, e.what());
    return 1;
  }
}

void check_schema_version(const nlohmann::json& j, const std::string& what) {
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer() ||
      j["schema_version"].get<int>() != kSchemaVersion) {
    throw std::runtime_error(what + ": unsupported or missing schema_version");
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  f >> j;
  return j;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << j.dump(2) << "\n";
}

RampSpec ramp_spec_of(const ProtocolSpec& p) {
  RampSpec spec;
  spec.tau_q = p.tau_q;
  spec.J_final = p.J_final;
  spec.smooth = (p.kind == "smooth_ramp");
  spec.allow_post_critical = p.allow_post_critical;
  return spec;
}

std::string csv_join(const std::vector<double>& vals) {
  std::string out;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (i) out += ',';
    out += format_g17(vals[i]);
  }
  return out;
}

constexpr const char* kObservablesHeader =
    "t,J,h,energy,energy_err,sx,sx_err,sy,sy_err,sz,sz_err,sz_lab,fq,fq_err,acceptance";
constexpr const char* kCorrelationHeader = "t,R,C,C_err";

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv_checked(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(f, line) || line != "# schema_version=1") {
    throw std::runtime_error(path + ": unsupported or missing schema_version");
  }
  CsvTable table;
  if (!std::getline(f, line)) throw std::runtime_error(path + ": missing header row");
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) table.header.push_back(col);
  }
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != table.header.size()) {
      throw std::runtime_error(path + ": ragged row");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  return nlohmann::json{
      {"schema_version", kSchemaVersion},
      {"dims", cfg.dims},
      {"arch", {{"depth", cfg.arch.depth}, {"channels", cfg.arch.channels}}},
      {"seed", cfg.seed},
      {"init_scale", cfg.init_scale},
      {"sampler_kind", cfg.sampler_kind},
      {"sampler",
       {{"n_samples", cfg.sampler.n_samples},
        {"n_chains", cfg.sampler.n_chains},
        {"burn_in_sweeps", cfg.sampler.burn_in_sweeps},
        {"thin_sweeps", cfg.sampler.thin_sweeps},
        {"canonicalize", cfg.sampler.canonicalize}}},
      {"compress_orbits", cfg.compress_orbits},
      {"integrator",
       {{"dt_init", cfg.integrator.dt_init},
        {"tol", cfg.integrator.tol},
        {"dt_min", cfg.integrator.dt_min},
        {"lambda_cut", cfg.integrator.lambda_cut},
        {"epsilon", cfg.integrator.epsilon},
        {"checkpoint_every", cfg.integrator.checkpoint_every},
        {"ed_dt", cfg.integrator.ed_dt}}},
      {"protocol",
       {{"kind", cfg.protocol.kind},
        {"J", cfg.protocol.J},
        {"h", cfg.protocol.h},
        {"tau_q", cfg.protocol.tau_q},
        {"J_final", cfg.protocol.J_final},
        {"allow_post_critical", cfg.protocol.allow_post_critical}}},
      {"ground",
       {{"max_iters", cfg.ground.max_iters},
        {"dt", cfg.ground.dt},
        {"energy_tol", cfg.ground.energy_tol}}},
      {"frame", cfg.frame},
      {"measurement_times", cfg.measurement_times},
      {"max_correlation_R", cfg.max_correlation_R},
      {"output_dir", cfg.output_dir}};
}

RunConfig run_config_from_json(const nlohmann::json& j_in) {
  const nlohmann::json& j = j_in.contains("config") ? j_in.at("config") : j_in;
  check_schema_version(j, "run config");
  RunConfig cfg;
  if (j.contains("dims")) {
    const auto d = j.at("dims").get<std::vector<int>>();
    if (d.size() != 3) throw std::invalid_argument("dims: expected 3 axis lengths");
    cfg.dims = {d[0], d[1], d[2]};
  }
  if (j.contains("arch")) {
    cfg.arch.depth = j["arch"].value("depth", cfg.arch.depth);
    cfg.arch.channels = j["arch"].value("channels", cfg.arch.channels);
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.init_scale = j.value("init_scale", cfg.init_scale);
  cfg.sampler_kind = j.value("sampler_kind", cfg.sampler_kind);
  if (j.contains("sampler")) {
    const auto& s = j["sampler"];
    cfg.sampler.n_samples = s.value("n_samples", cfg.sampler.n_samples);
    cfg.sampler.n_chains = s.value("n_chains", cfg.sampler.n_chains);
    cfg.sampler.burn_in_sweeps = s.value("burn_in_sweeps", cfg.sampler.burn_in_sweeps);
    cfg.sampler.thin_sweeps = s.value("thin_sweeps", cfg.sampler.thin_sweeps);
    cfg.sampler.canonicalize = s.value("canonicalize", cfg.sampler.canonicalize);
  }
  cfg.compress_orbits = j.value("compress_orbits", cfg.compress_orbits);
  if (j.contains("integrator")) {
    const auto& s = j["integrator"];
    cfg.integrator.dt_init = s.value("dt_init", cfg.integrator.dt_init);
    cfg.integrator.tol = s.value("tol", cfg.integrator.tol);
    cfg.integrator.dt_min = s.value("dt_min", cfg.integrator.dt_min);
    cfg.integrator.lambda_cut = s.value("lambda_cut", cfg.integrator.lambda_cut);
    cfg.integrator.epsilon = s.value("epsilon", cfg.integrator.epsilon);
    cfg.integrator.checkpoint_every =
        s.value("checkpoint_every", cfg.integrator.checkpoint_every);
    cfg.integrator.ed_dt = s.value("ed_dt", cfg.integrator.ed_dt);
  }
  if (j.contains("protocol")) {
    const auto& s = j["protocol"];
    cfg.protocol.kind = s.value("kind", cfg.protocol.kind);
    cfg.protocol.J = s.value("J", cfg.protocol.J);
    cfg.protocol.h = s.value("h", cfg.protocol.h);
    cfg.protocol.tau_q = s.value("tau_q", cfg.protocol.tau_q);
    cfg.protocol.J_final = s.value("J_final", cfg.protocol.J_final);
    cfg.protocol.allow_post_critical =
        s.value("allow_post_critical", cfg.protocol.allow_post_critical);
  }
  if (j.contains("ground")) {
    const auto& s = j["ground"];
    cfg.ground.max_iters = s.value("max_iters", cfg.ground.max_iters);
    cfg.ground.dt = s.value("dt", cfg.ground.dt);
    cfg.ground.energy_tol = s.value("energy_tol", cfg.ground.energy_tol);
  }
  cfg.frame = j.value("frame", cfg.frame);
  if (j.contains("measurement_times")) {
    cfg.measurement_times = j.at("measurement_times").get<std::vector<double>>();
  }
  cfg.max_correlation_R = j.value("max_correlation_R", cfg.max_correlation_R);
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return run_config_from_json(read_json_file(path));
}

void validate_run_config(const RunConfig& cfg) {
  for (int d : cfg.dims) {
    require_field(d >= 2, "dims: every axis length must be >= 2, got (" +
                              std::to_string(cfg.dims[0]) + "," + std::to_string(cfg.dims[1]) +
                              "," + std::to_string(cfg.dims[2]) + ")");
  }
  require_field(cfg.arch.depth >= 1, "arch.depth: must be >= 1");
  require_field(cfg.arch.channels >= 1, "arch.channels: must be >= 1");
  require_field(std::isfinite(cfg.init_scale) && cfg.init_scale >= 0.0,
                "init_scale: must be finite and >= 0");
  require_field(cfg.sampler_kind == "exact" || cfg.sampler_kind == "metropolis",
                "sampler_kind: must be 'exact' or 'metropolis'");
  const long n_sites = static_cast<long>(cfg.dims[0]) * cfg.dims[1] * cfg.dims[2];
  if (cfg.sampler_kind == "exact") {
    require_field(n_sites <= 20, "dims: exact enumeration limited to n_sites <= 20");
  } else {
    require_field(cfg.sampler.n_samples > 0 && cfg.sampler.n_chains > 0,
                  "sampler.n_samples: n_samples and n_chains must be positive");
    require_field(cfg.sampler.n_samples % cfg.sampler.n_chains == 0,
                  "sampler.n_samples: must be divisible by sampler.n_chains");
    require_field(cfg.sampler.burn_in_sweeps >= 0, "sampler.burn_in_sweeps: must be >= 0");
    require_field(cfg.sampler.thin_sweeps >= 1, "sampler.thin_sweeps: must be >= 1");
  }
  require_field(cfg.integrator.dt_init > 0.0, "integrator.dt_init: must be > 0");
  require_field(cfg.integrator.tol > 0.0, "integrator.tol: must be > 0");
  require_field(cfg.integrator.dt_min > 0.0, "integrator.dt_min: must be > 0");
  require_field(cfg.integrator.lambda_cut >= 0.0, "integrator.lambda_cut: must be >= 0");
  require_field(cfg.integrator.epsilon >= 0.0, "integrator.epsilon: must be >= 0");
  require_field(cfg.integrator.checkpoint_every >= 0,
                "integrator.checkpoint_every: must be >= 0");
  require_field(cfg.integrator.ed_dt > 0.0, "integrator.ed_dt: must be > 0");
  const bool sudden = cfg.protocol.kind == "sudden_quench";
  const bool ramp =
      cfg.protocol.kind == "smooth_ramp" || cfg.protocol.kind == "linear_ramp";
  require_field(sudden || ramp,
                "protocol.kind: must be sudden_quench, smooth_ramp, or linear_ramp");
  if (sudden) {
    require_field(std::isfinite(cfg.protocol.J) && std::isfinite(cfg.protocol.h),
                  "protocol.J: sudden-quench couplings must be finite");
  } else {
    require_field(cfg.protocol.tau_q > 0.0, "protocol.tau_q: must be > 0");
    require_field(cfg.protocol.J_final > 0.0, "protocol.J_final: must be > 0");
  }
  require_field(cfg.frame == "lab" || cfg.frame == "rotated_interaction",
                "frame: must be 'lab' or 'rotated_interaction'");
  if (cfg.frame == "rotated_interaction") {
    require_field(sudden, "frame: rotated_interaction requires a sudden_quench protocol");
  }
  require_field(!cfg.measurement_times.empty(),
                "measurement_times: at least one measurement time required");
  const double t0 = protocol_start_time(cfg.protocol);
  double prev = -std::numeric_limits<double>::infinity();
  for (double t : cfg.measurement_times) {
    require_field(std::isfinite(t), "measurement_times: entries must be finite");
    require_field(t > prev, "measurement_times: must be strictly increasing");
    prev = t;
  }
  const double slack = 1e-9 * std::max(1.0, std::abs(t0));
  require_field(cfg.measurement_times.front() >= t0 - slack,
                "measurement_times: first entry precedes the protocol start time");
  if (ramp) {
    const double t_end = ramp_end(ramp_spec_of(cfg.protocol));
    require_field(cfg.measurement_times.back() <=
                      t_end + 1e-9 * std::max(1.0, std::abs(t_end)),
                  "measurement_times: last entry exceeds the ramp window");
  }
  require_field(!cfg.output_dir.empty(), "output_dir: must be nonempty");
}

Couplings protocol_couplings(const ProtocolSpec& p, double t) {
  if (p.kind == "sudden_quench") return Couplings{p.J, p.h};
  return couplings_at(ramp_spec_of(p), t);
}

double protocol_start_time(const ProtocolSpec& p) {
  if (p.kind == "sudden_quench") return 0.0;
  return ramp_start(ramp_spec_of(p));
}

PauliStringHamiltonian simulation_hamiltonian(const RunConfig& cfg, const Lattice3D& lat,
                                              double t) {
  const Couplings c = protocol_couplings(cfg.protocol, t);
  if (cfg.frame == "lab") return build_tfim(lat, c.J, c.h);
  // Rotated interaction frame: only the ZZ part enters; the field is folded
  // into the time dependence.
  PauliStringHamiltonian V;
  V.n_sites = lat.n_sites();
  for (const auto& [i, j] : lat.bonds()) {
    V.terms.push_back(PauliString{{{i, PauliOp::Z}, {j, PauliOp::Z}}, Complex{-c.J, 0.0}});
  }
  return rotate_basis_y(interaction_picture(c.h, V, t));
}

double lab_sigma_z(double h, double t, double x_mean, double y_mean) {
  return std::cos(2.0 * h * t) * x_mean - std::sin(2.0 * h * t) * y_mean;
}

int run_dynamics(const RunConfig& cfg, const std::string& resume_checkpoint) {
  return guarded(cfg.output_dir, [&] {
    validate_run_config(cfg);
    fs::create_directories(cfg.output_dir);
    const auto wall0 = std::chrono::steady_clock::now();
    const Lattice3D lat(cfg.dims[0], cfg.dims[1], cfg.dims[2]);
    const fs::path out(cfg.output_dir);

    NetworkState net = init_parameters(cfg.arch, cfg.dims, cfg.seed, cfg.init_scale);
    double t = protocol_start_time(cfg.protocol);
    double dt = cfg.integrator.dt_init;
    long accepted_total = 0;
    long measured_total = 0;  // rows already written to observables.csv
    const bool resuming = !resume_checkpoint.empty();
    if (resuming) {
      const nlohmann::json ck = read_json_file(resume_checkpoint);
      check_schema_version(ck, "run checkpoint");
      t = ck.at("t").get<double>();
      dt = ck.at("dt").get<double>();
      accepted_total = ck.at("accepted_steps").get<long>();
      measured_total = ck.at("measured_times").get<long>();
      const fs::path netfile =
          fs::path(resume_checkpoint).parent_path() / ck.at("network_file").get<std::string>();
      const Checkpoint c = load_checkpoint(netfile.string());
      if (c.net.arch.depth != cfg.arch.depth || c.net.arch.channels != cfg.arch.channels ||
          c.net.dims != cfg.dims) {
        throw std::invalid_argument("resume: checkpoint architecture/dims differ from config");
      }
      net = c.net;
    }

    std::optional<MetropolisSampler> sampler;
    if (cfg.sampler_kind == "metropolis") {
      SamplerConfig scfg = cfg.sampler;
      scfg.seed = cfg.seed;
      sampler.emplace(lat, scfg);
    }
    auto provider = [&](const NetworkState& n) -> Ensemble {
      if (sampler) return sampler->sample(n);
      Ensemble e = exact_enumeration(n, lat);
      return cfg.compress_orbits ? compress_to_orbits(e, n, lat) : e;
    };

    TdvpConfig tdvp_cfg;
    tdvp_cfg.lambda_cut = cfg.integrator.lambda_cut;
    tdvp_cfg.epsilon = cfg.integrator.epsilon;

    auto as_net = [&](const Eigen::VectorXd& th) {
      NetworkState n = net;
      n.theta.assign(th.data(), th.data() + th.size());
      return n;
    };

    struct Diag {
      Complex energy{0.0, 0.0};
      double energy_err = 0.0;
      int retained = 0;
      double lambda_max = 0.0;
      double acceptance = 1.0;
    } diag;
    long n_rhs = 0;
    auto rhs = [&](const Eigen::VectorXd& th, double tt) -> Eigen::VectorXd {
      ++n_rhs;
      const NetworkState cur = as_net(th);
      const LocalEnergyKernel kernel(simulation_hamiltonian(cfg, lat, tt));
      const Ensemble e = provider(cur);
      const TdvpEstimates est = estimate_sf(cur, kernel, e, lat);
      TdvpSolveInfo info;
      Eigen::VectorXd theta_dot = solve_tdvp(est, /*imaginary_time=*/false, tdvp_cfg, &info);
      diag = Diag{est.energy_mean, est.energy_error, info.n_retained, info.lambda_max,
                  e.acceptance_rate};
      return theta_dot;
    };

    const auto mode = resuming ? std::ios::app : std::ios::trunc;
    std::ofstream traj(out / "trajectory.jsonl", mode);
    std::ofstream obs(out / "observables.csv", mode);
    if (!traj || !obs) throw std::runtime_error("cannot open output files");
    std::ofstream corr;
    if (cfg.max_correlation_R >= 0) {
      corr.open(out / "correlation.csv", mode);
      if (!corr) throw std::runtime_error("cannot open correlation.csv");
    }
    if (!resuming) {
      traj << nlohmann::json{{"kind", "trajectory_header"},
                             {"schema_version", kSchemaVersion},
                             {"code_version", kCodeVersion}}
                  .dump()
           << "\n";
      obs << "# schema_version=1\n" << kObservablesHeader << "\n";
      if (corr.is_open()) corr << "# schema_version=1\n" << kCorrelationHeader << "\n";
    }

    auto write_checkpoint = [&](const Eigen::VectorXd& th, double tt, double dtt) {
      save_checkpoint(as_net(th), cfg.seed, (out / "run_checkpoint_network.json").string());
      write_json_file((out / "run_checkpoint.json").string(),
                      nlohmann::json{{"schema_version", kSchemaVersion},
                                     {"kind", "run_checkpoint"},
                                     {"t", tt},
                                     {"dt", dtt},
                                     {"accepted_steps", accepted_total},
                                     {"measured_times", measured_total},
                                     {"network_file", "run_checkpoint_network.json"}});
    };

    Eigen::VectorXd theta =
        Eigen::Map<const Eigen::VectorXd>(net.theta.data(),
                                          static_cast<Eigen::Index>(net.theta.size()));
    auto on_step = [&](const Eigen::VectorXd& th, double tt, double dt_used) {
      ++accepted_total;
      traj << nlohmann::json{{"t", tt},
                             {"dt", dt_used},
                             {"energy_re", diag.energy.real()},
                             {"energy_im", diag.energy.imag()},
                             {"theta_norm", th.norm()},
                             {"retained", diag.retained},
                             {"lambda_max", diag.lambda_max},
                             {"acceptance", diag.acceptance}}
                  .dump()
           << "\n";
      if (cfg.integrator.checkpoint_every > 0 &&
          accepted_total % cfg.integrator.checkpoint_every == 0) {
        write_checkpoint(th, tt, dt);
      }
    };

    auto measure = [&](const Eigen::VectorXd& th, double tt) {
      const NetworkState cur = as_net(th);
      const Ensemble e = provider(cur);
      const LocalEnergyKernel kernel(simulation_hamiltonian(cfg, lat, tt));
      const std::vector<Complex> lv = local_values(cur, kernel, e, lat);
      std::vector<double> re(lv.size());
      for (std::size_t r = 0; r < lv.size(); ++r) re[r] = lv[r].real();
      const WeightedStats en = ensemble_stats(e, re);
      const WeightedStats sx = magnetization(cur, e, lat, PauliOp::X);
      const WeightedStats sy = magnetization(cur, e, lat, PauliOp::Y);
      const WeightedStats sz = magnetization(cur, e, lat, PauliOp::Z);
      const WeightedStats fq = qfi_density(e, lat);
      const Couplings c = protocol_couplings(cfg.protocol, tt);
      const double sz_lab = (cfg.frame == "rotated_interaction")
                                ? lab_sigma_z(cfg.protocol.h, tt, sx.mean, sy.mean)
                                : sz.mean;
      obs << csv_join({tt, c.J, c.h, en.mean, en.error, sx.mean, sx.error, sy.mean,
                       sy.error, sz.mean, sz.error, sz_lab, fq.mean, fq.error,
                       e.acceptance_rate})
          << "\n";
      if (corr.is_open()) {
        const auto prof = correlation_profile(e, lat, cfg.max_correlation_R);
        for (std::size_t R = 0; R < prof.size(); ++R) {
          corr << csv_join({tt, static_cast<double>(R), prof[R].mean, prof[R].error})
               << "\n";
        }
      }
    };

    for (std::size_t mi = 0; mi < cfg.measurement_times.size(); ++mi) {
      if (static_cast<long>(mi) < measured_total) continue;  // written before resume
      const double target = cfg.measurement_times[mi];
      const double eps = 1e-9 * std::max(1.0, std::abs(target));
      if (target > t + eps) {
        integrate_heun(theta, t, target, dt, cfg.integrator.tol, cfg.integrator.dt_min,
                       rhs, on_step);
      }
      measure(theta, t);
      ++measured_total;
      obs.flush();
      traj.flush();
      if (corr.is_open()) corr.flush();
    }
    write_checkpoint(theta, t, dt);

    const auto wall1 = std::chrono::steady_clock::now();
    write_json_file(
        (out / "manifest.json").string(),
        nlohmann::json{
            {"schema_version", kSchemaVersion},
            {"kind", "run_manifest"},
            {"code_version", kCodeVersion},
            {"config", run_config_to_json(cfg)},
            {"timings",
             {{"wall_ms",
               std::chrono::duration_cast<std::chrono::milliseconds>(wall1 - wall0)
                   .count()}}},
            {"counters", {{"rhs_evals", n_rhs}, {"accepted_steps", accepted_total}}}});
  });
}

int run_ed_reference(const RunConfig& cfg) {
  return guarded(cfg.output_dir, [&] {
    validate_run_config(cfg);
    fs::create_directories(cfg.output_dir);
    const auto wall0 = std::chrono::steady_clock::now();
    const Lattice3D lat(cfg.dims[0], cfg.dims[1], cfg.dims[2]);
    const int n = lat.n_sites();
    const fs::path out(cfg.output_dir);

    // The dense reference always evolves in the lab frame; the rotated
    // interaction frame of the variational run maps back to plain lab
    // sigma^z here.
    const bool rotated = cfg.frame == "rotated_interaction";
    DenseState psi = rotated
                         ? make_basis_state(SpinConfiguration(static_cast<std::size_t>(n), 1))
                         : make_uniform_state(n);
    auto H_of_t = [&](double tt) {
      const Couplings c = protocol_couplings(cfg.protocol, tt);
      return build_tfim(lat, c.J, c.h);
    };

    std::ofstream obs(out / "ed_observables.csv");
    if (!obs) throw std::runtime_error("cannot open ed_observables.csv");
    obs << "# schema_version=1\n" << kObservablesHeader << "\n";
    std::ofstream corr;
    if (cfg.max_correlation_R >= 0) {
      corr.open(out / "ed_correlation.csv");
      if (!corr) throw std::runtime_error("cannot open ed_correlation.csv");
      corr << "# schema_version=1\n" << kCorrelationHeader << "\n";
    }

    double t = protocol_start_time(cfg.protocol);
    for (double target : cfg.measurement_times) {
      const double eps = 1e-9 * std::max(1.0, std::abs(target));
      if (target > t + eps) {
        psi = propagate(psi, H_of_t, t, target, cfg.integrator.ed_dt);
      }
      t = target;
      const Couplings c = protocol_couplings(cfg.protocol, t);
      const PauliStringHamiltonian H = build_tfim(lat, c.J, c.h);
      double sx = 0.0, sy = 0.0, sz = 0.0;
      for (int i = 0; i < n; ++i) {
        sx += expectation_x(psi, i);
        sy += expectation_y(psi, i);
        sz += expectation_z(psi, i);
      }
      sx /= n;
      sy /= n;
      sz /= n;
      const double energy = expectation(H, psi).real();
      obs << csv_join({t, c.J, c.h, energy, 0.0, sx, 0.0, sy, 0.0, sz, 0.0, sz,
                       fq_density(psi), 0.0, 1.0})
          << "\n";
      if (corr.is_open()) {
        const auto prof = correlation_profile_dense(psi, lat, cfg.max_correlation_R);
        for (std::size_t R = 0; R < prof.size(); ++R) {
          corr << csv_join({t, static_cast<double>(R), prof[R], 0.0}) << "\n";
        }
      }
    }

    const auto wall1 = std::chrono::steady_clock::now();
    write_json_file(
        (out / "ed_manifest.json").string(),
        nlohmann::json{
            {"schema_version", kSchemaVersion},
            {"kind", "ed_manifest"},
            {"code_version", kCodeVersion},
            {"config", run_config_to_json(cfg)},
            {"timings",
             {{"wall_ms",
               std::chrono::duration_cast<std::chrono::milliseconds>(wall1 - wall0)
                   .count()}}}});
  });
}

int run_ground_search(const RunConfig& cfg) {
  return guarded(cfg.output_dir, [&] {
    validate_run_config(cfg);
    fs::create_directories(cfg.output_dir);
    const Lattice3D lat(cfg.dims[0], cfg.dims[1], cfg.dims[2]);
    const fs::path out(cfg.output_dir);

    // Sudden quenches search at the quench couplings; ramps at the critical
    // crossing (t = 0).
    const Couplings c = protocol_couplings(cfg.protocol, 0.0);
    const LocalEnergyKernel kernel(build_tfim(lat, c.J, c.h));

    std::optional<MetropolisSampler> sampler;
    if (cfg.sampler_kind == "metropolis") {
      SamplerConfig scfg = cfg.sampler;
      scfg.seed = cfg.seed;
      sampler.emplace(lat, scfg);
    }
    auto provider = [&](const NetworkState& n) -> Ensemble {
      if (sampler) return sampler->sample(n);
      Ensemble e = exact_enumeration(n, lat);
      return cfg.compress_orbits ? compress_to_orbits(e, n, lat) : e;
    };

    GroundSearchConfig gcfg;
    gcfg.max_iters = cfg.ground.max_iters;
    gcfg.dt = cfg.ground.dt;
    gcfg.energy_tol = cfg.ground.energy_tol;
    gcfg.tdvp.lambda_cut = cfg.integrator.lambda_cut;
    gcfg.tdvp.epsilon = cfg.integrator.epsilon;

    const NetworkState start = init_parameters(cfg.arch, cfg.dims, cfg.seed, cfg.init_scale);
    const GroundSearchResult res = ground_state_search(start, kernel, lat, provider, gcfg);

    save_checkpoint(res.net, cfg.seed, (out / "ground_network.json").string());
    write_json_file((out / "ground.json").string(),
                    nlohmann::json{{"schema_version", kSchemaVersion},
                                   {"kind", "ground_result"},
                                   {"J", c.J},
                                   {"h", c.h},
                                   {"energy", res.energy},
                                   {"energy_error", res.energy_error},
                                   {"energy_variance", res.energy_variance},
                                   {"iterations", res.iters},
                                   {"converged", res.converged}});
  });
}

int run_analysis(const std::string& data_dir, const std::string& out_dir) {
  return guarded(out_dir, [&] {
    if (!fs::is_directory(data_dir)) {
      throw std::invalid_argument("analysis: not a directory: " + data_dir);
    }
    struct Entry {
      double tau_q = 0.0;
      std::array<int, 3> dims{};
      double L = 0.0;
      CollapseCurve curve;
    };
    std::vector<Entry> entries;
    std::vector<std::string> offenders;
    std::vector<fs::path> run_dirs;
    for (const auto& de : fs::directory_iterator(data_dir)) {
      if (de.is_directory()) run_dirs.push_back(de.path());
    }
    std::sort(run_dirs.begin(), run_dirs.end());

    for (const fs::path& dir : run_dirs) {
      std::string manifest_file, corr_file;
      if (fs::exists(dir / "manifest.json") && fs::exists(dir / "correlation.csv")) {
        manifest_file = (dir / "manifest.json").string();
        corr_file = (dir / "correlation.csv").string();
      } else if (fs::exists(dir / "ed_manifest.json") &&
                 fs::exists(dir / "ed_correlation.csv")) {
        manifest_file = (dir / "ed_manifest.json").string();
        corr_file = (dir / "ed_correlation.csv").string();
      } else {
        continue;  // not a run directory
      }
      try {
        const nlohmann::json m = read_json_file(manifest_file);
        check_schema_version(m, manifest_file);
        const RunConfig rc = run_config_from_json(m);
        if (rc.protocol.kind != "smooth_ramp" && rc.protocol.kind != "linear_ramp") {
          throw std::runtime_error("not a ramp run (protocol " + rc.protocol.kind + ")");
        }
        const CsvTable table = read_csv_checked(corr_file);
        if (table.header != std::vector<std::string>{"t", "R", "C", "C_err"}) {
          throw std::runtime_error(corr_file + ": unexpected columns");
        }
        double t_last = -std::numeric_limits<double>::infinity();
        for (const auto& row : table.rows) t_last = std::max(t_last, row[0]);
        Entry ent;
        ent.tau_q = rc.protocol.tau_q;
        ent.dims = rc.dims;
        ent.L = std::cbrt(static_cast<double>(rc.dims[0]) * rc.dims[1] * rc.dims[2]);
        ent.curve.tau_q = rc.protocol.tau_q;
        for (const auto& row : table.rows) {
          // Rows at the crossing; R = 0 is identically 1 and carries no
          // scaling information.
          if (row[0] == t_last && row[1] >= 1.0) {
            ent.curve.R.push_back(row[1]);
            ent.curve.C.push_back(row[2]);
          }
        }
        if (ent.curve.R.size() < 2) {
          throw std::runtime_error(corr_file + ": fewer than 2 usable radii");
        }
        entries.push_back(std::move(ent));
      } catch (const std::exception& e) {
        offenders.push_back(dir.string() + ": " + e.what());
      }
    }
    if (!offenders.empty()) {
      std::string msg = "analysis: inconsistent inputs:";
      for (const auto& o : offenders) msg += "\n  " + o;
      throw std::runtime_error(msg);
    }
    if (entries.empty()) {
      throw std::runtime_error("analysis: no trajectory sets found in " + data_dir);
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return a.L != b.L ? a.L < b.L : a.tau_q < b.tau_q;
    });

    std::vector<CollapseCurve> curves;
    curves.reserve(entries.size());
    for (const Entry& ent : entries) curves.push_back(ent.curve);
    const CollapseFit fit = fit_collapse(curves);

    fs::create_directories(out_dir);
    nlohmann::json grid = nlohmann::json::array();
    std::ofstream rc(fs::path(out_dir) / "collapse_correlation.csv");
    if (!rc) throw std::runtime_error("cannot open collapse_correlation.csv");
    rc << "# schema_version=1\ntau_q,L,R,x,y\n";
    for (const Entry& ent : entries) {
      const FreezeOut fo =
          freeze_out(ent.tau_q, fit.params.A, fit.params.mu, fit.params.C);
      grid.push_back(nlohmann::json{{"tau_q", ent.tau_q},
                                    {"dims", ent.dims},
                                    {"L", ent.L},
                                    {"L_eff", effective_size(ent.L)},
                                    {"xi_hat", fo.xi_hat},
                                    {"t_hat", fo.t_hat}});
      RescaleInput in;
      in.x = ent.curve.R;
      in.y = ent.curve.C;
      in.xi_hat = fo.xi_hat;
      const RescaledCurve r = rescale_observable(RescaleKind::kCorrelation, in);
      for (std::size_t i = 0; i < r.x.size(); ++i) {
        rc << csv_join({ent.tau_q, ent.L, ent.curve.R[i], r.x[i], r.y[i]}) << "\n";
      }
    }
    write_json_file((fs::path(out_dir) / "collapse.json").string(),
                    nlohmann::json{{"schema_version", kSchemaVersion},
                                   {"kind", "collapse_report"},
                                   {"params",
                                    {{"A", fit.params.A},
                                     {"mu", fit.params.mu},
                                     {"C", fit.params.C},
                                     {"K", fit.params.K}}},
                                   {"chi", fit.chi},
                                   {"converged", fit.converged},
                                   {"n_curves", curves.size()},
                                   {"grid", grid}});
  });
}

}  // namespace nqs
