// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration, orchestration, and persistence: JSON run definitions,
// dynamics / ground-search / dense-reference / analysis jobs, and the file
// formats they emit.
//
// Every emitted file carries a schema-version field. A run writes:
//   manifest.json        config echo + code version + timings + counters
//   trajectory.jsonl     one header record, then one record per accepted step
//   observables.csv      one row per measurement time
//   correlation.csv      (optional) spin-spin profile rows per measurement
//   run_checkpoint.json  + run_checkpoint_network.json for resume
// A failed run leaves its partial outputs plus a FAILED marker file holding
// the error text. Two executions with the same config and seed produce
// byte-identical observables and trajectory files; a resumed run agrees
// with an uninterrupted one to integrator tolerance (the sampler warm-start
// differs), not bitwise.

#ifndef NQS3D_RUNIO_HPP_
#define NQS3D_RUNIO_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "nqs3d/lattice.hpp"
#include "nqs3d/network.hpp"
#include "nqs3d/pauli.hpp"
#include "nqs3d/protocols.hpp"
#include "nqs3d/sampler.hpp"

namespace nqs {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kCodeVersion = "1.0.0";

struct IntegratorConfig {
  double dt_init = 1e-3;
  double tol = 1e-6;       // adaptive Heun relative error target
  double dt_min = 1e-12;   // step underflow threshold (hard error)
  double lambda_cut = 1e-8;
  double epsilon = 1e-10;
  int checkpoint_every = 0;  // accepted steps between checkpoints; 0 disables
  double ed_dt = 0.005;      // dense-propagator step for the `ed` job
};

struct ProtocolSpec {
  std::string kind = "sudden_quench";  // sudden_quench | smooth_ramp | linear_ramp
  double J = 1.0;   // sudden-quench couplings
  double h = kCriticalField;
  double tau_q = 1.0;  // ramp parameters
  double J_final = 1.0;
  bool allow_post_critical = false;
};

struct GroundConfig {
  int max_iters = 500;
  double dt = 0.05;
  double energy_tol = 1e-8;
};

struct RunConfig {
  std::array<int, 3> dims{2, 2, 3};
  ArchitectureSpec arch;
  std::uint64_t seed = 0;
  double init_scale = 5e-3;
  std::string sampler_kind = "exact";  // exact | metropolis
  SamplerConfig sampler;               // used by the metropolis kind
  bool compress_orbits = true;         // orbit-compress enumerated ensembles
  IntegratorConfig integrator;
  ProtocolSpec protocol;
  GroundConfig ground;
  std::string frame = "lab";  // lab | rotated_interaction
  std::vector<double> measurement_times;  // strictly increasing
  int max_correlation_R = -1;  // < 0 disables correlation.csv
  std::string output_dir = "out";
};

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);
// Reads a config file; a run manifest is accepted too (its config echo is
// used), so a run can be reproduced from its manifest alone.
RunConfig load_run_config(const std::string& path);
// Throws std::invalid_argument naming the offending field.
void validate_run_config(const RunConfig& cfg);

// Lab couplings prescribed by the protocol at time t, and the protocol's
// natural start time (0 for sudden quenches, the ramp start otherwise).
Couplings protocol_couplings(const ProtocolSpec& p, double t);
double protocol_start_time(const ProtocolSpec& p);

// Hamiltonian the variational state is evolved under. Lab frame: the
// transverse-field model at the scheduled couplings. Rotated interaction
// frame (sudden quenches only): the interaction term in the frame co-moving
// with the field, then y-rotated so the initial product state is uniform.
PauliStringHamiltonian simulation_hamiltonian(const RunConfig& cfg, const Lattice3D& lat,
                                              double t);

// Lab-frame <sigma^z> reconstructed from simulation-frame <X>, <Y> means in
// the rotated interaction frame.
double lab_sigma_z(double h, double t, double x_mean, double y_mean);

// Shortest-width fixed formatting used in all CSV output ("%.17g").
std::string format_g17(double v);

// Job entry points. Each returns a process exit code: 0 on success;
// failures write a FAILED marker into the output directory, print the error
// to stderr, and return nonzero.
int run_dynamics(const RunConfig& cfg, const std::string& resume_checkpoint = {});
int run_ed_reference(const RunConfig& cfg);
int run_ground_search(const RunConfig& cfg);
// Scans data_dir for run directories (manifest.json + correlation.csv, or
// the ed_-prefixed pair), fits the correlation collapse across their ramp
// scales, and writes collapse.json + collapse_correlation.csv to out_dir.
int run_analysis(const std::string& data_dir, const std::string& out_dir);

}  // namespace nqs

#endif  // NQS3D_RUNIO_HPP_
