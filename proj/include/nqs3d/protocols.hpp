// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Driving protocols for the transverse-field model: critical-crossing ramps
// and sudden quenches.
//
// Ramps are parameterized by g(u), u = t/tau_q, through
//   J(t) = J_final (1 + g(u)),   h(t) = h_crit (1 - g(u)),
// so J/J_final + h/h_crit = 2 holds identically and the critical point
// (J_final, h_crit) is crossed at t = 0. The smooth ramp uses
// g(u) = u - (4/27) u^3 on u in [-3/2, 3/2]: it starts at t = -3/2 tau_q
// with J = 0, h = 2 h_crit and vanishing dJ/dt. The linear ramp uses
// g(u) = u on u in [-1, 1].

#ifndef NQS3D_PROTOCOLS_HPP_
#define NQS3D_PROTOCOLS_HPP_

#include "nqs3d/pauli.hpp"

namespace nqs {

// Critical transverse field of the cubic-lattice model in units of J.
inline constexpr double kCriticalField = 5.158136;

struct Couplings {
  double J = 0.0;
  double h = 0.0;
};

struct RampSpec {
  double tau_q = 1.0;     // quench time scale, > 0
  double J_final = 1.0;   // interaction strength at the critical crossing
  bool smooth = true;     // cubic-smoothed start vs linear
  // Ramps end at the critical crossing t = 0 unless explicitly allowed to
  // continue to the symmetric end of the window.
  bool allow_post_critical = false;

  double critical_field() const { return kCriticalField * J_final; }
};

double ramp_start(const RampSpec& spec);  // -3/2 tau_q (smooth) or -tau_q (linear)
double ramp_end(const RampSpec& spec);    // 0, or the mirrored start if allowed

// Couplings at time t; throws outside [ramp_start, ramp_end].
Couplings couplings_at(const RampSpec& spec, double t);

// Schedule closures for the evolution drivers. Tags: "smooth_ramp",
// "linear_ramp", "sudden_quench".
CouplingSchedule make_schedule(const RampSpec& spec);
CouplingSchedule sudden_quench(double J, double h);

}  // namespace nqs

#endif  // NQS3D_PROTOCOLS_HPP_
