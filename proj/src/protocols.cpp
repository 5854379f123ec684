// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "nqs3d/protocols.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nqs {
namespace {

void validate(const RampSpec& spec) {
  if (!(spec.tau_q > 0.0)) throw std::invalid_argument("ramp: tau_q must be positive");
  if (!(spec.J_final > 0.0)) throw std::invalid_argument("ramp: J_final must be positive");
}

double ramp_shape(const RampSpec& spec, double u) {
  return spec.smooth ? u - (4.0 / 27.0) * u * u * u : u;
}

}  // namespace

double ramp_start(const RampSpec& spec) {
  validate(spec);
  return spec.smooth ? -1.5 * spec.tau_q : -spec.tau_q;
}

double ramp_end(const RampSpec& spec) {
  validate(spec);
  return spec.allow_post_critical ? -ramp_start(spec) : 0.0;
}

Couplings couplings_at(const RampSpec& spec, double t) {
  validate(spec);
  const double lo = ramp_start(spec);
  const double hi = ramp_end(spec);
  const double slack = 1e-9 * spec.tau_q;
  if (t < lo - slack || t > hi + slack) {
    throw std::out_of_range("couplings_at: t = " + std::to_string(t) +
                            " outside the ramp window [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
  }
  const double g = ramp_shape(spec, t / spec.tau_q);
  return Couplings{spec.J_final * (1.0 + g), spec.critical_field() * (1.0 - g)};
}

CouplingSchedule make_schedule(const RampSpec& spec) {
  validate(spec);
  CouplingSchedule sched;
  sched.J_of_t = [spec](double t) { return couplings_at(spec, t).J; };
  sched.h_of_t = [spec](double t) { return couplings_at(spec, t).h; };
  sched.tag = spec.smooth ? "smooth_ramp" : "linear_ramp";
  return sched;
}

CouplingSchedule sudden_quench(double J, double h) {
  if (!std::isfinite(J) || !std::isfinite(h)) {
    throw std::invalid_argument("sudden_quench: couplings must be finite");
  }
  CouplingSchedule sched;
  sched.J_of_t = [J](double) { return J; };
  sched.h_of_t = [h](double) { return h; };
  sched.tag = "sudden_quench";
  return sched;
}

}  // namespace nqs
