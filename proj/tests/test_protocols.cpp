// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "nqs3d/protocols.hpp"

using nqs::Couplings;
using nqs::RampSpec;

TEST_CASE("the coupling sum rule J/J_final + h/h_crit = 2 holds pointwise") {
  for (bool smooth : {true, false}) {
    RampSpec spec;
    spec.tau_q = 0.7;
    spec.J_final = 1.3;
    spec.smooth = smooth;
    spec.allow_post_critical = true;
    const double t0 = nqs::ramp_start(spec), t1 = nqs::ramp_end(spec);
    for (int k = 0; k <= 200; ++k) {
      const double t = t0 + (t1 - t0) * k / 200.0;
      const Couplings c = nqs::couplings_at(spec, t);
      CHECK(c.J / spec.J_final + c.h / spec.critical_field() ==
            doctest::Approx(2.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("smooth ramp window and endpoint values") {
  RampSpec spec;
  spec.tau_q = 2.0;
  spec.J_final = 1.0;
  spec.smooth = true;
  CHECK(nqs::ramp_start(spec) == doctest::Approx(-3.0).epsilon(1e-15));
  CHECK(nqs::ramp_end(spec) == 0.0);

  // Start: no interaction, doubled field; crossing: the critical pair.
  const Couplings start = nqs::couplings_at(spec, nqs::ramp_start(spec));
  CHECK(start.J == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(start.h == doctest::Approx(2.0 * nqs::kCriticalField).epsilon(1e-13));
  const Couplings cross = nqs::couplings_at(spec, 0.0);
  CHECK(cross.J == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cross.h == doctest::Approx(nqs::kCriticalField).epsilon(1e-15));

  // The smooth start switches on with zero interaction velocity.
  const double eps = 1e-6;
  const Couplings a = nqs::couplings_at(spec, nqs::ramp_start(spec) + eps);
  CHECK(std::abs(a.J - start.J) / eps <= 1e-5);  // dJ/dt -> 0 at the start
}

TEST_CASE("linear ramp window and endpoint values") {
  RampSpec spec;
  spec.tau_q = 0.5;
  spec.J_final = 2.0;
  spec.smooth = false;
  CHECK(nqs::ramp_start(spec) == doctest::Approx(-0.5).epsilon(1e-15));
  const Couplings start = nqs::couplings_at(spec, -0.5);
  CHECK(start.J == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(start.h == doctest::Approx(2.0 * spec.critical_field()).epsilon(1e-13));
  // Linear: dJ/dt = J_final / tau_q everywhere.
  const Couplings a = nqs::couplings_at(spec, -0.3);
  const Couplings b = nqs::couplings_at(spec, -0.2);
  CHECK((b.J - a.J) / 0.1 == doctest::Approx(spec.J_final / spec.tau_q).epsilon(1e-10));
}

TEST_CASE("ramps end at the critical crossing unless explicitly continued") {
  RampSpec spec;
  spec.tau_q = 1.0;
  spec.smooth = true;
  CHECK(nqs::ramp_end(spec) == 0.0);
  CHECK_THROWS_AS(nqs::couplings_at(spec, 0.5), std::out_of_range);
  spec.allow_post_critical = true;
  CHECK(nqs::ramp_end(spec) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK_NOTHROW(nqs::couplings_at(spec, 1.5));
  CHECK_THROWS_AS(nqs::couplings_at(spec, 1.6), std::out_of_range);
  CHECK_THROWS_AS(nqs::couplings_at(spec, -1.6), std::out_of_range);
}

TEST_CASE("schedules close over the ramp and carry the right tag") {
  RampSpec spec;
  spec.tau_q = 1.1;
  spec.J_final = 0.9;
  for (bool smooth : {true, false}) {
    spec.smooth = smooth;
    auto sched = nqs::make_schedule(spec);
    CHECK(sched.tag == (smooth ? "smooth_ramp" : "linear_ramp"));
    for (double t : {nqs::ramp_start(spec), nqs::ramp_start(spec) / 3.0, 0.0}) {
      const Couplings c = nqs::couplings_at(spec, t);
      CHECK(sched.J_of_t(t) == c.J);
      CHECK(sched.h_of_t(t) == c.h);
    }
  }
}

TEST_CASE("sudden quench holds constant couplings") {
  auto sched = nqs::sudden_quench(1.0, nqs::kCriticalField);
  CHECK(sched.tag == "sudden_quench");
  for (double t : {0.0, 0.37, 12.0}) {
    CHECK(sched.J_of_t(t) == 1.0);
    CHECK(sched.h_of_t(t) == nqs::kCriticalField);
  }
  CHECK_THROWS(nqs::sudden_quench(std::numeric_limits<double>::quiet_NaN(), 1.0));
}

TEST_CASE("parameter validation") {
  RampSpec spec;
  spec.tau_q = -1.0;
  CHECK_THROWS(nqs::ramp_start(spec));
  spec.tau_q = 1.0;
  spec.J_final = 0.0;
  CHECK_THROWS(nqs::couplings_at(spec, 0.0));
}

TEST_CASE("the critical field constant") {
  CHECK(nqs::kCriticalField == 5.158136);
}
