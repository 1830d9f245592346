// Copyright 2026 The PreferGrow Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "prefergrow/rng.hpp"
#include "prefergrow/schedule.hpp"

using namespace prefergrow;
using schedule::Schedule;

TEST_CASE("geometric retention at the endpoints", "[schedule]") {
  auto sched = Schedule::geometric(1e-3, 10.0, 20);
  REQUIRE(schedule::alpha(sched, 0.0) == Catch::Approx(std::exp(-1e-3)).epsilon(1e-12));
  REQUIRE(schedule::alpha(sched, 0.0) >= 1.0 - 1e-3);
  REQUIRE(schedule::alpha(sched, 1.0) == Catch::Approx(std::exp(-10.0)).epsilon(1e-12));
  REQUIRE(schedule::alpha(sched, 1.0) <= 1e-3);
}

TEST_CASE("linear retention endpoint equals beta_scale", "[schedule]") {
  auto sched = Schedule::linear(0.01, 20);
  REQUIRE(schedule::alpha(sched, 1.0) == Catch::Approx(0.01).margin(1e-12));
  REQUIRE(schedule::alpha(sched, 0.0) == Catch::Approx(1.0 - schedule::kAlphaClampEps).margin(1e-15));
}

TEST_CASE("retention decreases strictly along the grid", "[schedule]") {
  for (auto sched : {Schedule::geometric(1e-3, 10.0, 20), Schedule::linear(1e-3, 20)}) {
    double prev = schedule::alpha_at_step(sched, 0);
    for (int k = 1; k <= sched.steps; ++k) {
      const double cur = schedule::alpha_at_step(sched, k);
      REQUIRE(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("rate matches a central difference of -log alpha", "[schedule]") {
  auto geometric = Schedule::geometric(1e-3, 10.0, 20);
  auto linear = Schedule::linear(0.2, 20);
  const double h = 1e-5;
  Rng rng(42);
  for (const auto& sched : {geometric, linear}) {
    for (int trial = 0; trial < 200; ++trial) {
      const double t = h + (1.0 - 2.0 * h) * rng.uniform();
      const double fd = -(std::log(schedule::alpha(sched, t + h)) -
                          std::log(schedule::alpha(sched, t - h))) /
                        (2.0 * h);
      const double analytic = schedule::beta(sched, t);
      REQUIRE(std::abs(fd - analytic) / std::abs(analytic) < 1e-6);
    }
  }
}

TEST_CASE("linear rate at zero equals one minus beta_scale", "[schedule]") {
  auto sched = Schedule::linear(0.5, 20);
  REQUIRE(schedule::beta(sched, 0.0) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("rate stays positive", "[schedule][property]") {
  Rng rng(7);
  auto geometric = Schedule::geometric(1e-3, 10.0, 20);
  auto linear = Schedule::linear(1e-3, 20);
  for (int trial = 0; trial < 1000; ++trial) {
    const double t = rng.uniform();
    REQUIRE(schedule::beta(geometric, t) > 0.0);
    REQUIRE(schedule::beta(linear, t) > 0.0);
  }
}

TEST_CASE("alpha agrees with trapezoidal quadrature of the rate",
          "[schedule][property]") {
  // The geometric exponent does not vanish at t = 0, so integrating the
  // rate from 0 reconstructs alpha(t) / alpha(0); the linear kind has
  // alpha(0) = 1 and is unaffected by the ratio.
  auto geometric = Schedule::geometric(1e-3, 10.0, 20);
  auto linear = Schedule::linear(0.05, 20);
  Rng rng(12);
  for (const auto& sched : {geometric, linear}) {
    for (int trial = 0; trial < 10; ++trial) {
      const double t = 0.05 + 0.9 * rng.uniform();
      const int panels = 10000;
      double integral = 0.0;
      for (int i = 0; i < panels; ++i) {
        const double a = t * i / panels;
        const double b = t * (i + 1) / panels;
        integral += 0.5 * (schedule::beta(sched, a) + schedule::beta(sched, b)) * (b - a);
      }
      const double ratio = schedule::alpha(sched, t) / schedule::alpha(sched, 0.0);
      REQUIRE(std::abs(std::exp(-integral) - ratio) < 1e-5);
    }
  }
}

TEST_CASE("times outside the unit interval are rejected", "[schedule][errors]") {
  auto sched = Schedule::geometric(1e-3, 10.0, 20);
  REQUIRE_THROWS_AS(schedule::alpha(sched, -0.1), DomainError);
  REQUIRE_THROWS_AS(schedule::alpha(sched, 1.1), DomainError);
  REQUIRE_THROWS_AS(schedule::beta(sched, 2.0), DomainError);
  REQUIRE_THROWS_AS(Schedule::geometric(0.0, 10.0, 20), DomainError);
  REQUIRE_THROWS_AS(Schedule::linear(1.5, 20), DomainError);
}
