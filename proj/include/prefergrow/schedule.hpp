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

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "prefergrow/errors.hpp"

namespace prefergrow::schedule {

enum class ScheduleKind { Geometric, Linear };

inline constexpr double kAlphaClampEps = 1e-6;

/// Retention probability alpha over normalized time [0, 1] and its rate
/// beta = -d/dt log alpha, on a discrete grid of `steps` intervals.
///
/// Geometric: alpha(t) = exp(-(beta_min)^(1-t) * (beta_max)^t).
/// Linear:    alpha(t) = 1 - (1 - beta_scale) * t, i.e. the integrated rate
///            is -log(1 - (1 - beta_scale) * t); alpha(1) = beta_scale.
/// alpha is clamped to [1e-6, 1 - 1e-6] before any log or ratio is taken.
struct Schedule {
  ScheduleKind kind = ScheduleKind::Geometric;
  double beta_min = 1e-3;
  double beta_max = 10.0;
  double beta_scale = 1e-3;
  int steps = 20;

  static Schedule geometric(double beta_min, double beta_max, int steps) {
    if (!(beta_min > 0) || !(beta_max > beta_min))
      throw DomainError("geometric schedule needs 0 < beta_min < beta_max");
    if (steps < 1) throw DomainError("steps must be positive");
    Schedule sched;
    sched.kind = ScheduleKind::Geometric;
    sched.beta_min = beta_min;
    sched.beta_max = beta_max;
    sched.steps = steps;
    return sched;
  }

  static Schedule linear(double beta_scale, int steps) {
    if (!(beta_scale > 0 && beta_scale < 1))
      throw DomainError("linear schedule needs beta_scale in (0,1)");
    if (steps < 1) throw DomainError("steps must be positive");
    Schedule sched;
    sched.kind = ScheduleKind::Linear;
    sched.beta_scale = beta_scale;
    sched.steps = steps;
    return sched;
  }

  /// Grid points t_k = k / steps for k = 0..steps.
  std::vector<double> grid() const {
    std::vector<double> out(steps + 1);
    for (int k = 0; k <= steps; ++k)
      out[k] = static_cast<double>(k) / static_cast<double>(steps);
    return out;
  }

  double grid_time(int k) const {
    if (k < 0 || k > steps) throw DomainError("grid index out of range");
    return static_cast<double>(k) / static_cast<double>(steps);
  }
};

namespace detail {
inline void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw DomainError("time must lie in [0, 1], got " + std::to_string(t));
}

inline double integrated_rate(const Schedule& sched, double t) {
  if (sched.kind == ScheduleKind::Geometric)
    return std::pow(sched.beta_min, 1.0 - t) * std::pow(sched.beta_max, t);
  return -std::log(1.0 - (1.0 - sched.beta_scale) * t);
}
}  // namespace detail

inline double alpha(const Schedule& sched, double t) {
  detail::check_time(t);
  const double raw = std::exp(-detail::integrated_rate(sched, t));
  return std::min(1.0 - kAlphaClampEps, std::max(kAlphaClampEps, raw));
}

inline double alpha_at_step(const Schedule& sched, int k) {
  return alpha(sched, sched.grid_time(k));
}

/// Analytic -d/dt log alpha(t); strictly positive for valid parameters.
inline double beta(const Schedule& sched, double t) {
  detail::check_time(t);
  if (sched.kind == ScheduleKind::Geometric) {
    return std::pow(sched.beta_min, 1.0 - t) * std::pow(sched.beta_max, t) *
           std::log(sched.beta_max / sched.beta_min);
  }
  const double slope = 1.0 - sched.beta_scale;
  return slope / (1.0 - slope * t);
}

inline double beta_at_step(const Schedule& sched, int k) {
  return beta(sched, sched.grid_time(k));
}

}  // namespace prefergrow::schedule
