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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "prefergrow/errors.hpp"
#include "prefergrow/fading.hpp"
#include "prefergrow/process.hpp"
#include "prefergrow/rng.hpp"
#include "prefergrow/schedule.hpp"
#include "prefergrow/scorenet.hpp"

namespace prefergrow::sampler {

using fading::FadingMatrix;
using fading::NonPreferenceState;

struct SamplerConfig {
  int steps = 20;           // reverse grid tau_i = i / steps, tau_steps = 1
  double guidance = 0.0;    // personalization strength w; 0 recovers the
                            // plain conditional scores
  int avg_trajectories = 1; // >1 averages the final distribution over
                            // independent trajectories
};

/// Personalization contrast: (1 + w) * user - w * nonpref, elementwise.
/// An alternative convention blends as w' * user + (1 - w') * nonpref; it
/// maps onto this one via w' = 1 + w. This form is used so that w = 0
/// recovers the plain conditional scores.
template <typename Real>
std::vector<Real> personalize(const std::vector<Real>& s_user,
                              const std::vector<Real>& s_nonpref, Real w) {
  if (s_user.size() != s_nonpref.size())
    throw DimensionError("personalization operands differ in length");
  std::vector<Real> out(s_user.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (Real(1) + w) * s_user[i] - w * s_nonpref[i];
  return out;
}

template <typename Real>
struct GenerationResult {
  std::vector<Real> distribution;  // final-step law over the corpus
  std::vector<int> ranking;        // real items, most preferred first
  int sampled_item = 0;            // draw from the final distribution
  long long clamped_entries = 0;
  long long reverse_rows = 0;
};

/// Ranking over real items by descending score, ties broken by ascending
/// item index; the virtual item never appears.
template <typename Real>
std::vector<int> rank_items(const std::vector<Real>& scores, int num_real_items) {
  std::vector<int> order(num_real_items);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return order;
}

/// Reverse preference growing with caller-supplied log-ratios. The provider
/// is called as ratios(x_t, step_index, t_index) and must return
/// log p(z | u) - log p(x_t | u) estimates for every corpus state z.
template <typename Real, typename RatioProvider>
GenerationResult<Real> grow(RatioProvider&& ratios, const SamplerConfig& cfg,
                            const schedule::Schedule& sched,
                            const NonPreferenceState<Real>& target,
                            const FadingMatrix<Real>& fm, int num_real_items,
                            Rng& rng) {
  if (cfg.steps < 1) throw ConfigError("sampler needs at least one step");
  if (cfg.avg_trajectories < 1)
    throw ConfigError("trajectory count must be positive");
  const int m = fm.corpus_size;

  GenerationResult<Real> result;
  std::vector<Real> averaged(m, Real(0));

  for (int traj = 0; traj < cfg.avg_trajectories; ++traj) {
    int state = rng.categorical(target.weights);
    std::vector<Real> final_row;
    for (int s = cfg.steps; s >= 1; --s) {
      const double tau_now = static_cast<double>(s) / cfg.steps;
      const double tau_prev = static_cast<double>(s - 1) / cfg.steps;
      const Real alpha_prev = Real(schedule::alpha(sched, tau_prev));
      const Real alpha_now = Real(schedule::alpha(sched, tau_now));
      const int t_index =
          static_cast<int>(std::lround(tau_now * sched.steps));

      const std::vector<Real> r = ratios(state, s, t_index);
      const auto step =
          process::reverse_transition_exact(state, alpha_prev, alpha_now, fm, r);
      result.clamped_entries += step.clamped_entries;
      ++result.reverse_rows;
      if (s == 1) {
        final_row = step.probabilities;
        state = rng.categorical(step.probabilities);
      } else {
        state = rng.categorical(step.probabilities);
      }
    }
    for (int i = 0; i < m; ++i) averaged[i] += final_row[i];
    if (traj == cfg.avg_trajectories - 1) result.sampled_item = state;
  }

  for (Real& p : averaged) p /= Real(cfg.avg_trajectories);
  result.distribution = std::move(averaged);
  result.ranking = rank_items(result.distribution, num_real_items);
  return result;
}

/// Full model-driven generation for one user. Encodes the history once,
/// applies personalization guidance at every step, and returns the grown
/// preference distribution plus the induced ranking.
template <typename Real>
GenerationResult<Real> generate(const scorenet::ScoreField<Real>& field,
                                const scorenet::UserContext& ctx,
                                const SamplerConfig& cfg,
                                const schedule::Schedule& sched,
                                const NonPreferenceState<Real>& target,
                                const FadingMatrix<Real>& fm, Rng& rng) {
  if (ctx.is_nonpref)
    throw ConfigError("generation needs a preference user context");
  if (fm.corpus_size != field.corpus)
    throw DimensionError("fading matrix size differs from the model corpus");

  const auto user_vec = scorenet::encode_user(field, ctx);
  const auto nonpref_vec =
      scorenet::encode_user(field, scorenet::UserContext::nonpref());
  const Real w = Real(cfg.guidance);

  const auto ratios = [&](int x_t, int /*step*/, int t_index) {
    std::vector<Real> s =
        scorenet::score_with_user(field, x_t, t_index, user_vec);
    if (w != Real(0)) {
      const std::vector<Real> s_phi =
          scorenet::score_with_user(field, x_t, t_index, nonpref_vec);
      s = personalize(s, s_phi, w);
    }
    // The reverse row is invariant to a common shift of the log-ratios,
    // so recenter to keep the exponentials bounded.
    const Real mx = *std::max_element(s.begin(), s.end());
    for (Real& v : s) v -= mx;
    return s;
  };
  return grow<Real>(ratios, cfg, sched, target, fm, field.num_items, rng);
}

template <typename Real>
GenerationResult<Real> generate(const scorenet::ScoreField<Real>& field,
                                const scorenet::UserContext& ctx,
                                const SamplerConfig& cfg,
                                const schedule::Schedule& sched, Rng& rng) {
  const auto target = field.current_target();
  const auto fm = fading::build_rank1(target);
  return generate(field, ctx, cfg, sched, target, fm, rng);
}

}  // namespace prefergrow::sampler
