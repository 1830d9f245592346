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
#include <limits>
#include <optional>
#include <vector>

#include "prefergrow/errors.hpp"
#include "prefergrow/fading.hpp"

namespace prefergrow::losses {

using fading::FadingMatrix;
using fading::NonPreferenceState;

inline constexpr double kScoreMagnitudeLimit = 50.0;

/// Per-term score entropy: e^s - e^r s + e^r (r - 1). Evaluated as
/// e^r * (expm1(s - r) - (s - r)), which is exact at s = r and never
/// rounds below zero.
template <typename Real>
Real se_term(Real s, Real r) {
  if (!(std::abs(s) <= Real(kScoreMagnitudeLimit)) ||
      !(std::abs(r) <= Real(kScoreMagnitudeLimit)))
    throw MagnitudeError("score entropy arguments exceed magnitude 50");
  const Real d = s - r;
  return std::exp(r) * (std::expm1(d) - d);
}

template <typename Real>
Real se_term_grad_s(Real s, Real r) {
  return std::exp(s) - std::exp(r);
}

namespace detail {
template <typename Real>
Real log_sigmoid(Real x) {
  // -log(1 + e^{-x}) without overflow on either side.
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}
}  // namespace detail

template <typename Real>
Real sigmoid(Real x) {
  return x >= 0 ? Real(1) / (Real(1) + std::exp(-x))
                : std::exp(x) / (Real(1) + std::exp(x));
}

/// Soft-label binary cross-entropy with label sigma(r) and logit s. Shares
/// its minimizer (s = r) and descent direction with se_term.
template <typename Real>
Real sbce_loss(Real s, Real r) {
  if (!(std::abs(s) <= Real(kScoreMagnitudeLimit)) ||
      !(std::abs(r) <= Real(kScoreMagnitudeLimit)))
    throw MagnitudeError("soft BCE arguments exceed magnitude 50");
  const Real label = sigmoid(r);
  return -label * detail::log_sigmoid(s) -
         (Real(1) - label) * detail::log_sigmoid(-s);
}

template <typename Real>
Real sbce_grad_s(Real s, Real r) {
  return sigmoid(s) - sigmoid(r);
}

/// Which closed-form family the non-preference state belongs to.
struct SettingKind {
  enum class Kind { PointWise, PairWise, Hybrid, Adaptive };
  Kind kind = Kind::PairWise;
  int n_lambda = 3;             // hybrid: lambda = 1 - 10^{-n_lambda}
  bool adaptive_virtual = false;

  double lambda() const { return 1.0 - std::pow(10.0, -n_lambda); }

  static SettingKind pointwise() { return {Kind::PointWise, 0, false}; }
  static SettingKind pairwise() { return {Kind::PairWise, 0, false}; }
  static SettingKind hybrid(int n_lambda) {
    if (n_lambda < 1) throw ConfigError("n_lambda must be a positive integer");
    return {Kind::Hybrid, n_lambda, false};
  }
  static SettingKind adaptive(bool with_virtual_item) {
    return {Kind::Adaptive, 0, with_virtual_item};
  }

  /// Corpus size (real items plus virtual item where the setting uses one).
  int corpus_size(int num_items) const {
    switch (kind) {
      case Kind::PointWise:
      case Kind::Hybrid:
        return num_items + 1;
      case Kind::Adaptive:
        return num_items + (adaptive_virtual ? 1 : 0);
      case Kind::PairWise:
        return num_items;
    }
    return num_items;
  }

  bool uses_virtual_item() const {
    return kind == Kind::PointWise || kind == Kind::Hybrid ||
           (kind == Kind::Adaptive && adaptive_virtual);
  }

  /// Initial non-preference state for num_items real items. The adaptive
  /// setting starts uniform (zero logits).
  template <typename Real>
  NonPreferenceState<Real> initial_state(int num_items) const {
    switch (kind) {
      case Kind::PointWise:
        return NonPreferenceState<Real>::virtual_point_mass(num_items);
      case Kind::PairWise:
        return NonPreferenceState<Real>::uniform(num_items);
      case Kind::Hybrid:
        return NonPreferenceState<Real>::hybrid(num_items, Real(lambda()));
      case Kind::Adaptive: {
        std::vector<Real> w(corpus_size(num_items), Real(1));
        return NonPreferenceState<Real>(std::move(w), adaptive_virtual);
      }
    }
    return NonPreferenceState<Real>::uniform(num_items);
  }
};

/// Scalar summaries shared by the closed forms.
template <typename Real>
struct LossIntermediates {
  Real mean_exp_score = 0;  // (sum_y e^{s_y} - 1) / N
  Real mean_score = 0;      // (sum_y s_y) / N
  Real weighted_score = 0;  // sum_y mu_y s_y
  Real entropy_term = 0;    // sum_y mu_y log mu_y
  Real delta = 0;           // N alpha / (1 - alpha)
  Real sigma = 0;           // alpha / (1 - alpha)
  Real lambda_term = 0;     // lambda delta / (lambda delta + N)
};

namespace detail {
template <typename Real>
void require_pinned(const std::vector<Real>& scores, int x_t) {
  if (x_t < 0 || x_t >= static_cast<int>(scores.size()))
    throw DimensionError("item index out of range");
  if (scores[x_t] != Real(0))
    throw ConfigError("score at the current state must be pinned to zero");
}
}  // namespace detail

/// Authoritative score-entropy loss: the full transition-rate-weighted sum
///   sum_{y != x_t} beta * E(x_t, y) * se_term(s_y, log p(y|x0) - log p(x_t|x0)).
/// Terms whose forward probability is zero carry no training signal and are
/// dropped, matching the closed forms' restriction to reachable states.
/// Runs in O(M) through the structured fading accessors.
template <typename Real>
Real se_loss_generic(int x0, int x_t, const std::vector<Real>& scores,
                     Real alpha_t, Real beta_factor,
                     const FadingMatrix<Real>& fm) {
  const int m = fm.corpus_size;
  if (static_cast<int>(scores.size()) != m)
    throw DimensionError("score vector length differs from corpus size");
  if (x0 < 0 || x0 >= m) throw DimensionError("item index out of range");
  detail::require_pinned(scores, x_t);

  const std::vector<Real> from_x0 = fading::column(fm, x0);
  const std::vector<Real> row_xt = fading::row(fm, x_t);
  const Real q = Real(1) - alpha_t;
  const Real denom = (x_t == x0 ? alpha_t : Real(0)) + q * from_x0[x_t];
  if (!(denom > 0))
    throw UnreachableState("x_t has zero probability under the fading kernel");
  const Real log_denom = std::log(denom);

  Real loss = 0;
  for (int y = 0; y < m; ++y) {
    if (y == x_t) continue;            // pinned score makes this term zero
    const Real weight = row_xt[y];
    if (weight <= 0) continue;
    const Real p_y = (y == x0 ? alpha_t : Real(0)) + q * from_x0[y];
    if (p_y <= 0) continue;            // unreachable target state
    const Real r = std::log(p_y) - log_denom;
    loss += weight * se_term(scores[y], r);
  }
  return beta_factor * loss;
}

namespace detail {
template <typename Real>
bool state_matches(const NonPreferenceState<Real>& pT,
                   const std::vector<Real>& expected, Real tol = Real(1e-9)) {
  if (pT.size() != static_cast<int>(expected.size())) return false;
  for (int i = 0; i < pT.size(); ++i)
    if (std::abs(pT.normalized(i) - expected[i]) > tol) return false;
  return true;
}

// e^r (r - 1) for e^r given; the r -> 0-probability limit is 0.
template <typename Real>
Real entropy_piece(Real exp_r) {
  if (exp_r <= 0) return Real(0);
  return exp_r * (std::log(exp_r) - Real(1));
}
}  // namespace detail

/// Closed-form evaluation of the generic loss for the four supported
/// settings. Algebraically identical to se_loss_generic; the generic sum
/// stays the arbiter in the verification suites.
template <typename Real>
Real se_loss_closed(const SettingKind& setting, int x0, int x_t,
                    const std::vector<Real>& scores, Real alpha_t,
                    Real beta_factor, const NonPreferenceState<Real>& pT,
                    LossIntermediates<Real>* intermediates = nullptr) {
  const int m = pT.size();
  if (static_cast<int>(scores.size()) != m)
    throw DimensionError("score vector length differs from corpus size");
  if (x0 < 0 || x0 >= m || x_t < 0 || x_t >= m)
    throw DimensionError("item index out of range");
  detail::require_pinned(scores, x_t);

  const Real a = alpha_t;
  const Real q = Real(1) - alpha_t;
  if (!(q > 0)) throw DomainError("alpha_t must be below one");

  LossIntermediates<Real> scratch;
  LossIntermediates<Real>& mid = intermediates ? *intermediates : scratch;
  mid.sigma = a / q;

  Real sum_exp = 0, sum_s = 0;
  for (int y = 0; y < m; ++y) {
    if (std::abs(scores[y]) > Real(kScoreMagnitudeLimit))
      throw MagnitudeError("score exceeds magnitude 50");
    sum_exp += std::exp(scores[y]);
    sum_s += scores[y];
  }
  const Real sum_exp_others = sum_exp - Real(1);  // drops the pinned e^0

  switch (setting.kind) {
    case SettingKind::Kind::PointWise: {
      const int v = m - 1;
      if (!pT.has_virtual_item ||
          !detail::state_matches(pT, [&] {
            std::vector<Real> e(m, Real(0));
            e[v] = Real(1);
            return e;
          }()))
        throw ConfigError("point-wise setting needs a virtual point mass");
      const int n = m - 1;
      mid.delta = Real(n) * a / q;
      if (x0 == v) throw DomainError("preferred item cannot be the virtual item");
      if (x_t == x0) return Real(0);  // rate row of a real item vanishes
      if (x_t != v)
        throw UnreachableState("point-wise fading only reaches x0 or the virtual item");
      const Real er = a / q;
      const Real r = std::log(a) - std::log(q);
      return beta_factor *
             (std::exp(scores[x0]) - er * scores[x0] + er * (r - Real(1)));
    }

    case SettingKind::Kind::PairWise: {
      if (!detail::state_matches(pT, std::vector<Real>(m, Real(1) / Real(m))))
        throw ConfigError("pair-wise setting needs a uniform state");
      const int n = m;
      const Real delta = Real(n) * a / q;
      mid.delta = delta;
      mid.mean_exp_score = sum_exp_others / Real(n);
      mid.mean_score = sum_s / Real(n);
      if (x_t == x0) {
        const Real bracket =
            sum_exp_others - sum_s / (Real(1) + delta) -
            Real(n - 1) * (std::log1p(delta) + Real(1)) / (Real(1) + delta);
        return beta_factor / Real(n) * bracket;
      }
      const Real bracket = sum_exp_others - sum_s - delta * scores[x0] +
                           (Real(1) + delta) * (std::log1p(delta) - Real(1)) -
                           Real(n - 2);
      return beta_factor / Real(n) * bracket;
    }

    case SettingKind::Kind::Hybrid: {
      const Real lambda = Real(setting.lambda());
      const int v = m - 1;
      const int n = m - 1;
      if (!pT.has_virtual_item ||
          !detail::state_matches(pT, [&] {
            std::vector<Real> e(m, lambda / Real(n));
            e[v] = Real(1) - lambda;
            return e;
          }()))
        throw ConfigError("hybrid setting needs the matching mixture state");
      if (x0 == v) throw DomainError("preferred item cannot be the virtual item");
      const Real c = lambda / Real(n);
      const Real mu_v = Real(1) - lambda;
      const Real delta = Real(n) * a / q;
      mid.delta = delta;
      mid.lambda_term = lambda * delta / (lambda * delta + Real(n));
      mid.mean_exp_score = sum_exp_others / Real(n);
      mid.mean_score = sum_s / Real(n);

      Real stilde = 0;
      for (int y = 0; y < m; ++y)
        stilde += (y == v ? mu_v : c) * scores[y];
      mid.weighted_score = stilde;

      if (x_t == v) {
        const Real rho = q * mu_v;
        const Real er0 = (a + q * c) / rho;
        const Real ers = c / mu_v;
        const Real bracket = sum_exp_others -
                             (a * scores[x0] + q * stilde) / rho +
                             detail::entropy_piece(er0) +
                             Real(n - 1) * detail::entropy_piece(ers);
        return beta_factor * mu_v * bracket;
      }
      if (x_t == x0) {
        const Real rho = a + q * c;
        const Real er_real = q * c / rho;
        const Real er_v = q * mu_v / rho;
        const Real bracket = sum_exp_others - q * stilde / rho +
                             Real(n - 1) * detail::entropy_piece(er_real) +
                             detail::entropy_piece(er_v);
        return beta_factor * c * bracket;
      }
      {
        const Real rho = q * c;
        const Real er0 = (a + q * c) / rho;
        const Real er_v = mu_v / c;
        const Real bracket = sum_exp_others -
                             (a * scores[x0] + q * stilde) / rho +
                             detail::entropy_piece(er0) - Real(n - 2) +
                             detail::entropy_piece(er_v);
        return beta_factor * c * bracket;
      }
    }

    case SettingKind::Kind::Adaptive: {
      if (pT.has_virtual_item != setting.adaptive_virtual)
        throw ConfigError("adaptive setting and state disagree on the virtual item");
      std::vector<Real> mu(m);
      Real mu_hat = 0, stilde = 0;
      for (int y = 0; y < m; ++y) {
        mu[y] = pT.normalized(y);
        if (!(mu[y] > 0))
          throw ConfigError("adaptive state must be strictly positive");
        mu_hat += mu[y] * std::log(mu[y]);
        stilde += mu[y] * scores[y];
      }
      mid.entropy_term = mu_hat;
      mid.weighted_score = stilde;
      mid.mean_exp_score = sum_exp_others / Real(m);
      mid.mean_score = sum_s / Real(m);
      mid.delta = Real(m) * a / q;

      if (x_t == x0) {
        const Real rho = a + q * mu[x0];
        const Real ratio = q / rho;
        const Real t3 =
            ratio * ((Real(1) - mu[x0]) * (std::log(ratio) - Real(1)) +
                     (mu_hat - mu[x0] * std::log(mu[x0])));
        const Real bracket = sum_exp_others - ratio * stilde + t3;
        return beta_factor * mu[x0] * bracket;
      }
      const Real rho = q * mu[x_t];
      const Real er0 = (a + q * mu[x0]) / rho;
      const Real log_mu_xt = std::log(mu[x_t]);
      const Real t3 =
          detail::entropy_piece(er0) +
          (Real(1) / mu[x_t]) *
              ((mu_hat - mu[x0] * std::log(mu[x0]) - mu[x_t] * log_mu_xt) -
               (Real(1) - mu[x0] - mu[x_t]) * (log_mu_xt + Real(1)));
      const Real bracket =
          sum_exp_others - (a * scores[x0] + q * stilde) / rho + t3;
      return beta_factor * mu[x_t] * bracket;
    }
  }
  throw ConfigError("unknown loss setting");
}

}  // namespace prefergrow::losses
