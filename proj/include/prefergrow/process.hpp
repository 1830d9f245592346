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

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "prefergrow/errors.hpp"
#include "prefergrow/fading.hpp"
#include "prefergrow/rng.hpp"

// Test-only fault hook: flips a sign in the forward transition so the
// Chapman-Kolmogorov verification suite must fail. Never define in builds
// meant for use.
#ifdef PREFERGROW_FAULT_CHAPMAN
#define PREFERGROW_CHAPMAN_SIGN (-1.0)
#else
#define PREFERGROW_CHAPMAN_SIGN (1.0)
#endif

namespace prefergrow::process {

using fading::FadingMatrix;
using fading::NonPreferenceState;

enum class Direction { Forward, Inverse };

/// Structured transition kernel ratio * I + (1 - ratio) * E. Forward kernels
/// have ratio = alpha_t / alpha_s in (0, 1]; inverse kernels have
/// ratio = alpha_s / alpha_t >= 1 and negative off-diagonal entries.
/// Holds a non-owning reference to the fading matrix.
template <typename Real>
struct TransitionMatrix {
  Real alpha_ratio = 1;
  const FadingMatrix<Real>* fading = nullptr;
  Direction direction = Direction::Forward;

  int size() const { return fading->corpus_size; }
};

/// Structured rate kernel beta * (E - I); columns sum to zero.
template <typename Real>
struct RateMatrix {
  Real beta_t = 0;
  const FadingMatrix<Real>* fading = nullptr;

  int size() const { return fading->corpus_size; }
};

namespace detail {
template <typename Real>
void require_process_usable(const FadingMatrix<Real>& fm) {
  if (!fm.covers_all_columns())
    throw DomainError(
        "fading matrix with uncovered columns cannot drive the diffusion "
        "process (column sums must equal one)");
}
}  // namespace detail

template <typename Real>
TransitionMatrix<Real> forward_transition(const FadingMatrix<Real>& fm,
                                          Real alpha_s, Real alpha_t) {
  detail::require_process_usable(fm);
  if (!(alpha_t > 0) || !(alpha_s <= 1))
    throw DomainError("retention probabilities must lie in (0, 1]");
  if (alpha_t > alpha_s)
    throw OrderingError("forward transition needs alpha_t <= alpha_s");
  TransitionMatrix<Real> out;
  out.alpha_ratio = Real(PREFERGROW_CHAPMAN_SIGN) * alpha_t / alpha_s;
  out.fading = &fm;
  out.direction = Direction::Forward;
  return out;
}

template <typename Real>
TransitionMatrix<Real> inverse_transition(const FadingMatrix<Real>& fm,
                                          Real alpha_s, Real alpha_t) {
  detail::require_process_usable(fm);
  if (!(alpha_t > 0) || !(alpha_s <= 1))
    throw DomainError("retention probabilities must lie in (0, 1]");
  if (alpha_t > alpha_s)
    throw OrderingError("inverse transition needs alpha_t <= alpha_s");
  TransitionMatrix<Real> out;
  out.alpha_ratio = alpha_s / alpha_t;
  out.fading = &fm;
  out.direction = Direction::Inverse;
  return out;
}

template <typename Real>
RateMatrix<Real> rate_matrix(const FadingMatrix<Real>& fm, Real beta_t) {
  detail::require_process_usable(fm);
  if (!(beta_t > 0)) throw DomainError("rate must be positive");
  return RateMatrix<Real>{beta_t, &fm};
}

/// Kernel-vector product in O(M [+ r]).
template <typename Real>
std::vector<Real> apply(const TransitionMatrix<Real>& tm,
                        const std::vector<Real>& v) {
  std::vector<Real> out = fading::apply(*tm.fading, v);
  const Real ratio = tm.alpha_ratio;
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = ratio * v[i] + (Real(1) - ratio) * out[i];
  return out;
}

template <typename Real>
std::vector<Real> apply(const RateMatrix<Real>& rm, const std::vector<Real>& v) {
  std::vector<Real> out = fading::apply(*rm.fading, v);
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = rm.beta_t * (out[i] - v[i]);
  return out;
}

template <typename Real>
Eigen::MatrixXd debug_dense(const TransitionMatrix<Real>& tm) {
  const Eigen::MatrixXd dense_fading = fading::debug_dense(*tm.fading);
  const double ratio = static_cast<double>(tm.alpha_ratio);
  return ratio * Eigen::MatrixXd::Identity(tm.size(), tm.size()) +
         (1.0 - ratio) * dense_fading;
}

template <typename Real>
Eigen::MatrixXd debug_dense(const RateMatrix<Real>& rm) {
  const Eigen::MatrixXd dense_fading = fading::debug_dense(*rm.fading);
  return static_cast<double>(rm.beta_t) *
         (dense_fading - Eigen::MatrixXd::Identity(rm.size(), rm.size()));
}

/// One forward draw: keep x0 with probability alpha_t, otherwise replace by
/// a sample from the normalized non-preference state.
template <typename Real>
int sample_forward(int x0, Real alpha_t, const NonPreferenceState<Real>& target,
                   Rng& rng) {
  if (x0 < 0 || x0 >= target.size())
    throw DimensionError("item index out of range");
  if (rng.uniform() < static_cast<double>(alpha_t)) return x0;
  return rng.categorical(target.weights);
}

/// Log of the fading-induced ratio between reaching y and reaching x_t from
/// x0. Returns -infinity when y is unreachable; throws when x_t itself is
/// unreachable (the ratio is then undefined).
template <typename Real>
Real reference_ratio(int x0, int x_t, int y, Real alpha_t,
                     const FadingMatrix<Real>& fm) {
  const int m = fm.corpus_size;
  if (x0 < 0 || x0 >= m || x_t < 0 || x_t >= m || y < 0 || y >= m)
    throw DimensionError("item index out of range");
  const std::vector<Real> from_x0 = fading::column(fm, x0);
  const Real one_minus = Real(1) - alpha_t;
  const Real denom = (x_t == x0 ? alpha_t : Real(0)) + one_minus * from_x0[x_t];
  if (!(denom > 0))
    throw UnreachableState("x_t has zero probability under the fading kernel");
  const Real numer = (y == x0 ? alpha_t : Real(0)) + one_minus * from_x0[y];
  if (numer <= 0) return -std::numeric_limits<Real>::infinity();
  return std::log(numer) - std::log(denom);
}

/// Result of one exact reverse-growing step.
template <typename Real>
struct ReverseStep {
  std::vector<Real> probabilities;  // clamped and renormalized
  Real pre_clamp_sum = 0;           // equals 1 when the ratios are exact
  int clamped_entries = 0;
};

/// Reverse transition row for state x_t, factorized in O(M [+ r]):
///   val(y) = p_fwd(x_t | y) * [ rho * e^{ratio_y} + (1 - rho) * (E e^ratio)(y) ]
/// with rho = alpha_s / alpha_t. ratios[z] must hold
/// log p_t(z | u) - log p_t(x_t | u). Negative entries (possible with
/// imperfect learned ratios, since the inverse kernel has negative
/// off-diagonals) are clamped to zero and the row renormalized.
template <typename Real>
ReverseStep<Real> reverse_transition_exact(int x_t, Real alpha_s, Real alpha_t,
                                           const FadingMatrix<Real>& fm,
                                           const std::vector<Real>& ratios) {
  detail::require_process_usable(fm);
  const int m = fm.corpus_size;
  if (x_t < 0 || x_t >= m) throw DimensionError("item index out of range");
  if (static_cast<int>(ratios.size()) != m)
    throw DimensionError("ratio vector length differs from corpus size");
  if (!(alpha_t > 0) || alpha_s < alpha_t)
    throw OrderingError("reverse step needs alpha_s >= alpha_t > 0");

  std::vector<Real> exp_ratio(m);
  for (int z = 0; z < m; ++z) exp_ratio[z] = std::exp(ratios[z]);

  const std::vector<Real> faded = fading::apply(fm, exp_ratio);
  const std::vector<Real> row_xt = fading::row(fm, x_t);
  const Real inv_ratio = alpha_s / alpha_t;
  const Real fwd_ratio = alpha_t / alpha_s;

  ReverseStep<Real> step;
  step.probabilities.assign(m, Real(0));
  Real sum = 0;
  Real positive_sum = 0;
  for (int y = 0; y < m; ++y) {
    const Real fwd = (y == x_t ? fwd_ratio : Real(0)) +
                     (Real(1) - fwd_ratio) * row_xt[y];
    const Real bracket =
        inv_ratio * exp_ratio[y] + (Real(1) - inv_ratio) * faded[y];
    const Real val = fwd * bracket;
    sum += val;
    if (val < 0) {
      ++step.clamped_entries;
    } else {
      step.probabilities[y] = val;
      positive_sum += val;
    }
  }
  step.pre_clamp_sum = sum;
  if (!(positive_sum > 0))
    throw DegenerateReverse("reverse row vanished after clamping");
  for (Real& p : step.probabilities) p /= positive_sum;
  return step;
}

/// Dense reverse-time rate matrix at marginal p_s (verification oracle):
///   R = Q^T .* [p (1/p)^T] - diag of (Q * [p (1/p)^T]).
template <typename Real>
Eigen::MatrixXd reverse_rate_exact(Real alpha_s, Real beta_s,
                                   const FadingMatrix<Real>& fm,
                                   const std::vector<Real>& p_s) {
  (void)alpha_s;
  const int m = fm.corpus_size;
  if (static_cast<int>(p_s.size()) != m)
    throw DimensionError("marginal length differs from corpus size");
  for (Real p : p_s)
    if (!(p > 0)) throw DomainError("marginal must be strictly positive");

  const Eigen::MatrixXd rate = debug_dense(rate_matrix(fm, beta_s));
  Eigen::MatrixXd out(m, m);
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y)
      out(x, y) = rate(y, x) * static_cast<double>(p_s[x] / p_s[y]);
  for (int x = 0; x < m; ++x) {
    double diag = 0;
    for (int l = 0; l < m; ++l)
      diag += rate(x, l) * static_cast<double>(p_s[l] / p_s[x]);
    out(x, x) -= diag;
  }
  return out;
}

/// Dense reverse transition kernel by Bayes (verification oracle):
///   P_rev(y, x) = p_s(y) * P_fwd(x, y) / p_t(x).
template <typename Real>
Eigen::MatrixXd reverse_dense_exact(Real alpha_s, Real alpha_t,
                                    const FadingMatrix<Real>& fm,
                                    const std::vector<Real>& p_s,
                                    const std::vector<Real>& p_t) {
  const int m = fm.corpus_size;
  const Eigen::MatrixXd fwd = debug_dense(forward_transition(fm, alpha_s, alpha_t));
  Eigen::MatrixXd out(m, m);
  for (int y = 0; y < m; ++y)
    for (int x = 0; x < m; ++x)
      out(y, x) = static_cast<double>(p_s[y]) * fwd(x, y) /
                  static_cast<double>(p_t[x]);
  return out;
}

/// Marginal at retention alpha_t for a point mass at x0, or for an arbitrary
/// initial distribution p0.
template <typename Real>
std::vector<Real> marginal_from_point(int x0, Real alpha_t,
                                      const FadingMatrix<Real>& fm) {
  std::vector<Real> col = fading::column(fm, x0);
  for (Real& c : col) c *= (Real(1) - alpha_t);
  col[x0] += alpha_t;
  return col;
}

template <typename Real>
std::vector<Real> marginal(const std::vector<Real>& p0, Real alpha_t,
                           const FadingMatrix<Real>& fm) {
  std::vector<Real> out = fading::apply(fm, p0);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = alpha_t * p0[i] + (Real(1) - alpha_t) * out[i];
  return out;
}

}  // namespace prefergrow::process
