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
#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "prefergrow/errors.hpp"

namespace prefergrow::fading {

/// Target distribution the fading process converges to. Weights are kept
/// unnormalized with a cached sum; normalization happens on read.
template <typename Real>
struct NonPreferenceState {
  std::vector<Real> weights;
  Real total = 0;
  bool has_virtual_item = false;

  NonPreferenceState() = default;

  NonPreferenceState(std::vector<Real> w, bool with_virtual_item)
      : weights(std::move(w)), has_virtual_item(with_virtual_item) {
    total = 0;
    for (Real v : weights) {
      if (v < 0) throw InvalidTarget("negative entry in non-preference state");
      total += v;
    }
    if (weights.empty() || total <= 0)
      throw InvalidTarget("non-preference state must have positive mass");
  }

  int size() const { return static_cast<int>(weights.size()); }

  /// Index of the virtual hard-negative item (last index when enabled).
  int virtual_index() const { return has_virtual_item ? size() - 1 : -1; }

  Real normalized(int i) const { return weights[i] / total; }

  std::vector<Real> normalized_vector() const {
    std::vector<Real> out(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) out[i] = weights[i] / total;
    return out;
  }

  /// Uniform state over n real items.
  static NonPreferenceState uniform(int n) {
    return NonPreferenceState(std::vector<Real>(n, Real(1)), false);
  }

  /// Point mass on the virtual item appended after n real items.
  static NonPreferenceState virtual_point_mass(int n) {
    std::vector<Real> w(n + 1, Real(0));
    w[n] = Real(1);
    return NonPreferenceState(std::move(w), true);
  }

  /// Mixture of uniform-over-real-items (weight lambda) and the virtual item
  /// (weight 1 - lambda), over n + 1 states.
  static NonPreferenceState hybrid(int n, Real lambda) {
    if (!(lambda > 0 && lambda < 1))
      throw InvalidTarget("hybrid mixing coefficient must lie in (0,1)");
    std::vector<Real> w(n + 1, lambda / Real(n));
    w[n] = Real(1) - lambda;
    return NonPreferenceState(std::move(w), true);
  }
};

enum class FadingKind { Rank1, RankR };

/// Structured idempotent fading matrix. Rank-1 instances replicate a single
/// target column; rank-r instances act blockwise on disjoint clusters.
/// The dense form is never materialized outside debug_dense().
template <typename Real>
struct FadingMatrix {
  struct Cluster {
    std::vector<int> indices;   // support, ascending
    std::vector<Real> weights;  // strictly positive, aligned with indices
    Real total = 0;
  };

  FadingKind kind = FadingKind::Rank1;
  NonPreferenceState<Real> rank1_target;
  std::vector<Cluster> clusters;
  std::vector<int> cluster_of;  // per index; -1 when uncovered (RankR only)
  int corpus_size = 0;

  int rank() const {
    return kind == FadingKind::Rank1 ? 1 : static_cast<int>(clusters.size());
  }

  /// True when every column of the implied dense matrix is nonzero. The
  /// diffusion process requires this (column sums must equal one).
  bool covers_all_columns() const {
    if (kind == FadingKind::Rank1) return true;
    return std::none_of(cluster_of.begin(), cluster_of.end(),
                        [](int c) { return c < 0; });
  }
};

template <typename Real>
FadingMatrix<Real> build_rank1(NonPreferenceState<Real> target) {
  FadingMatrix<Real> out;
  out.kind = FadingKind::Rank1;
  out.corpus_size = target.size();
  out.rank1_target = std::move(target);
  return out;
}

/// Sum of disjoint-support rank-1 blocks. Each target must be strictly
/// positive exactly on its cluster. Uncovered indices are allowed here (the
/// corresponding columns are zero) but such matrices are rejected by the
/// diffusion process, which needs column-stochasticity.
template <typename Real>
FadingMatrix<Real> build_rankr(int corpus_size,
                               const std::vector<std::vector<int>>& clusters,
                               const std::vector<std::vector<Real>>& targets) {
  if (clusters.size() != targets.size())
    throw DimensionError("clusters and targets differ in count");
  if (clusters.empty()) throw InvalidTarget("at least one cluster required");

  FadingMatrix<Real> out;
  out.kind = FadingKind::RankR;
  out.corpus_size = corpus_size;
  out.cluster_of.assign(corpus_size, -1);

  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto& support = clusters[c];
    const auto& target = targets[c];
    if (static_cast<int>(target.size()) != corpus_size)
      throw DimensionError("target vector length differs from corpus size");
    if (support.empty()) throw InvalidTarget("empty cluster");

    typename FadingMatrix<Real>::Cluster cluster;
    for (int idx : support) {
      if (idx < 0 || idx >= corpus_size)
        throw DimensionError("cluster index out of range");
      if (out.cluster_of[idx] != -1)
        throw OverlappingSupports("index " + std::to_string(idx) +
                                  " appears in two clusters");
      out.cluster_of[idx] = static_cast<int>(c);
    }
    cluster.indices = support;
    std::sort(cluster.indices.begin(), cluster.indices.end());

    for (int i = 0; i < corpus_size; ++i) {
      const bool in_support = out.cluster_of[i] == static_cast<int>(c);
      if (in_support) {
        if (!(target[i] > 0))
          throw SupportMismatch("target not strictly positive on its cluster");
      } else if (target[i] != 0) {
        throw SupportMismatch("target has mass outside its cluster");
      }
    }
    cluster.weights.reserve(cluster.indices.size());
    cluster.total = 0;
    for (int idx : cluster.indices) {
      cluster.weights.push_back(target[idx]);
      cluster.total += target[idx];
    }
    out.clusters.push_back(std::move(cluster));
  }
  return out;
}

/// E * v without forming E. O(M) for rank-1, O(M + r) for rank-r.
template <typename Real>
std::vector<Real> apply(const FadingMatrix<Real>& fm, const std::vector<Real>& v) {
  if (static_cast<int>(v.size()) != fm.corpus_size)
    throw DimensionError("vector length differs from corpus size");
  std::vector<Real> out(v.size(), Real(0));
  if (fm.kind == FadingKind::Rank1) {
    Real sum = 0;
    for (Real x : v) sum += x;
    const Real scale = sum / fm.rank1_target.total;
    for (int i = 0; i < fm.corpus_size; ++i)
      out[i] = fm.rank1_target.weights[i] * scale;
    return out;
  }
  for (const auto& cluster : fm.clusters) {
    Real sum = 0;
    for (int idx : cluster.indices) sum += v[idx];
    const Real scale = sum / cluster.total;
    for (std::size_t k = 0; k < cluster.indices.size(); ++k)
      out[cluster.indices[k]] = cluster.weights[k] * scale;
  }
  return out;
}

/// Column j of the implied dense matrix.
template <typename Real>
std::vector<Real> column(const FadingMatrix<Real>& fm, int j) {
  if (j < 0 || j >= fm.corpus_size) throw DimensionError("column index out of range");
  std::vector<Real> out(fm.corpus_size, Real(0));
  if (fm.kind == FadingKind::Rank1) {
    for (int i = 0; i < fm.corpus_size; ++i)
      out[i] = fm.rank1_target.normalized(i);
    return out;
  }
  const int c = fm.cluster_of[j];
  if (c < 0) return out;  // uncovered column is zero
  const auto& cluster = fm.clusters[c];
  for (std::size_t k = 0; k < cluster.indices.size(); ++k)
    out[cluster.indices[k]] = cluster.weights[k] / cluster.total;
  return out;
}

/// Row i of the implied dense matrix, in O(M). The reverse-growing step
/// needs whole rows; going through column() per entry would be quadratic.
template <typename Real>
std::vector<Real> row(const FadingMatrix<Real>& fm, int i) {
  if (i < 0 || i >= fm.corpus_size) throw DimensionError("row index out of range");
  std::vector<Real> out(fm.corpus_size, Real(0));
  if (fm.kind == FadingKind::Rank1) {
    const Real value = fm.rank1_target.normalized(i);
    std::fill(out.begin(), out.end(), value);
    return out;
  }
  const int c = fm.cluster_of[i];
  if (c < 0) return out;  // i outside every support: row is zero
  const auto& cluster = fm.clusters[c];
  Real value = 0;
  for (std::size_t k = 0; k < cluster.indices.size(); ++k)
    if (cluster.indices[k] == i) value = cluster.weights[k] / cluster.total;
  for (int idx : cluster.indices) out[idx] = value;
  return out;
}

/// Single entry E(i, j).
template <typename Real>
Real entry(const FadingMatrix<Real>& fm, int i, int j) {
  if (i < 0 || i >= fm.corpus_size || j < 0 || j >= fm.corpus_size)
    throw DimensionError("entry index out of range");
  if (fm.kind == FadingKind::Rank1) return fm.rank1_target.normalized(i);
  const int c = fm.cluster_of[j];
  if (c < 0 || fm.cluster_of[i] != c) return Real(0);
  const auto& cluster = fm.clusters[c];
  for (std::size_t k = 0; k < cluster.indices.size(); ++k)
    if (cluster.indices[k] == i) return cluster.weights[k] / cluster.total;
  return Real(0);
}

inline constexpr int kDebugDenseLimit = 256;

/// Dense materialization for verification oracles only.
template <typename Real>
Eigen::MatrixXd debug_dense(const FadingMatrix<Real>& fm) {
  if (fm.corpus_size > kDebugDenseLimit)
    throw DomainError("debug_dense is gated to corpus sizes <= 256");
  Eigen::MatrixXd dense(fm.corpus_size, fm.corpus_size);
  for (int j = 0; j < fm.corpus_size; ++j) {
    const auto col = column(fm, j);
    for (int i = 0; i < fm.corpus_size; ++i)
      dense(i, j) = static_cast<double>(col[i]);
  }
  return dense;
}

}  // namespace prefergrow::fading
