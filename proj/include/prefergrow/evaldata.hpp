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

#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "prefergrow/errors.hpp"
#include "prefergrow/rng.hpp"
#include "prefergrow/sampler.hpp"
#include "prefergrow/scorenet.hpp"

namespace prefergrow::evaldata {

/// User histories with a next-item target, split 8:1:1 in file order
/// (file order is chronological by contract).
struct InteractionDataset {
  struct Sequence {
    std::vector<int> history;  // oldest first, at most 10 entries
    int target = 0;
  };

  int num_items = 0;
  std::vector<Sequence> sequences;
  std::vector<int> train_split, valid_split, test_split;

  void build_splits() {
    const int n = static_cast<int>(sequences.size());
    const int train_end = static_cast<int>(std::floor(0.8 * n));
    const int valid_end = static_cast<int>(std::floor(0.9 * n));
    train_split.clear();
    valid_split.clear();
    test_split.clear();
    for (int i = 0; i < train_end; ++i) train_split.push_back(i);
    for (int i = train_end; i < valid_end; ++i) valid_split.push_back(i);
    for (int i = valid_end; i < n; ++i) test_split.push_back(i);
  }
};

/// Text format: first line `N=<corpus_size>`, then one sequence per line as
/// space-separated indices; the last token is the target, the preceding
/// ones (1 to 10 of them) the history, oldest first.
inline InteractionDataset load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open dataset: " + path);

  InteractionDataset ds;
  std::string line;
  int line_number = 0;

  if (!std::getline(is, line)) throw ParseError("empty dataset file: " + path);
  ++line_number;
  if (line.rfind("N=", 0) != 0)
    throw ParseError("line 1: expected a corpus header of the form N=<count>");
  try {
    std::size_t used = 0;
    ds.num_items = std::stoi(line.substr(2), &used);
    if (used != line.size() - 2) throw std::invalid_argument("trailing junk");
  } catch (const std::exception&) {
    throw ParseError("line 1: malformed corpus size '" + line + "'");
  }
  if (ds.num_items < 1) throw ParseError("line 1: corpus size must be positive");

  while (std::getline(is, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<int> tokens;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        const int value = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("trailing junk");
        tokens.push_back(value);
      } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_number) +
                         ": malformed token '" + tok + "'");
      }
    }
    if (tokens.size() < 2)
      throw ParseError("line " + std::to_string(line_number) +
                       ": a sequence needs at least a history item and a target");
    if (tokens.size() > scorenet::kMaxHistory + 1)
      throw ParseError("line " + std::to_string(line_number) +
                       ": history exceeds 10 items");
    for (int value : tokens)
      if (value < 0 || value >= ds.num_items)
        throw RangeError("line " + std::to_string(line_number) + ": index " +
                         std::to_string(value) + " outside the corpus");
    InteractionDataset::Sequence seq;
    seq.target = tokens.back();
    tokens.pop_back();
    seq.history = std::move(tokens);
    ds.sequences.push_back(std::move(seq));
  }
  if (ds.sequences.empty()) throw DataError("dataset has no sequences: " + path);
  ds.build_splits();
  return ds;
}

inline void save(const InteractionDataset& ds, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open dataset for writing: " + path);
  os << "N=" << ds.num_items << "\n";
  for (const auto& seq : ds.sequences) {
    for (int idx : seq.history) os << idx << ' ';
    os << seq.target << "\n";
  }
  if (!os) throw DataError("dataset write failed: " + path);
}

/// Synthetic benchmark: consecutive runs modulo n with the next item as the
/// target. With zero noise the target rule is deterministic, so near-perfect
/// top-1 prediction is attainable.
inline InteractionDataset synth_cycle(int num_items, int count, double noise,
                                      Rng& rng) {
  if (num_items < 3) throw ConfigError("synthetic corpus needs at least 3 items");
  if (count < 1) throw ConfigError("sequence count must be positive");
  if (!(noise >= 0.0 && noise < 1.0))
    throw ConfigError("noise must lie in [0, 1)");

  InteractionDataset ds;
  ds.num_items = num_items;
  ds.sequences.reserve(count);
  for (int i = 0; i < count; ++i) {
    InteractionDataset::Sequence seq;
    const int length = rng.uniform_int(4, 10);
    const int start = rng.uniform_int(0, num_items - 1);
    for (int k = 0; k < length; ++k)
      seq.history.push_back((start + k) % num_items);
    const int ruled = (seq.history.back() + 1) % num_items;
    seq.target = rng.bernoulli(noise) ? rng.uniform_int(0, num_items - 1) : ruled;
    ds.sequences.push_back(std::move(seq));
  }
  ds.build_splits();
  return ds;
}

/// Hit rate at cutoff K for a single 1-based target rank.
inline double hr_at_k(int rank, int k) {
  if (k < 1) throw ConfigError("cutoff must be positive");
  if (rank < 1) throw DomainError("ranks are 1-based");
  return rank <= k ? 1.0 : 0.0;
}

/// Single-target NDCG at cutoff K: the ideal ranking has gain 1 at rank 1,
/// so the normalizer is 1.
inline double ndcg_at_k(int rank, int k) {
  if (k < 1) throw ConfigError("cutoff must be positive");
  if (rank < 1) throw DomainError("ranks are 1-based");
  return rank <= k ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0;
}

struct MetricRow {
  int k = 0;
  double hr = 0;
  double ndcg = 0;
};

/// Averages HR/NDCG over per-user target ranks, one row per cutoff.
inline std::vector<MetricRow> metrics_from_ranks(const std::vector<int>& ranks,
                                                 const std::vector<int>& ks) {
  if (ranks.empty()) throw DataError("no ranks to aggregate");
  std::vector<MetricRow> rows;
  for (int k : ks) {
    MetricRow row;
    row.k = k;
    for (int rank : ranks) {
      row.hr += hr_at_k(rank, k);
      row.ndcg += ndcg_at_k(rank, k);
    }
    row.hr /= static_cast<double>(ranks.size());
    row.ndcg /= static_cast<double>(ranks.size());
    rows.push_back(row);
  }
  return rows;
}

/// 1-based rank of `target` among the real items under descending scores,
/// ties broken by ascending item index.
template <typename Real>
int rank_of_target(const std::vector<Real>& distribution, int target,
                   int num_real_items) {
  int rank = 1;
  const Real p_target = distribution[target];
  for (int i = 0; i < num_real_items; ++i) {
    if (i == target) continue;
    if (distribution[i] > p_target || (distribution[i] == p_target && i < target))
      ++rank;
  }
  return rank;
}

template <typename Real>
struct EvaluationResult {
  std::vector<MetricRow> metrics;
  std::vector<int> ranks;             // per user, split order
  long long clamped_entries = 0;
  long long reverse_rows = 0;
};

/// All-rank evaluation of one split: grows a preference distribution per
/// user and ranks the held-out target against every real item. Users get
/// independent seed streams keyed by their sequence index, so the result
/// does not depend on processing order or thread count.
template <typename Real>
EvaluationResult<Real> evaluate(const scorenet::ScoreField<Real>& field,
                                const InteractionDataset& dataset,
                                const std::vector<int>& split,
                                const sampler::SamplerConfig& cfg,
                                const schedule::Schedule& sched,
                                const std::vector<int>& ks,
                                std::uint64_t seed, int threads = 1) {
  if (split.empty()) throw DataError("empty evaluation split");
  if (dataset.num_items != field.num_items)
    throw ConfigError("dataset corpus differs from the model corpus");

  const auto target_state = field.current_target();
  const auto fm = fading::build_rank1(target_state);

  EvaluationResult<Real> result;
  result.ranks.assign(split.size(), 0);
  std::vector<long long> clamped(split.size(), 0), rows(split.size(), 0);

  const auto run_user = [&](std::size_t pos) {
    const auto& seq = dataset.sequences[split[pos]];
    scorenet::UserContext ctx{seq.history, false};
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(split[pos]));
    const auto gen =
        sampler::generate(field, ctx, cfg, sched, target_state, fm, rng);
    result.ranks[pos] =
        rank_of_target(gen.distribution, seq.target, field.num_items);
    clamped[pos] = gen.clamped_entries;
    rows[pos] = gen.reverse_rows;
  };

  if (threads <= 1) {
    for (std::size_t pos = 0; pos < split.size(); ++pos) run_user(pos);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    const int workers = std::min<std::size_t>(threads, split.size());
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t pos = next.fetch_add(1);
          if (pos >= split.size()) return;
          run_user(pos);
        }
      });
    for (auto& th : pool) th.join();
  }

  for (std::size_t pos = 0; pos < split.size(); ++pos) {
    result.clamped_entries += clamped[pos];
    result.reverse_rows += rows[pos];
  }
  result.metrics = metrics_from_ranks(result.ranks, ks);
  return result;
}

}  // namespace prefergrow::evaldata
