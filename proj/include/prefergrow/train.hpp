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
#include <cstdint>
#include <string>
#include <vector>

#include "prefergrow/errors.hpp"
#include "prefergrow/evaldata.hpp"
#include "prefergrow/losses.hpp"
#include "prefergrow/process.hpp"
#include "prefergrow/rng.hpp"
#include "prefergrow/sampler.hpp"
#include "prefergrow/schedule.hpp"
#include "prefergrow/scorenet.hpp"

namespace prefergrow::train {

struct TrainConfig {
  losses::SettingKind setting = losses::SettingKind::pairwise();
  double nonpref_prob = 0.1;  // probability of replacing u by the
                              // non-preference user during training
  int batch_size = 256;
  double lr = 1e-3;
  int max_epochs = 200;
  int patience = 20;
  std::uint64_t seed = 100;
  schedule::Schedule sched = schedule::Schedule::geometric(1e-3, 10.0, 20);
  std::vector<int> eval_ks = {5, 10};
  bool include_beta = true;
  int threads = 1;
  int dim = 64;
  int blocks = 1;
  double eval_guidance = 0.0;  // guidance used for validation metrics

  void validate() const {
    if (!(nonpref_prob >= 0.0 && nonpref_prob <= 1.0))
      throw ConfigError("nonpref_prob must lie in [0, 1]");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (max_epochs < 1) throw ConfigError("max_epochs must be positive");
    if (patience < 1) throw ConfigError("patience must be positive");
    if (!(lr > 0)) throw ConfigError("learning rate must be positive");
  }
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0;
  double val_hr5 = 0, val_ndcg5 = 0, val_hr10 = 0, val_ndcg10 = 0;
  double clamp_rate = 0;
  long long phi_examples = 0;      // examples trained through the
                                   // non-preference branch
  long long history_examples = 0;  // examples that read their history
};

struct TrainResult {
  scorenet::ScoreField<double> field;  // best validation checkpoint
  std::vector<EpochLog> history;
  std::vector<double> step_losses;  // per optimizer step, for trend checks
  int best_epoch = 0;
  double best_metric = 0;
};

inline std::uint64_t epoch_eval_seed(std::uint64_t seed, int epoch) {
  return splitmix64(seed + 0x517CC1B727220A95ULL * (std::uint64_t(epoch) + 1));
}

/// Batched score-entropy training with non-preference-user dropout and
/// early stopping on the combined validation metric
/// HR@5 + HR@10 + NDCG@5 + NDCG@10.
inline TrainResult train(const evaldata::InteractionDataset& dataset,
                         const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (dataset.sequences.empty() || dataset.train_split.empty())
    throw DataError("training needs a non-empty train split");

  scorenet::InitConfig init_cfg;
  init_cfg.num_items = dataset.num_items;
  init_cfg.dim = cfg.dim;
  init_cfg.steps = cfg.sched.steps;
  init_cfg.blocks = cfg.blocks;
  init_cfg.setting = cfg.setting;
  auto field = scorenet::init<double>(init_cfg, rng);

  scorenet::LossConfig<double> loss_cfg;
  loss_cfg.include_beta = cfg.include_beta;
  loss_cfg.sched = cfg.sched;

  scorenet::AdamState<double> adam;
  sampler::SamplerConfig eval_sampler;
  eval_sampler.steps = cfg.sched.steps;
  eval_sampler.guidance = cfg.eval_guidance;

  const bool adaptive = cfg.setting.kind == losses::SettingKind::Kind::Adaptive;
  auto target = field.current_target();

  TrainResult result;
  result.field = field;
  double best_metric = -1.0;
  int best_epoch = -1;
  int epochs_since_best = 0;

  std::vector<int> order(dataset.train_split);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    // Fisher-Yates shuffle driven by the single training stream.
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(0, i)]);

    EpochLog log;
    log.epoch = epoch;
    double loss_sum = 0;
    long long example_count = 0;

    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      if (adaptive) target = field.current_target();

      std::vector<scorenet::Example> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const auto& seq = dataset.sequences[order[i]];
        scorenet::Example ex;
        ex.ctx.history = seq.history;
        ex.x0 = seq.target;
        ex.t_index = rng.uniform_int(1, cfg.sched.steps);
        ex.ctx.is_nonpref = rng.bernoulli(cfg.nonpref_prob);
        const double alpha =
            schedule::alpha(cfg.sched, cfg.sched.grid_time(ex.t_index));
        ex.x_t = process::sample_forward(ex.x0, alpha, target, rng);
        if (ex.ctx.is_nonpref)
          ++log.phi_examples;
        else
          ++log.history_examples;
        batch.push_back(std::move(ex));
      }

      const auto grads = scorenet::gradients(field, batch, loss_cfg, cfg.threads);
      if (!std::isfinite(grads.mean_loss) || grads.mean_loss > 1e6)
        throw NumericalError("training diverged at epoch " +
                             std::to_string(epoch));
      scorenet::adam_step(field, grads, cfg.lr, adam);
      result.step_losses.push_back(grads.mean_loss);
      loss_sum += grads.mean_loss * static_cast<double>(batch.size());
      example_count += static_cast<long long>(batch.size());
    }
    log.train_loss = loss_sum / static_cast<double>(example_count);

    const auto eval = evaldata::evaluate(
        field, dataset, dataset.valid_split, eval_sampler, cfg.sched,
        std::vector<int>{5, 10}, epoch_eval_seed(cfg.seed, epoch), cfg.threads);
    log.val_hr5 = eval.metrics[0].hr;
    log.val_ndcg5 = eval.metrics[0].ndcg;
    log.val_hr10 = eval.metrics[1].hr;
    log.val_ndcg10 = eval.metrics[1].ndcg;
    log.clamp_rate =
        eval.reverse_rows > 0
            ? static_cast<double>(eval.clamped_entries) /
                  static_cast<double>(eval.reverse_rows)
            : 0.0;
    result.history.push_back(log);

    const double metric =
        log.val_hr5 + log.val_hr10 + log.val_ndcg5 + log.val_ndcg10;
    if (metric > best_metric) {
      best_metric = metric;
      best_epoch = epoch;
      result.field = field;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (epochs_since_best >= cfg.patience) break;
    }
  }

  result.best_epoch = best_epoch;
  result.best_metric = best_metric;
  return result;
}

}  // namespace prefergrow::train
