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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "prefergrow/autodiff.hpp"
#include "prefergrow/errors.hpp"
#include "prefergrow/losses.hpp"
#include "prefergrow/rng.hpp"
#include "prefergrow/schedule.hpp"

namespace prefergrow::scorenet {

using losses::SettingKind;

/// Interaction history of one user. An empty history is only valid for the
/// non-preference user, which is encoded by a learned embedding instead.
struct UserContext {
  std::vector<int> history;  // at most kMaxHistory item indices, oldest first
  bool is_nonpref = false;

  static UserContext nonpref() { return UserContext{{}, true}; }
};

inline constexpr int kMaxHistory = 10;

template <typename Real>
struct ScoreField {
  using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

  int num_items = 0;        // real items
  bool with_virtual = false;
  int corpus = 0;           // num_items plus the virtual item when enabled
  int steps = 20;           // timestep grid size
  int dim = 64;
  int blocks = 1;
  SettingKind setting = SettingKind::pairwise();

  std::vector<Mat> params;
  std::vector<std::string> param_names;

  int item_emb = -1, time_emb = -1, phi = -1;
  struct BlockIdx {
    int wq, wk, wv, wo, ff_w1, ff_b1, ff_w2, ff_b2;
  };
  std::vector<BlockIdx> encoder;
  int head_w1 = -1, head_b1 = -1, head_w2 = -1, head_b2 = -1;
  int theta = -1;

  int virtual_index() const { return with_virtual ? corpus - 1 : -1; }

  /// Arithmetic width of the parameters (64 for double, 32 for float).
  static constexpr int precision_bits() { return sizeof(Real) * 8; }

  /// Normalized non-preference state implied by the current parameters:
  /// softmax(theta) for the adaptive setting, the fixed state otherwise.
  fading::NonPreferenceState<Real> current_target() const {
    if (setting.kind != SettingKind::Kind::Adaptive)
      return setting.template initial_state<Real>(num_items);
    std::vector<Real> w(corpus);
    const Mat& th = params[theta];
    Real mx = th(0, 0);
    for (int i = 1; i < corpus; ++i) mx = std::max(mx, th(i, 0));
    for (int i = 0; i < corpus; ++i) w[i] = std::exp(th(i, 0) - mx);
    return fading::NonPreferenceState<Real>(std::move(w), with_virtual);
  }

  bool finite() const {
    for (const Mat& p : params)
      if (!p.allFinite()) return false;
    return true;
  }
};

struct InitConfig {
  int num_items = 0;
  int dim = 64;
  int steps = 20;
  int blocks = 1;
  SettingKind setting = SettingKind::pairwise();
};

template <typename Real>
ScoreField<Real> init(const InitConfig& cfg, Rng& rng) {
  if (cfg.num_items < 1 || cfg.dim < 2 || cfg.steps < 1 || cfg.blocks < 1)
    throw ConfigError("score field dimensions must be positive");
  using Mat = typename ScoreField<Real>::Mat;
  ScoreField<Real> field;
  field.num_items = cfg.num_items;
  field.setting = cfg.setting;
  field.with_virtual = cfg.setting.uses_virtual_item();
  field.corpus = cfg.setting.corpus_size(cfg.num_items);
  field.steps = cfg.steps;
  field.dim = cfg.dim;
  field.blocks = cfg.blocks;

  const auto embedding = [&](int rows, int cols) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = Real(0.02) * Real(rng.normal());
    return m;
  };
  const auto dense_init = [&](int rows, int cols) {
    Mat m(rows, cols);
    const Real bound = Real(1) / std::sqrt(Real(rows));
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = bound * Real(2 * rng.uniform() - 1);
    return m;
  };
  const auto add_param = [&](const std::string& name, Mat value) {
    field.params.push_back(std::move(value));
    field.param_names.push_back(name);
    return static_cast<int>(field.params.size()) - 1;
  };

  const int d = cfg.dim;
  field.item_emb = add_param("item_embeddings", embedding(field.corpus, d));
  field.time_emb = add_param("time_embeddings", embedding(cfg.steps + 1, d));
  field.phi = add_param("nonpref_user", embedding(1, d));
  for (int b = 0; b < cfg.blocks; ++b) {
    const std::string tag = "encoder" + std::to_string(b) + ".";
    typename ScoreField<Real>::BlockIdx idx;
    idx.wq = add_param(tag + "wq", dense_init(d, d));
    idx.wk = add_param(tag + "wk", dense_init(d, d));
    idx.wv = add_param(tag + "wv", dense_init(d, d));
    idx.wo = add_param(tag + "wo", dense_init(d, d));
    idx.ff_w1 = add_param(tag + "ff_w1", dense_init(d, d));
    idx.ff_b1 = add_param(tag + "ff_b1", Mat::Zero(1, d));
    idx.ff_w2 = add_param(tag + "ff_w2", dense_init(d, d));
    idx.ff_b2 = add_param(tag + "ff_b2", Mat::Zero(1, d));
    field.encoder.push_back(idx);
  }
  field.head_w1 = add_param("head_w1", dense_init(3 * d, d));
  field.head_b1 = add_param("head_b1", Mat::Zero(1, d));
  field.head_w2 = add_param("head_w2", dense_init(d, d));
  field.head_b2 = add_param("head_b2", Mat::Zero(1, d));
  field.theta = add_param("adaptive_logits", Mat::Zero(field.corpus, 1));
  return field;
}

namespace detail {

template <typename Real>
void validate_history(const ScoreField<Real>& field, const UserContext& ctx) {
  if (ctx.is_nonpref) return;
  if (ctx.history.empty())
    throw EmptyHistory("a preference user needs a non-empty history");
  if (static_cast<int>(ctx.history.size()) > kMaxHistory)
    throw DimensionError("history exceeds the maximum length");
  for (int idx : ctx.history)
    if (idx < 0 || idx >= field.num_items)
      throw RangeError("history item outside the real-item range");
}

template <typename Real>
Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> rope_rotate(
    const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>& x) {
  auto out = x;
  const Eigen::Index d = x.cols();
  for (Eigen::Index m = 0; m < x.rows(); ++m) {
    for (Eigen::Index k = 0; 2 * k + 1 < d; ++k) {
      const Real theta =
          Real(m) * std::pow(Real(10000), Real(-2) * Real(k) / Real(d));
      const Real c = std::cos(theta), s = std::sin(theta);
      const Real x0 = x(m, 2 * k), x1 = x(m, 2 * k + 1);
      out(m, 2 * k) = c * x0 - s * x1;
      out(m, 2 * k + 1) = s * x0 + c * x1;
    }
  }
  return out;
}

template <typename Real>
Real gauss_cdf(Real x) {
  return Real(0.5) * (Real(1) + std::erf(x * Real(M_SQRT1_2)));
}

template <typename Real>
Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> gelu_plain(
    const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>& x) {
  auto out = x;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    out.data()[i] = x.data()[i] * gauss_cdf(x.data()[i]);
  return out;
}

}  // namespace detail

/// Causal self-attention encoding of the history; the non-preference user
/// bypasses the encoder entirely and returns the learned embedding.
template <typename Real>
Eigen::Matrix<Real, 1, Eigen::Dynamic> encode_user(const ScoreField<Real>& field,
                                                   const UserContext& ctx) {
  using Mat = typename ScoreField<Real>::Mat;
  detail::validate_history(field, ctx);
  if (ctx.is_nonpref) return field.params[field.phi].row(0);

  const Eigen::Index len = static_cast<Eigen::Index>(ctx.history.size());
  Mat x(len, field.dim);
  for (Eigen::Index i = 0; i < len; ++i)
    x.row(i) = field.params[field.item_emb].row(ctx.history[i]);

  const Real inv_sqrt_d = Real(1) / std::sqrt(Real(field.dim));
  for (const auto& block : field.encoder) {
    const Mat q = detail::rope_rotate<Real>(x * field.params[block.wq]);
    const Mat k = detail::rope_rotate<Real>(x * field.params[block.wk]);
    const Mat v = x * field.params[block.wv];
    Mat scores = q * k.transpose() * inv_sqrt_d;
    Mat attn = Mat::Zero(len, len);
    for (Eigen::Index i = 0; i < len; ++i) {
      Real mx = scores(i, 0);
      for (Eigen::Index j = 1; j <= i; ++j) mx = std::max(mx, scores(i, j));
      Real denom = 0;
      for (Eigen::Index j = 0; j <= i; ++j) {
        attn(i, j) = std::exp(scores(i, j) - mx);
        denom += attn(i, j);
      }
      for (Eigen::Index j = 0; j <= i; ++j) attn(i, j) /= denom;
    }
    const Mat h = x + (attn * v) * field.params[block.wo];
    const Mat ff = detail::gelu_plain<Real>(
                       (h * field.params[block.ff_w1]).rowwise() +
                       field.params[block.ff_b1].row(0)) *
                       field.params[block.ff_w2];
    x = h + (ff.rowwise() + field.params[block.ff_b2].row(0));
  }
  return x.row(len - 1);
}

/// Scores for every corpus item given an already-encoded user vector.
template <typename Real>
std::vector<Real> score_with_user(const ScoreField<Real>& field, int x_t,
                                  int t_index,
                                  const Eigen::Matrix<Real, 1, Eigen::Dynamic>& user) {
  using Mat = typename ScoreField<Real>::Mat;
  if (x_t < 0 || x_t >= field.corpus) throw DimensionError("item index out of range");
  if (t_index < 0 || t_index > field.steps)
    throw DimensionError("timestep index out of range");

  Mat cat(1, 3 * field.dim);
  cat.block(0, 0, 1, field.dim) = field.params[field.item_emb].row(x_t);
  cat.block(0, field.dim, 1, field.dim) = field.params[field.time_emb].row(t_index);
  cat.block(0, 2 * field.dim, 1, field.dim) = user;

  const Mat h1 = detail::gelu_plain<Real>(cat * field.params[field.head_w1] +
                                          field.params[field.head_b1]);
  const Mat h = h1 * field.params[field.head_w2] + field.params[field.head_b2];
  Eigen::Matrix<Real, Eigen::Dynamic, 1> out =
      field.params[field.item_emb] * h.row(0).transpose();
  out(x_t) = Real(0);
  return std::vector<Real>(out.data(), out.data() + out.size());
}

template <typename Real>
std::vector<Real> score(const ScoreField<Real>& field, int x_t, int t_index,
                        const UserContext& ctx) {
  return score_with_user(field, x_t, t_index, encode_user(field, ctx));
}

// ---------------------------------------------------------------------------
// Tape-based training path.
// ---------------------------------------------------------------------------

template <typename Real>
struct TapeModel {
  autodiff::Tape<Real> tape;
  std::vector<int> param_nodes;  // aligned with field.params

  explicit TapeModel(const ScoreField<Real>& field) {
    param_nodes.reserve(field.params.size());
    for (const auto& p : field.params) param_nodes.push_back(tape.leaf(p));
  }
};

namespace detail {

template <typename Real>
int build_user_node(TapeModel<Real>& model, const ScoreField<Real>& field,
                    const UserContext& ctx) {
  auto& t = model.tape;
  validate_history(field, ctx);
  if (ctx.is_nonpref) return t.row(model.param_nodes[field.phi], 0);

  int x = t.gather_rows(model.param_nodes[field.item_emb], ctx.history);
  const Real inv_sqrt_d = Real(1) / std::sqrt(Real(field.dim));
  for (const auto& block : field.encoder) {
    const int q = t.rope(t.matmul(x, model.param_nodes[block.wq]));
    const int k = t.rope(t.matmul(x, model.param_nodes[block.wk]));
    const int v = t.matmul(x, model.param_nodes[block.wv]);
    const int attn = t.causal_softmax(t.scale(t.matmul_nt(q, k), inv_sqrt_d));
    const int h = t.add(x, t.matmul(t.matmul(attn, v), model.param_nodes[block.wo]));
    const int ff_in = t.add_rowvec(t.matmul(h, model.param_nodes[block.ff_w1]),
                                   model.param_nodes[block.ff_b1]);
    const int ff = t.matmul(t.gelu(ff_in), model.param_nodes[block.ff_w2]);
    x = t.add(h, t.add_rowvec(ff, model.param_nodes[block.ff_b2]));
  }
  const int last = static_cast<int>(ctx.history.size()) - 1;
  return t.row(x, last);
}

template <typename Real>
int build_score_node(TapeModel<Real>& model, const ScoreField<Real>& field,
                     int x_t, int t_index, int user_node) {
  auto& t = model.tape;
  if (x_t < 0 || x_t >= field.corpus) throw DimensionError("item index out of range");
  if (t_index < 0 || t_index > field.steps)
    throw DimensionError("timestep index out of range");
  const int x_e = t.row(model.param_nodes[field.item_emb], x_t);
  const int t_e = t.row(model.param_nodes[field.time_emb], t_index);
  const int cat = t.hconcat({x_e, t_e, user_node});
  const int h1 = t.gelu(t.add(t.matmul(cat, model.param_nodes[field.head_w1]),
                              model.param_nodes[field.head_b1]));
  const int h = t.add(t.matmul(h1, model.param_nodes[field.head_w2]),
                      model.param_nodes[field.head_b2]);
  const int out = t.matmul_nt(model.param_nodes[field.item_emb], h);
  return t.pin_zero(out, x_t);
}

/// Closed-form score-entropy loss as a graph over the score vector (and the
/// adaptive logits when applicable). Mirrors losses::se_loss_closed.
template <typename Real>
int build_loss_node(TapeModel<Real>& model, const ScoreField<Real>& field,
                    int scores_node, int x0, int x_t, Real alpha,
                    Real beta_factor) {
  auto& t = model.tape;
  const Real a = alpha;
  const Real q = Real(1) - alpha;
  const int m = field.corpus;

  const int sum_exp_others = t.add_const(t.sum(t.exp(scores_node)), Real(-1));

  switch (field.setting.kind) {
    case SettingKind::Kind::PointWise: {
      const int v = m - 1;
      if (x_t == x0) return t.scalar(Real(0));
      if (x_t != v)
        throw UnreachableState("point-wise fading only reaches x0 or the virtual item");
      const Real er = a / q;
      const Real r = std::log(a) - std::log(q);
      const int s_x0 = t.pick(scores_node, x0, 0);
      const int term = t.add_const(
          t.sub(t.exp(s_x0), t.scale(s_x0, er)), er * (r - Real(1)));
      return t.scale(term, beta_factor);
    }
    case SettingKind::Kind::PairWise: {
      const int n = m;
      const Real delta = Real(n) * a / q;
      const int sum_s = t.sum(scores_node);
      if (x_t == x0) {
        const Real constant =
            -Real(n - 1) * (std::log1p(delta) + Real(1)) / (Real(1) + delta);
        const int bracket = t.add_const(
            t.sub(sum_exp_others, t.scale(sum_s, Real(1) / (Real(1) + delta))),
            constant);
        return t.scale(bracket, beta_factor / Real(n));
      }
      const Real constant =
          (Real(1) + delta) * (std::log1p(delta) - Real(1)) - Real(n - 2);
      const int s_x0 = t.pick(scores_node, x0, 0);
      const int bracket = t.add_const(
          t.sub(t.sub(sum_exp_others, sum_s), t.scale(s_x0, delta)), constant);
      return t.scale(bracket, beta_factor / Real(n));
    }
    case SettingKind::Kind::Hybrid: {
      const int v = m - 1;
      const int n = m - 1;
      const Real lambda = Real(field.setting.lambda());
      const Real c = lambda / Real(n);
      const Real mu_v = Real(1) - lambda;
      typename ScoreField<Real>::Mat mu(m, 1);
      for (int y = 0; y < m; ++y) mu(y, 0) = (y == v ? mu_v : c);
      const int mu_leaf = t.leaf(std::move(mu));
      const int stilde = t.dot(scores_node, mu_leaf);
      const int s_x0 = t.pick(scores_node, x0, 0);
      const auto ent = [](Real er) { return er * (std::log(er) - Real(1)); };

      if (x_t == v) {
        const Real rho = q * mu_v;
        const Real constant =
            ent((a + q * c) / rho) + Real(n - 1) * ent(c / mu_v);
        const int t2 = t.scale(t.add(t.scale(s_x0, a), t.scale(stilde, q)),
                               Real(1) / rho);
        const int bracket = t.add_const(t.sub(sum_exp_others, t2), constant);
        return t.scale(bracket, beta_factor * mu_v);
      }
      if (x_t == x0) {
        const Real rho = a + q * c;
        const Real constant =
            Real(n - 1) * ent(q * c / rho) + ent(q * mu_v / rho);
        const int bracket = t.add_const(
            t.sub(sum_exp_others, t.scale(stilde, q / rho)), constant);
        return t.scale(bracket, beta_factor * c);
      }
      const Real rho = q * c;
      const Real constant =
          ent((a + q * c) / rho) - Real(n - 2) + ent(mu_v / c);
      const int t2 = t.scale(t.add(t.scale(s_x0, a), t.scale(stilde, q)),
                             Real(1) / rho);
      const int bracket = t.add_const(t.sub(sum_exp_others, t2), constant);
      return t.scale(bracket, beta_factor * c);
    }
    case SettingKind::Kind::Adaptive: {
      const int mu = t.softmax_col(model.param_nodes[field.theta]);
      const int log_mu = t.log(mu);
      const int mu_hat = t.dot(mu, log_mu);
      const int stilde = t.dot(scores_node, mu);
      const int mu_x0 = t.pick(mu, x0, 0);
      const int log_mu_x0 = t.pick(log_mu, x0, 0);
      const int s_x0 = t.pick(scores_node, x0, 0);

      if (x_t == x0) {
        // rho = a + q mu_x0; ratio = q / rho
        const int rho = t.add_const(t.scale(mu_x0, q), a);
        const int ratio = t.div(t.scalar(q), rho);
        const int one_minus_mu0 = t.add_const(t.scale(mu_x0, Real(-1)), Real(1));
        const int t3 = t.mul(
            ratio,
            t.add(t.mul(one_minus_mu0, t.add_const(t.log(ratio), Real(-1))),
                  t.sub(mu_hat, t.mul(mu_x0, log_mu_x0))));
        const int bracket =
            t.add(t.sub(sum_exp_others, t.mul(ratio, stilde)), t3);
        return t.scale(t.mul(mu_x0, bracket), beta_factor);
      }
      const int mu_xt = t.pick(mu, x_t, 0);
      const int log_mu_xt = t.pick(log_mu, x_t, 0);
      const int rho = t.scale(mu_xt, q);
      const int er0 = t.div(t.add_const(t.scale(mu_x0, q), a), rho);
      const int t3a = t.mul(er0, t.add_const(t.log(er0), Real(-1)));
      const int inner = t.sub(t.sub(mu_hat, t.mul(mu_x0, log_mu_x0)),
                              t.mul(mu_xt, log_mu_xt));
      const int one_minus_both = t.add_const(
          t.scale(t.add(mu_x0, mu_xt), Real(-1)), Real(1));
      const int rest = t.mul(one_minus_both, t.add_const(log_mu_xt, Real(1)));
      const int t3 = t.add(t3a, t.div(t.sub(inner, rest), mu_xt));
      const int t2 = t.div(t.add(t.scale(s_x0, a), t.scale(stilde, q)), rho);
      const int bracket = t.add(t.sub(sum_exp_others, t2), t3);
      return t.scale(t.mul(mu_xt, bracket), beta_factor);
    }
  }
  throw ConfigError("unknown loss setting");
}

}  // namespace detail

/// One training example: user context, preferred item, grid timestep, and
/// the already-faded state.
struct Example {
  UserContext ctx;
  int x0 = 0;
  int t_index = 1;
  int x_t = 0;
};

template <typename Real>
struct LossConfig {
  bool include_beta = true;
  schedule::Schedule sched;
};

template <typename Real>
struct Gradients {
  std::vector<typename ScoreField<Real>::Mat> tensors;
  Real mean_loss = 0;
};

/// Loss node for one example on the given tape model.
template <typename Real>
int build_example_loss(TapeModel<Real>& model, const ScoreField<Real>& field,
                       const Example& ex, const LossConfig<Real>& cfg) {
  const double t_real = cfg.sched.grid_time(ex.t_index);
  const Real alpha = Real(schedule::alpha(cfg.sched, t_real));
  const Real beta_factor =
      cfg.include_beta ? Real(schedule::beta(cfg.sched, t_real)) : Real(1);
  const int user = detail::build_user_node(model, field, ex.ctx);
  const int scores = detail::build_score_node(model, field, ex.x_t, ex.t_index, user);
  return detail::build_loss_node(model, field, scores, ex.x0, ex.x_t, alpha,
                                 beta_factor);
}

/// Mean loss over a batch without gradients (used by finite-difference
/// oracles).
template <typename Real>
Real batch_loss(const ScoreField<Real>& field, const std::vector<Example>& batch,
                const LossConfig<Real>& cfg) {
  Real total = 0;
  for (const auto& ex : batch) {
    TapeModel<Real> model(field);
    total += model.tape.scalar_value(build_example_loss(model, field, ex, cfg));
  }
  return total / Real(batch.size());
}

/// Exact mean-loss gradients for every parameter tensor. Examples are
/// reduced in fixed-size chunks whose boundaries do not depend on the
/// thread count, so results are identical for any `threads`.
template <typename Real>
Gradients<Real> gradients(const ScoreField<Real>& field,
                          const std::vector<Example>& batch,
                          const LossConfig<Real>& cfg, int threads = 1) {
  using Mat = typename ScoreField<Real>::Mat;
  if (batch.empty()) throw DataError("empty batch");

  constexpr int kChunk = 32;
  const int num_chunks = (static_cast<int>(batch.size()) + kChunk - 1) / kChunk;

  std::vector<std::vector<Mat>> chunk_grads(num_chunks);
  std::vector<Real> chunk_losses(num_chunks, Real(0));
  std::vector<std::string> chunk_errors(num_chunks);

  const auto run_chunk = [&](int c) {
    std::vector<Mat> acc;
    acc.reserve(field.params.size());
    for (const Mat& p : field.params) acc.push_back(Mat::Zero(p.rows(), p.cols()));
    const int begin = c * kChunk;
    const int end = std::min<int>(begin + kChunk, static_cast<int>(batch.size()));
    for (int i = begin; i < end; ++i) {
      TapeModel<Real> model(field);
      const int loss = build_example_loss(model, field, batch[i], cfg);
      const Real value = model.tape.scalar_value(loss);
      if (!std::isfinite(static_cast<double>(value))) {
        chunk_errors[c] = "non-finite loss at example " + std::to_string(i);
        return;
      }
      model.tape.backward(loss);
      for (std::size_t p = 0; p < field.params.size(); ++p)
        acc[p] += model.tape.grad(model.param_nodes[p]);
      chunk_losses[c] += value;
    }
    chunk_grads[c] = std::move(acc);
  };

  if (threads <= 1 || num_chunks == 1) {
    for (int c = 0; c < num_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    const int workers = std::min(threads, num_chunks);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const int c = next.fetch_add(1);
          if (c >= num_chunks) return;
          run_chunk(c);
        }
      });
    for (auto& th : pool) th.join();
  }

  for (int c = 0; c < num_chunks; ++c)
    if (!chunk_errors[c].empty()) throw NumericalError(chunk_errors[c]);

  Gradients<Real> out;
  out.tensors.reserve(field.params.size());
  for (const Mat& p : field.params) out.tensors.push_back(Mat::Zero(p.rows(), p.cols()));
  Real loss_total = 0;
  const Real inv = Real(1) / Real(batch.size());
  for (int c = 0; c < num_chunks; ++c) {
    loss_total += chunk_losses[c];
    for (std::size_t p = 0; p < out.tensors.size(); ++p)
      out.tensors[p] += chunk_grads[c][p];
  }
  for (auto& g : out.tensors) g *= inv;
  out.mean_loss = loss_total * inv;
  return out;
}

template <typename Real>
struct AdamState {
  std::vector<typename ScoreField<Real>::Mat> m, v;
  long long step = 0;
};

/// Standard Adam update (beta1 0.9, beta2 0.999, eps 1e-8, no decay).
template <typename Real>
void adam_step(ScoreField<Real>& field, const Gradients<Real>& grads, Real lr,
               AdamState<Real>& state) {
  using Mat = typename ScoreField<Real>::Mat;
  if (grads.tensors.size() != field.params.size())
    throw DimensionError("gradient set does not match the parameter set");
  if (state.m.empty()) {
    for (const Mat& p : field.params) {
      state.m.push_back(Mat::Zero(p.rows(), p.cols()));
      state.v.push_back(Mat::Zero(p.rows(), p.cols()));
    }
  }
  for (const auto& g : grads.tensors)
    if (!g.allFinite()) throw NumericalError("non-finite gradient");

  const Real beta1 = Real(0.9), beta2 = Real(0.999), eps = Real(1e-8);
  ++state.step;
  const Real bias1 = Real(1) - std::pow(beta1, Real(state.step));
  const Real bias2 = Real(1) - std::pow(beta2, Real(state.step));
  for (std::size_t p = 0; p < field.params.size(); ++p) {
    const Mat& g = grads.tensors[p];
    state.m[p] = beta1 * state.m[p] + (Real(1) - beta1) * g;
    state.v[p] = beta2 * state.v[p] + (Real(1) - beta2) * g.cwiseProduct(g);
    const Mat m_hat = state.m[p] / bias1;
    const Mat v_hat = state.v[p] / bias2;
    field.params[p] -=
        lr * m_hat.cwiseQuotient((v_hat.array().sqrt() + eps).matrix());
  }
  if (!field.finite()) throw NumericalError("parameters left the finite range");
}

// ---------------------------------------------------------------------------
// Checkpointing.
// ---------------------------------------------------------------------------

namespace detail {
inline void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
inline void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::string read_string(std::istream& is) {
  const std::uint32_t n = read_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}
}  // namespace detail

inline constexpr char kCheckpointMagic[9] = "PGCKPT01";

template <typename Real>
void save_checkpoint(const ScoreField<Real>& field, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path);
  os.write(kCheckpointMagic, 8);

  std::map<std::string, std::string> config;
  config["num_items"] = std::to_string(field.num_items);
  config["dim"] = std::to_string(field.dim);
  config["steps"] = std::to_string(field.steps);
  config["blocks"] = std::to_string(field.blocks);
  config["with_virtual"] = field.with_virtual ? "1" : "0";
  config["real_bytes"] = std::to_string(sizeof(Real));
  config["setting"] = [&] {
    switch (field.setting.kind) {
      case SettingKind::Kind::PointWise: return std::string("pointwise");
      case SettingKind::Kind::PairWise: return std::string("pairwise");
      case SettingKind::Kind::Hybrid: return std::string("hybrid");
      case SettingKind::Kind::Adaptive: return std::string("adaptive");
    }
    return std::string("pairwise");
  }();
  config["n_lambda"] = std::to_string(field.setting.n_lambda);
  config["adaptive_virtual"] = field.setting.adaptive_virtual ? "1" : "0";

  detail::write_u32(os, static_cast<std::uint32_t>(config.size()));
  for (const auto& [k, v] : config) {
    detail::write_string(os, k);
    detail::write_string(os, v);
  }
  detail::write_u32(os, static_cast<std::uint32_t>(field.params.size()));
  for (std::size_t p = 0; p < field.params.size(); ++p) {
    detail::write_string(os, field.param_names[p]);
    detail::write_u32(os, static_cast<std::uint32_t>(field.params[p].rows()));
    detail::write_u32(os, static_cast<std::uint32_t>(field.params[p].cols()));
    os.write(reinterpret_cast<const char*>(field.params[p].data()),
             static_cast<std::streamsize>(field.params[p].size() * sizeof(Real)));
  }
  if (!os) throw DataError("checkpoint write failed: " + path);
}

template <typename Real>
ScoreField<Real> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != std::string(kCheckpointMagic, 8))
    throw ParseError("not a checkpoint file: " + path);

  std::map<std::string, std::string> config;
  const std::uint32_t n_config = detail::read_u32(is);
  for (std::uint32_t i = 0; i < n_config; ++i) {
    const std::string k = detail::read_string(is);
    config[k] = detail::read_string(is);
  }
  if (config.at("real_bytes") != std::to_string(sizeof(Real)))
    throw ConfigError("checkpoint precision differs from the requested type");

  SettingKind setting = SettingKind::pairwise();
  const std::string kind = config.at("setting");
  if (kind == "pointwise") setting = SettingKind::pointwise();
  else if (kind == "pairwise") setting = SettingKind::pairwise();
  else if (kind == "hybrid") setting = SettingKind::hybrid(std::stoi(config.at("n_lambda")));
  else if (kind == "adaptive") setting = SettingKind::adaptive(config.at("adaptive_virtual") == "1");
  else throw ParseError("unknown setting in checkpoint: " + kind);

  InitConfig cfg;
  cfg.num_items = std::stoi(config.at("num_items"));
  cfg.dim = std::stoi(config.at("dim"));
  cfg.steps = std::stoi(config.at("steps"));
  cfg.blocks = std::stoi(config.at("blocks"));
  cfg.setting = setting;
  Rng scratch(0);
  ScoreField<Real> field = init<Real>(cfg, scratch);

  const std::uint32_t n_tensors = detail::read_u32(is);
  if (n_tensors != field.params.size())
    throw ParseError("checkpoint tensor count mismatch");
  for (std::uint32_t p = 0; p < n_tensors; ++p) {
    const std::string name = detail::read_string(is);
    const std::uint32_t rows = detail::read_u32(is);
    const std::uint32_t cols = detail::read_u32(is);
    if (name != field.param_names[p] ||
        rows != static_cast<std::uint32_t>(field.params[p].rows()) ||
        cols != static_cast<std::uint32_t>(field.params[p].cols()))
      throw ParseError("checkpoint tensor header mismatch at " + name);
    is.read(reinterpret_cast<char*>(field.params[p].data()),
            static_cast<std::streamsize>(field.params[p].size() * sizeof(Real)));
  }
  if (!is) throw ParseError("truncated checkpoint: " + path);
  return field;
}

}  // namespace prefergrow::scorenet
