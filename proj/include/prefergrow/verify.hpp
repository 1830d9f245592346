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
#include <functional>
#include <string>
#include <vector>

#include "prefergrow/evaldata.hpp"
#include "prefergrow/fading.hpp"
#include "prefergrow/losses.hpp"
#include "prefergrow/process.hpp"
#include "prefergrow/rng.hpp"
#include "prefergrow/sampler.hpp"
#include "prefergrow/schedule.hpp"
#include "prefergrow/scorenet.hpp"

namespace prefergrow::verify {

/// Outcome of one numerical verification suite.
struct SuiteResult {
  std::string name;
  bool pass = false;
  double max_error = 0;
  double tolerance = 0;
  std::string note;
};

namespace detail {

using fading::FadingMatrix;
using fading::NonPreferenceState;

inline FadingMatrix<double> random_rank1(Rng& rng, int m) {
  std::vector<double> w(m);
  for (double& x : w) x = 0.05 + rng.uniform();
  return fading::build_rank1(NonPreferenceState<double>(std::move(w), false));
}

inline FadingMatrix<double> random_rankr(Rng& rng, int m) {
  const int r = rng.uniform_int(1, std::min(m, 6));
  std::vector<std::vector<int>> clusters(r);
  for (int i = 0; i < m; ++i) clusters[i % r].push_back(i);
  std::vector<std::vector<double>> targets;
  for (const auto& c : clusters) {
    std::vector<double> t(m, 0.0);
    for (int idx : c) t[idx] = 0.05 + rng.uniform();
    targets.push_back(std::move(t));
  }
  return fading::build_rankr(m, clusters, targets);
}

inline FadingMatrix<double> random_instance(Rng& rng, int m, bool rank1) {
  return rank1 ? random_rank1(rng, m) : random_rankr(rng, m);
}

inline std::vector<double> random_distribution(Rng& rng, int m) {
  std::vector<double> p(m);
  double total = 0;
  for (double& x : p) {
    x = 0.05 + rng.uniform();
    total += x;
  }
  for (double& x : p) x /= total;
  return p;
}

inline SuiteResult make_result(const std::string& name, double max_error,
                               double tolerance, const std::string& note = "") {
  SuiteResult r;
  r.name = name;
  r.max_error = max_error;
  r.tolerance = tolerance;
  r.pass = max_error < tolerance;
  r.note = note;
  return r;
}

}  // namespace detail

// --- fading --------------------------------------------------------------

inline SuiteResult suite_idempotence(std::uint64_t seed) {
  Rng rng(seed);
  double max_err = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = rng.uniform_int(2, 64);
    const auto fm = detail::random_instance(rng, m, trial % 2 == 0);
    const auto dense = fading::debug_dense(fm);
    max_err = std::max(max_err, ((dense * dense) - dense).cwiseAbs().maxCoeff());
  }
  return detail::make_result("idempotence", max_err, 1e-12,
                             "E*E = E over 200 structured instances");
}

inline SuiteResult suite_column_stochastic(std::uint64_t seed) {
  Rng rng(seed + 1);
  double max_err = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = rng.uniform_int(2, 64);
    const auto fm = detail::random_instance(rng, m, trial % 2 == 0);
    const auto dense = fading::debug_dense(fm);
    for (int j = 0; j < m; ++j)
      max_err = std::max(max_err, std::abs(dense.col(j).sum() - 1.0));
  }
  return detail::make_result("column-stochastic", max_err, 1e-12,
                             "every implied column sums to one");
}

inline SuiteResult suite_fast_apply(std::uint64_t seed) {
  Rng rng(seed + 2);
  double max_err = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = rng.uniform_int(2, 64);
    const auto fm = detail::random_instance(rng, m, trial % 2 == 0);
    const auto dense = fading::debug_dense(fm);
    Eigen::VectorXd v(m);
    std::vector<double> vv(m);
    for (int i = 0; i < m; ++i) {
      vv[i] = 2.0 * rng.uniform() - 1.0;
      v(i) = vv[i];
    }
    const Eigen::VectorXd expected = dense * v;
    const auto got = fading::apply(fm, vv);
    for (int i = 0; i < m; ++i)
      max_err = std::max(max_err, std::abs(got[i] - expected(i)));
  }
  return detail::make_result("fast-apply", max_err, 1e-12,
                             "structured matvec equals the dense oracle");
}

inline SuiteResult suite_rank_decomposition(std::uint64_t seed) {
  Rng rng(seed + 3);
  int mismatches = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int m = rng.uniform_int(2, 32);
    const auto fm = detail::random_rankr(rng, m);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(fading::debug_dense(fm));
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] > 1e-9) ++rank;
    if (rank != fm.rank()) ++mismatches;
  }
  return detail::make_result("rank-decomposition", mismatches, 0.5,
                             "numeric rank equals the cluster count");
}

// --- schedule ------------------------------------------------------------

inline SuiteResult suite_schedule_quadrature(std::uint64_t seed) {
  Rng rng(seed + 4);
  const auto geometric = schedule::Schedule::geometric(1e-3, 10.0, 20);
  const auto linear = schedule::Schedule::linear(0.05, 20);
  double max_err = 0;
  for (const auto& sched : {geometric, linear}) {
    for (int trial = 0; trial < 8; ++trial) {
      const double t = 0.05 + 0.9 * rng.uniform();
      const int panels = 10000;
      double integral = 0;
      for (int i = 0; i < panels; ++i) {
        const double a = t * i / panels;
        const double b = t * (i + 1) / panels;
        integral +=
            0.5 * (schedule::beta(sched, a) + schedule::beta(sched, b)) * (b - a);
      }
      const double ratio = schedule::alpha(sched, t) / schedule::alpha(sched, 0.0);
      max_err = std::max(max_err, std::abs(std::exp(-integral) - ratio));
    }
  }
  return detail::make_result("schedule-quadrature", max_err, 1e-5,
                             "exp(-integral of rate) rebuilds the retention");
}

inline SuiteResult suite_schedule_rate(std::uint64_t seed) {
  Rng rng(seed + 5);
  const auto geometric = schedule::Schedule::geometric(1e-3, 10.0, 20);
  const auto linear = schedule::Schedule::linear(0.2, 20);
  const double h = 1e-5;
  double max_err = 0;
  for (const auto& sched : {geometric, linear}) {
    for (int trial = 0; trial < 200; ++trial) {
      const double t = h + (1.0 - 2.0 * h) * rng.uniform();
      const double fd = -(std::log(schedule::alpha(sched, t + h)) -
                          std::log(schedule::alpha(sched, t - h))) /
                        (2.0 * h);
      const double analytic = schedule::beta(sched, t);
      max_err = std::max(max_err, std::abs(fd - analytic) / std::abs(analytic));
    }
  }
  return detail::make_result("schedule-rate", max_err, 1e-6,
                             "analytic rate matches the log-derivative");
}

// --- process -------------------------------------------------------------

inline SuiteResult suite_chapman_kolmogorov(std::uint64_t seed) {
  Rng rng(seed + 6);
  double max_err = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = rng.uniform_int(2, 32);
    const auto fm = detail::random_instance(rng, m, trial % 2 == 0);
    double a = 0.05 + 0.9 * rng.uniform();
    double b = 0.05 + 0.9 * rng.uniform();
    double c = 0.05 + 0.9 * rng.uniform();
    if (a < b) std::swap(a, b);
    if (a < c) std::swap(a, c);
    if (b < c) std::swap(b, c);
    const auto p_ts = process::debug_dense(process::forward_transition(fm, b, c));
    const auto p_sr = process::debug_dense(process::forward_transition(fm, a, b));
    const auto p_tr = process::debug_dense(process::forward_transition(fm, a, c));
    max_err = std::max(max_err, ((p_ts * p_sr) - p_tr).cwiseAbs().maxCoeff());
  }
  return detail::make_result("chapman-kolmogorov", max_err, 1e-12,
                             "transitions compose along retention chains");
}

inline SuiteResult suite_inverse_roundtrip(std::uint64_t seed) {
  Rng rng(seed + 7);
  double max_err = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = rng.uniform_int(2, 32);
    const auto fm = detail::random_instance(rng, m, trial % 2 == 0);
    const double alpha_s = 0.2 + 0.8 * rng.uniform();
    const double ratio = 0.05 + 0.95 * rng.uniform();
    const double alpha_t = alpha_s * ratio;
    const auto fwd = process::debug_dense(process::forward_transition(fm, alpha_s, alpha_t));
    const auto inv = process::debug_dense(process::inverse_transition(fm, alpha_s, alpha_t));
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(m, m);
    max_err = std::max(max_err, ((inv * fwd) - eye).cwiseAbs().maxCoeff());
  }
  return detail::make_result("inverse-roundtrip", max_err, 1e-8,
                             "inverse kernels undo forward kernels");
}

inline SuiteResult suite_stationary_convergence(std::uint64_t seed) {
  Rng rng(seed + 8);
  double max_err = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int m = rng.uniform_int(2, 32);
    const auto fm = detail::random_rank1(rng, m);
    const auto v = detail::random_distribution(rng, m);
    const auto pushed = process::apply(process::forward_transition(fm, 1.0, 1e-6), v);
    double l1 = 0;
    for (int i = 0; i < m; ++i)
      l1 += std::abs(pushed[i] - fm.rank1_target.normalized(i));
    max_err = std::max(max_err, l1);
  }
  return detail::make_result("stationary-convergence", max_err, 1e-5,
                             "vanishing retention reaches the target state");
}

inline SuiteResult suite_forward_rate_fd(std::uint64_t seed) {
  Rng rng(seed + 9);
  const auto geometric = schedule::Schedule::geometric(1e-3, 10.0, 20);
  const auto linear = schedule::Schedule::linear(0.05, 20);
  const double h = 1e-5;
  double max_err = 0;
  for (const auto& sched : {geometric, linear}) {
    for (int trial = 0; trial < 10; ++trial) {
      const int m = rng.uniform_int(2, 8);
      const auto fm = detail::random_instance(rng, m, trial % 2 == 0);
      const double s_time = 0.1 + 0.2 * rng.uniform();
      const double t_time = s_time + 0.15 + 0.5 * rng.uniform() * (1.0 - s_time - 0.2);
      const double alpha_s = schedule::alpha(sched, s_time);
      const auto at = [&](double tt) {
        return process::debug_dense(
            process::forward_transition(fm, alpha_s, schedule::alpha(sched, tt)));
      };
      const Eigen::MatrixXd fd = (at(t_time + h) - at(t_time - h)) / (2.0 * h);
      const auto rate = process::debug_dense(
          process::rate_matrix(fm, schedule::beta(sched, t_time)));
      const Eigen::MatrixXd expected = rate * at(t_time);
      max_err = std::max(max_err, (fd - expected).cwiseAbs().maxCoeff() /
                                      expected.cwiseAbs().maxCoeff());
    }
  }
  return detail::make_result("forward-rate-fd", max_err, 1e-4,
                             "the rate kernel generates the forward flow");
}

inline SuiteResult suite_bayes_reversal(std::uint64_t seed) {
  Rng rng(seed + 10);
  double max_err = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int m = rng.uniform_int(2, 16);
    const auto fm = detail::random_instance(rng, m, trial % 2 == 0);
    const auto p0 = detail::random_distribution(rng, m);
    const double alpha_s = 0.4 + 0.5 * rng.uniform();
    const double alpha_t = alpha_s * (0.1 + 0.8 * rng.uniform());
    const auto p_s = process::marginal(p0, alpha_s, fm);
    const auto p_t = process::marginal(p0, alpha_t, fm);
    const auto rev = process::reverse_dense_exact(alpha_s, alpha_t, fm, p_s, p_t);
    Eigen::VectorXd pt(m), ps(m);
    for (int i = 0; i < m; ++i) {
      pt(i) = p_t[i];
      ps(i) = p_s[i];
    }
    max_err = std::max(max_err, (rev * pt - ps).cwiseAbs().maxCoeff());
  }
  return detail::make_result("bayes-reversal", max_err, 1e-10,
                             "reverse kernels transport marginals backward");
}

inline SuiteResult suite_reverse_rate_fd(std::uint64_t seed) {
  Rng rng(seed + 11);
  const auto sched = schedule::Schedule::geometric(1e-3, 10.0, 20);
  const double h = 1e-5;
  double max_err = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const int m = rng.uniform_int(3, 6);
    const auto fm = detail::random_rank1(rng, m);
    const auto p0 = detail::random_distribution(rng, m);
    const double s_time = 0.3 + 0.3 * rng.uniform();
    const double t_time = s_time + 0.15 + 0.2 * rng.uniform();
    const auto reverse_at = [&](double ss) {
      const double alpha_s = schedule::alpha(sched, ss);
      const double alpha_t = schedule::alpha(sched, t_time);
      const auto p_s = process::marginal(p0, alpha_s, fm);
      const auto p_t = process::marginal(p0, alpha_t, fm);
      return process::reverse_dense_exact(alpha_s, alpha_t, fm, p_s, p_t);
    };
    // Reverse time runs toward smaller s, so the difference quotient is
    // oriented accordingly.
    const Eigen::MatrixXd fd =
        (reverse_at(s_time - h) - reverse_at(s_time + h)) / (2.0 * h);
    const auto p_s = process::marginal(p0, schedule::alpha(sched, s_time), fm);
    const auto rate = process::reverse_rate_exact(
        schedule::alpha(sched, s_time), schedule::beta(sched, s_time), fm, p_s);
    for (int j = 0; j < m; ++j)
      if (std::abs(rate.col(j).sum()) > 1e-10) max_err = 1.0;
    const Eigen::MatrixXd expected = rate * reverse_at(s_time);
    max_err = std::max(max_err, (fd - expected).cwiseAbs().maxCoeff() /
                                    expected.cwiseAbs().maxCoeff());
  }
  return detail::make_result("reverse-rate-fd", max_err, 1e-4,
                             "the reverse rate generates the backward flow");
}

inline SuiteResult suite_reverse_step_exact(std::uint64_t seed) {
  Rng rng(seed + 12);
  double max_err = 0;
  long long clamped = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int m = rng.uniform_int(2, 16);
    const auto fm = detail::random_instance(rng, m, trial % 2 == 0);
    const auto p0 = detail::random_distribution(rng, m);
    const double alpha_s = 0.4 + 0.5 * rng.uniform();
    const double alpha_t = alpha_s * (0.15 + 0.7 * rng.uniform());
    const auto p_s = process::marginal(p0, alpha_s, fm);
    const auto p_t = process::marginal(p0, alpha_t, fm);
    const auto dense = process::reverse_dense_exact(alpha_s, alpha_t, fm, p_s, p_t);
    for (int x_t = 0; x_t < m; ++x_t) {
      std::vector<double> ratios(m);
      for (int z = 0; z < m; ++z) ratios[z] = std::log(p_t[z] / p_t[x_t]);
      const auto step =
          process::reverse_transition_exact(x_t, alpha_s, alpha_t, fm, ratios);
      clamped += step.clamped_entries;
      max_err = std::max(max_err, std::abs(step.pre_clamp_sum - 1.0));
      for (int y = 0; y < m; ++y)
        max_err = std::max(max_err, std::abs(step.probabilities[y] - dense(y, x_t)));
    }
  }
  if (clamped > 0) max_err = 1.0;
  return detail::make_result("reverse-step-exact", max_err, 1e-10,
                             "factorized reverse rows match the dense oracle");
}

inline SuiteResult suite_two_hop_markov(std::uint64_t seed) {
  Rng rng(seed + 13);
  const int m = 8;
  const auto fm = detail::random_rank1(rng, m);
  const double alpha_s = 0.7, alpha_t = 0.3;
  const int x0 = 2, trials = 100000;
  std::vector<double> histogram(m, 0.0);
  for (int trial = 0; trial < trials; ++trial) {
    int x_s = x0;
    if (!rng.bernoulli(alpha_s)) x_s = rng.categorical(fm.rank1_target.weights);
    int x_t = x_s;
    if (!rng.bernoulli(alpha_t / alpha_s)) {
      const auto col = fading::column(fm, x_s);
      x_t = rng.categorical(col);
    }
    histogram[x_t] += 1.0 / trials;
  }
  const auto expected = process::marginal_from_point(x0, alpha_t, fm);
  double tv = 0;
  for (int i = 0; i < m; ++i) tv += std::abs(histogram[i] - expected[i]);
  return detail::make_result("two-hop-markov", 0.5 * tv, 0.01,
                             "two-hop sampling reproduces the one-hop law");
}

inline SuiteResult suite_forward_marginal(std::uint64_t seed) {
  Rng rng(seed + 14);
  const auto target = fading::NonPreferenceState<double>::uniform(4);
  const int trials = 100000;
  int kept = 0;
  for (int i = 0; i < trials; ++i)
    if (process::sample_forward(1, 0.5, target, rng) == 1) ++kept;
  const double frequency = static_cast<double>(kept) / trials;
  return detail::make_result("forward-marginal", std::abs(frequency - 0.625), 0.01,
                             "retention frequency matches the marginal law");
}

// --- losses --------------------------------------------------------------

inline SuiteResult suite_score_entropy_nonneg(std::uint64_t seed) {
  (void)seed;
  double min_value = 1.0;
  for (double s = -10.0; s <= 10.0; s += 0.2)
    for (double r = -10.0; r <= 10.0; r += 0.2)
      min_value = std::min(min_value, losses::se_term(s, r));
  return detail::make_result("score-entropy-nonneg",
                             min_value < 0 ? -min_value : 0.0, 1e-13,
                             "the per-term loss never goes negative");
}

inline SuiteResult suite_closed_forms(std::uint64_t seed) {
  using losses::SettingKind;
  Rng rng(seed + 15);
  double max_err = 0;
  const SettingKind settings[] = {
      SettingKind::pointwise(),     SettingKind::pairwise(),
      SettingKind::hybrid(2),       SettingKind::hybrid(4),
      SettingKind::adaptive(false), SettingKind::adaptive(true)};
  for (const auto& setting : settings) {
    for (int trial = 0; trial < 500; ++trial) {
      const int n = rng.uniform_int(2, 32);
      const int m = setting.corpus_size(n);
      fading::NonPreferenceState<double> pT = [&] {
        if (setting.kind == SettingKind::Kind::Adaptive) {
          std::vector<double> w(m);
          for (double& x : w) x = std::exp(rng.normal());
          return fading::NonPreferenceState<double>(std::move(w),
                                                    setting.adaptive_virtual);
        }
        return setting.initial_state<double>(n);
      }();
      const auto fm = fading::build_rank1(pT);
      const double alpha = 0.05 + 0.9 * rng.uniform();
      const double beta = 0.2 + 2.0 * rng.uniform();
      const int x0 = rng.uniform_int(0, n - 1);
      const int x_t = setting.kind == SettingKind::Kind::PointWise
                          ? (rng.bernoulli(0.5) ? x0 : m - 1)
                          : rng.uniform_int(0, m - 1);
      std::vector<double> scores(m);
      for (double& s : scores) s = 4.0 * rng.uniform() - 2.0;
      scores[x_t] = 0.0;
      const double closed =
          losses::se_loss_closed(setting, x0, x_t, scores, alpha, beta, pT);
      const double generic =
          losses::se_loss_generic(x0, x_t, scores, alpha, beta, fm);
      max_err = std::max(max_err, std::abs(closed - generic));
    }
  }
  return detail::make_result("closed-forms", max_err, 1e-8,
                             "every closed form matches the generic sum");
}

inline SuiteResult suite_adaptive_degeneracy(std::uint64_t seed) {
  using losses::SettingKind;
  Rng rng(seed + 16);
  double max_err = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = rng.uniform_int(2, 32);
    const auto uniform = fading::NonPreferenceState<double>::uniform(n);
    const double alpha = 0.05 + 0.9 * rng.uniform();
    const double beta = 0.2 + 2.0 * rng.uniform();
    const int x0 = rng.uniform_int(0, n - 1);
    const int x_t = rng.uniform_int(0, n - 1);
    std::vector<double> scores(n);
    for (double& s : scores) s = 4.0 * rng.uniform() - 2.0;
    scores[x_t] = 0.0;
    const double adaptive = losses::se_loss_closed(SettingKind::adaptive(false),
                                                   x0, x_t, scores, alpha, beta,
                                                   uniform);
    const double pairwise = losses::se_loss_closed(SettingKind::pairwise(), x0,
                                                   x_t, scores, alpha, beta,
                                                   uniform);
    max_err = std::max(max_err, std::abs(adaptive - pairwise));
  }
  return detail::make_result("adaptive-degeneracy", max_err, 1e-10,
                             "a uniform adaptive state equals pair-wise");
}

inline SuiteResult suite_sbce_gradient_link(std::uint64_t seed) {
  Rng rng(seed + 17);
  double max_err = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double s = 20.0 * rng.uniform() - 10.0;
    const double r = 20.0 * rng.uniform() - 10.0;
    // The identity is compared on its bounded side (divided by the positive
    // factor (1+e^s)(1+e^r)), where 1e-12 is attainable in doubles.
    const double lhs = losses::sbce_grad_s(s, r);
    const double rhs = losses::se_term_grad_s(s, r) /
                       ((1.0 + std::exp(s)) * (1.0 + std::exp(r)));
    max_err = std::max(max_err, std::abs(lhs - rhs));
    // Both losses are minimized exactly at s = r.
    max_err = std::max(max_err, std::abs(losses::se_term_grad_s(r, r)));
    max_err = std::max(max_err, std::abs(losses::sbce_grad_s(r, r)));
  }
  return detail::make_result("sbce-gradient-link", max_err, 1e-12,
                             "score entropy and soft BCE share gradients");
}

// --- score network --------------------------------------------------------

inline SuiteResult suite_gradcheck(std::uint64_t seed) {
  using losses::SettingKind;
  Rng rng(seed + 18);
  double max_rel = 0;
  const SettingKind settings[] = {SettingKind::pointwise(), SettingKind::pairwise(),
                                  SettingKind::hybrid(2), SettingKind::adaptive(true)};
  for (const auto& setting : settings) {
    scorenet::InitConfig cfg;
    cfg.num_items = 12;
    cfg.dim = 8;
    cfg.steps = 5;
    cfg.setting = setting;
    auto field = scorenet::init<double>(cfg, rng);
    for (int i = 0; i < field.corpus; ++i)
      field.params[field.theta](i, 0) = 0.05 * rng.normal();

    scorenet::LossConfig<double> loss_cfg;
    loss_cfg.sched = schedule::Schedule::geometric(1e-3, 10.0, 5);

    std::vector<scorenet::Example> batch;
    for (int i = 0; i < 5; ++i) {
      scorenet::Example ex;
      const int len = rng.uniform_int(1, 6);
      for (int k = 0; k < len; ++k)
        ex.ctx.history.push_back(rng.uniform_int(0, field.num_items - 1));
      ex.ctx.is_nonpref = i == 4;
      ex.x0 = rng.uniform_int(0, field.num_items - 1);
      ex.t_index = rng.uniform_int(1, 5);
      ex.x_t = setting.kind == SettingKind::Kind::PointWise
                   ? (rng.bernoulli(0.75) ? field.corpus - 1 : ex.x0)
                   : rng.uniform_int(0, field.corpus - 1);
      batch.push_back(std::move(ex));
    }

    const auto grads = scorenet::gradients(field, batch, loss_cfg, 1);
    struct Coord {
      int tensor, row, col;
    };
    std::vector<Coord> candidates;
    for (std::size_t p = 0; p < grads.tensors.size(); ++p)
      for (int r = 0; r < grads.tensors[p].rows(); ++r)
        for (int c = 0; c < grads.tensors[p].cols(); ++c)
          if (std::abs(grads.tensors[p](r, c)) > 1e-4)
            candidates.push_back({static_cast<int>(p), r, c});
    const double h = 1e-4;
    for (int k = 0; k < 20 && !candidates.empty(); ++k) {
      const auto coord =
          candidates[rng.uniform_int(0, static_cast<int>(candidates.size()) - 1)];
      double& entry = field.params[coord.tensor](coord.row, coord.col);
      const double original = entry;
      entry = original + h;
      const double up = scorenet::batch_loss(field, batch, loss_cfg);
      entry = original - h;
      const double down = scorenet::batch_loss(field, batch, loss_cfg);
      entry = original;
      const double fd = (up - down) / (2.0 * h);
      const double analytic = grads.tensors[coord.tensor](coord.row, coord.col);
      max_rel = std::max(max_rel, std::abs(fd - analytic) /
                                      std::max(std::abs(fd), std::abs(analytic)));
    }
  }
  return detail::make_result("gradcheck", max_rel, 1e-5,
                             "backprop matches central differences");
}

// --- sampler ---------------------------------------------------------------

inline SuiteResult suite_sampler_consistency(std::uint64_t seed) {
  Rng rng(seed + 19);
  const int m = 8;
  const auto fm = detail::random_rank1(rng, m);
  const auto& target = fm.rank1_target;
  const auto sched = schedule::Schedule::geometric(1e-3, 10.0, 20);
  const auto p0 = detail::random_distribution(rng, m);

  sampler::SamplerConfig cfg;
  cfg.steps = 20;
  const auto ratios = [&](int x_t, int step, int) {
    const double tau = static_cast<double>(step) / cfg.steps;
    const auto p_t = process::marginal(p0, schedule::alpha(sched, tau), fm);
    std::vector<double> r(m);
    for (int z = 0; z < m; ++z) r[z] = std::log(p_t[z] / p_t[x_t]);
    return r;
  };

  std::vector<double> histogram(m, 0.0);
  long long clamped = 0;
  const int runs = 10000;
  Rng gen(seed + 20);
  for (int run = 0; run < runs; ++run) {
    const auto result = sampler::grow<double>(ratios, cfg, sched, target, fm, m, gen);
    clamped += result.clamped_entries;
    histogram[result.sampled_item] += 1.0 / runs;
  }
  double tv = 0;
  for (int i = 0; i < m; ++i) tv += std::abs(histogram[i] - p0[i]);
  double err = 0.5 * tv;
  if (clamped > 0) err = 1.0;
  return detail::make_result("sampler-consistency", err, 0.05,
                             "exact-ratio growing recovers the data law");
}

// --- registry --------------------------------------------------------------

inline const std::vector<std::pair<std::string, SuiteResult (*)(std::uint64_t)>>&
registry() {
  static const std::vector<std::pair<std::string, SuiteResult (*)(std::uint64_t)>>
      table = {
          {"idempotence", &suite_idempotence},
          {"column-stochastic", &suite_column_stochastic},
          {"fast-apply", &suite_fast_apply},
          {"rank-decomposition", &suite_rank_decomposition},
          {"schedule-quadrature", &suite_schedule_quadrature},
          {"schedule-rate", &suite_schedule_rate},
          {"chapman-kolmogorov", &suite_chapman_kolmogorov},
          {"inverse-roundtrip", &suite_inverse_roundtrip},
          {"stationary-convergence", &suite_stationary_convergence},
          {"forward-rate-fd", &suite_forward_rate_fd},
          {"bayes-reversal", &suite_bayes_reversal},
          {"reverse-rate-fd", &suite_reverse_rate_fd},
          {"reverse-step-exact", &suite_reverse_step_exact},
          {"two-hop-markov", &suite_two_hop_markov},
          {"forward-marginal", &suite_forward_marginal},
          {"score-entropy-nonneg", &suite_score_entropy_nonneg},
          {"closed-forms", &suite_closed_forms},
          {"adaptive-degeneracy", &suite_adaptive_degeneracy},
          {"sbce-gradient-link", &suite_sbce_gradient_link},
          {"gradcheck", &suite_gradcheck},
          {"sampler-consistency", &suite_sampler_consistency},
      };
  return table;
}

/// Runs every suite whose name contains `filter` (all when empty).
inline std::vector<SuiteResult> run(const std::string& filter, std::uint64_t seed) {
  std::vector<SuiteResult> results;
  for (const auto& [name, fn] : registry()) {
    if (!filter.empty() && name.find(filter) == std::string::npos) continue;
    results.push_back(fn(seed));
  }
  return results;
}

}  // namespace prefergrow::verify
