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

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "prefergrow/losses.hpp"
#include "prefergrow/process.hpp"
#include "prefergrow/rng.hpp"

using namespace prefergrow;
using fading::FadingMatrix;
using fading::NonPreferenceState;
using losses::SettingKind;

namespace {

// Independent dense oracle for the transition-rate-weighted score entropy.
// Sums beta * E(x_t, y) * term over reachable y, straight from the dense
// matrix; kept free of the structured code paths it is used to check.
double dense_se_loss(int x0, int x_t, const std::vector<double>& scores,
                     double alpha, double beta, const FadingMatrix<double>& fm) {
  const Eigen::MatrixXd dense = fading::debug_dense(fm);
  const int m = fm.corpus_size;
  const double denom = (x_t == x0 ? alpha : 0.0) + (1.0 - alpha) * dense(x_t, x0);
  double loss = 0.0;
  for (int y = 0; y < m; ++y) {
    if (y == x_t) continue;
    const double weight = dense(x_t, y);
    if (weight <= 0.0) continue;
    const double p_y = (y == x0 ? alpha : 0.0) + (1.0 - alpha) * dense(y, x0);
    if (p_y <= 0.0) continue;
    const double r = std::log(p_y / denom);
    loss += weight * (std::exp(scores[y]) - std::exp(r) * scores[y] +
                      std::exp(r) * (r - 1.0));
  }
  return beta * loss;
}

std::vector<double> random_scores(Rng& rng, int m, int x_t) {
  std::vector<double> s(m);
  for (double& x : s) x = 4.0 * rng.uniform() - 2.0;
  s[x_t] = 0.0;
  return s;
}

}  // namespace

TEST_CASE("score entropy term vanishes exactly at the reference", "[losses]") {
  for (double r : {-3.0, -0.5, 0.0, 1.0, 4.0})
    REQUIRE(losses::se_term(r, r) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("score entropy term at hand-computed points", "[losses]") {
  REQUIRE(losses::se_term(1.0, 0.0) == Catch::Approx(std::exp(1.0) - 2.0).margin(1e-12));
  REQUIRE(losses::se_term(0.0, 1.0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("score entropy term is nonnegative on a grid", "[losses][property]") {
  for (double s = -10.0; s <= 10.0; s += 0.25) {
    for (double r = -10.0; r <= 10.0; r += 0.25) {
      const double value = losses::se_term(s, r);
      REQUIRE(value >= -1e-13);
      if (std::abs(s - r) > 1e-6) REQUIRE(value > 0.0);
    }
  }
}

TEST_CASE("magnitude guard rejects extreme arguments", "[losses][errors]") {
  REQUIRE_THROWS_AS(losses::se_term(60.0, 0.0), MagnitudeError);
  REQUIRE_THROWS_AS(losses::se_term(0.0, -60.0), MagnitudeError);
  REQUIRE_THROWS_AS(losses::sbce_loss(51.0, 0.0), MagnitudeError);
}

TEST_CASE("soft BCE at the symmetric point", "[losses]") {
  REQUIRE(losses::sbce_loss(0.0, 0.0) == Catch::Approx(std::log(2.0)).margin(1e-12));
}

TEST_CASE("soft BCE gradient vanishes at the reference", "[losses]") {
  for (double r : {-2.0, 0.0, 3.0})
    REQUIRE(losses::sbce_grad_s(r, r) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("score entropy and soft BCE share their descent direction",
          "[losses][property]") {
  // The identity (1+e^s)(1+e^r) * grad_sBCE = grad_SE is checked on its
  // bounded side: dividing by the positive factor keeps both routes in
  // [-1, 1], where 1e-12 is meaningful in double precision.
  Rng rng(77);
  double max_err = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double s = 20.0 * rng.uniform() - 10.0;
    const double r = 20.0 * rng.uniform() - 10.0;
    const double lhs = losses::sbce_grad_s(s, r);
    const double rhs = losses::se_term_grad_s(s, r) /
                       ((1.0 + std::exp(s)) * (1.0 + std::exp(r)));
    max_err = std::max(max_err, std::abs(lhs - rhs));
  }
  REQUIRE(max_err < 1e-12);
}

TEST_CASE("one gradient step shrinks the distance to the reference", "[losses]") {
  for (double s0 : {-1.5, 0.7, 2.0}) {
    const double r = 0.2;
    const double stepped = s0 - 0.05 * losses::se_term_grad_s(s0, r);
    REQUIRE(std::abs(stepped - r) < std::abs(s0 - r));
  }
}

TEST_CASE("generic loss vanishes when scores equal the reference ratios",
          "[losses]") {
  Rng rng(21);
  const int m = 6;
  std::vector<double> w(m);
  for (double& x : w) x = 0.1 + rng.uniform();
  auto fm = fading::build_rank1(NonPreferenceState<double>(w, false));
  const double alpha = 0.35;
  const int x0 = 1, x_t = 4;
  std::vector<double> scores(m);
  for (int y = 0; y < m; ++y)
    scores[y] = process::reference_ratio(x0, x_t, y, alpha, fm);
  REQUIRE(losses::se_loss_generic(x0, x_t, scores, alpha, 1.3, fm) ==
          Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("point-wise generic loss is zero when the item is retained",
          "[losses]") {
  auto fm = fading::build_rank1(NonPreferenceState<double>::virtual_point_mass(5));
  const std::vector<double> scores(6, 0.0);
  REQUIRE(losses::se_loss_generic(2, 2, scores, 0.4, 2.0, fm) == 0.0);
}

TEST_CASE("point-wise closed form is zero at the reference scores", "[losses]") {
  const int n = 5;
  auto pT = NonPreferenceState<double>::virtual_point_mass(n);
  const double alpha = 0.3;
  std::vector<double> scores(n + 1, 0.0);
  scores[1] = std::log(alpha / (1.0 - alpha));
  const double loss = losses::se_loss_closed(SettingKind::pointwise(), 1, n,
                                             scores, alpha, 2.2, pT);
  REQUIRE(loss == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("pair-wise loss at zero scores matches the dense oracle value",
          "[losses]") {
  const int n = 4;
  auto pT = NonPreferenceState<double>::uniform(n);
  auto fm = fading::build_rank1(pT);
  const std::vector<double> scores(n, 0.0);
  const double alpha = 0.5;  // delta = 4
  const double expected = dense_se_loss(0, 2, scores, alpha, 1.0, fm);
  // (1/N) * [1 + (1+delta)(log(1+delta) - 1)] with delta = 4:
  REQUIRE(expected == Catch::Approx(1.0117973905426254).margin(1e-12));
  REQUIRE(losses::se_loss_generic(0, 2, scores, alpha, 1.0, fm) ==
          Catch::Approx(expected).margin(1e-12));
  REQUIRE(losses::se_loss_closed(SettingKind::pairwise(), 0, 2, scores, alpha,
                                 1.0, pT) ==
          Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("closed forms agree with the generic oracle per setting",
          "[losses][property]") {
  Rng rng(909);
  const struct {
    SettingKind setting;
    const char* name;
  } cases[] = {
      {SettingKind::pointwise(), "pointwise"},
      {SettingKind::pairwise(), "pairwise"},
      {SettingKind::hybrid(2), "hybrid"},
      {SettingKind::hybrid(4), "hybrid-strong"},
      {SettingKind::adaptive(false), "adaptive"},
      {SettingKind::adaptive(true), "adaptive+virtual"},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    double max_err = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const int n = rng.uniform_int(2, 32);
      const int m = c.setting.corpus_size(n);
      NonPreferenceState<double> pT = [&] {
        if (c.setting.kind == SettingKind::Kind::Adaptive) {
          std::vector<double> w(m);
          for (double& x : w) x = std::exp(rng.normal());
          return NonPreferenceState<double>(std::move(w),
                                            c.setting.adaptive_virtual);
        }
        return c.setting.initial_state<double>(n);
      }();
      auto fm = fading::build_rank1(pT);
      const double alpha = 0.05 + 0.9 * rng.uniform();
      const double beta = 0.2 + 2.0 * rng.uniform();
      const int x0 = rng.uniform_int(0, n - 1);
      int x_t;
      if (c.setting.kind == SettingKind::Kind::PointWise)
        x_t = rng.bernoulli(0.5) ? x0 : m - 1;
      else
        x_t = rng.uniform_int(0, m - 1);
      const auto scores = random_scores(rng, m, x_t);
      const double closed =
          losses::se_loss_closed(c.setting, x0, x_t, scores, alpha, beta, pT);
      const double generic =
          losses::se_loss_generic(x0, x_t, scores, alpha, beta, fm);
      const double dense = dense_se_loss(x0, x_t, scores, alpha, beta, fm);
      max_err = std::max(max_err, std::abs(closed - generic));
      max_err = std::max(max_err, std::abs(generic - dense));
    }
    REQUIRE(max_err < 1e-8);
  }
}

TEST_CASE("adaptive with a uniform state degenerates to pair-wise",
          "[losses][property]") {
  Rng rng(31);
  double max_err = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(2, 32);
    auto uniform = NonPreferenceState<double>::uniform(n);
    const double alpha = 0.05 + 0.9 * rng.uniform();
    const double beta = 0.2 + 2.0 * rng.uniform();
    const int x0 = rng.uniform_int(0, n - 1);
    const int x_t = rng.uniform_int(0, n - 1);
    const auto scores = random_scores(rng, n, x_t);
    const double adaptive = losses::se_loss_closed(
        SettingKind::adaptive(false), x0, x_t, scores, alpha, beta, uniform);
    const double pairwise = losses::se_loss_closed(
        SettingKind::pairwise(), x0, x_t, scores, alpha, beta, uniform);
    max_err = std::max(max_err, std::abs(adaptive - pairwise));
  }
  REQUIRE(max_err < 1e-10);
}

TEST_CASE("intermediates carry the documented quantities", "[losses]") {
  const int n = 4;
  auto pT = NonPreferenceState<double>::uniform(n);
  std::vector<double> scores = {0.5, -0.25, 0.0, 1.0};
  scores[2] = 0.0;
  losses::LossIntermediates<double> mid;
  losses::se_loss_closed(SettingKind::pairwise(), 0, 2, scores, 0.5, 1.0, pT, &mid);
  REQUIRE(mid.delta == Catch::Approx(4.0).margin(1e-12));
  REQUIRE(mid.sigma == Catch::Approx(1.0).margin(1e-12));
  double sum_exp = 0.0, sum_s = 0.0;
  for (double s : scores) {
    sum_exp += std::exp(s);
    sum_s += s;
  }
  REQUIRE(mid.mean_exp_score == Catch::Approx((sum_exp - 1.0) / n).margin(1e-12));
  REQUIRE(mid.mean_score == Catch::Approx(sum_s / n).margin(1e-12));
}

TEST_CASE("loss rejects inconsistent configuration", "[losses][errors]") {
  const int n = 4;
  auto uniform = NonPreferenceState<double>::uniform(n);
  auto point = NonPreferenceState<double>::virtual_point_mass(n);
  std::vector<double> scores(n, 0.0);
  std::vector<double> scores5(n + 1, 0.0);

  REQUIRE_THROWS_AS(losses::se_loss_closed(SettingKind::pointwise(), 0, 1,
                                           scores, 0.5, 1.0, uniform),
                    Error);
  REQUIRE_THROWS_AS(losses::se_loss_closed(SettingKind::pairwise(), 0, 1,
                                           scores5, 0.5, 1.0, point),
                    ConfigError);

  // Real x_t other than x0 is unreachable under a virtual point mass.
  REQUIRE_THROWS_AS(losses::se_loss_closed(SettingKind::pointwise(), 0, 1,
                                           scores5, 0.5, 1.0, point),
                    UnreachableState);

  std::vector<double> unpinned(n, 0.0);
  unpinned[1] = 0.5;
  REQUIRE_THROWS_AS(losses::se_loss_closed(SettingKind::pairwise(), 0, 1,
                                           unpinned, 0.5, 1.0, uniform),
                    ConfigError);

  auto fm = fading::build_rank1(uniform);
  REQUIRE_THROWS_AS(losses::se_loss_generic(0, 1, unpinned, 0.5, 1.0, fm),
                    ConfigError);
}
