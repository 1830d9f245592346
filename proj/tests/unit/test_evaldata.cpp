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

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "prefergrow/evaldata.hpp"

using namespace prefergrow;
using evaldata::InteractionDataset;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "prefergrow_data_test";
  fs::create_directories(dir);
  const std::string path = (dir / name).string();
  std::ofstream os(path);
  os << content;
  return path;
}

}  // namespace

TEST_CASE("dataset lines split into history and target", "[evaldata]") {
  const auto path = write_temp("basic.txt", "N=5\n0 1 2 3\n4 0\n");
  const auto ds = evaldata::load(path);
  REQUIRE(ds.num_items == 5);
  REQUIRE(ds.sequences.size() == 2);
  REQUIRE(ds.sequences[0].history == std::vector<int>{0, 1, 2});
  REQUIRE(ds.sequences[0].target == 3);
  REQUIRE(ds.sequences[1].history == std::vector<int>{4});
  REQUIRE(ds.sequences[1].target == 0);
}

TEST_CASE("ten sequences split 8:1:1", "[evaldata]") {
  std::string content = "N=3\n";
  for (int i = 0; i < 10; ++i) content += "0 1\n";
  const auto ds = evaldata::load(write_temp("ten.txt", content));
  REQUIRE(ds.train_split.size() == 8);
  REQUIRE(ds.valid_split.size() == 1);
  REQUIRE(ds.test_split.size() == 1);
  REQUIRE(ds.valid_split[0] == 8);
  REQUIRE(ds.test_split[0] == 9);
}

TEST_CASE("split sizes stay within one element of the ratio", "[evaldata][property]") {
  for (int n : {3, 7, 9, 23, 100, 101}) {
    std::string content = "N=2\n";
    for (int i = 0; i < n; ++i) content += "0 1\n";
    const auto ds = evaldata::load(write_temp("ratio.txt", content));
    REQUIRE(std::abs(static_cast<double>(ds.train_split.size()) - 0.8 * n) <= 1.0);
    REQUIRE(std::abs(static_cast<double>(ds.valid_split.size()) - 0.1 * n) <= 1.0);
    REQUIRE(std::abs(static_cast<double>(ds.test_split.size()) - 0.1 * n) <= 1.0);
    REQUIRE(ds.train_split.size() + ds.valid_split.size() + ds.test_split.size() ==
            static_cast<std::size_t>(n));
  }
}

TEST_CASE("malformed input is reported with its line number", "[evaldata][errors]") {
  REQUIRE_THROWS_WITH(evaldata::load(write_temp("bad.txt", "N=5\n0 x 3\n")),
                      Catch::Matchers::ContainsSubstring("line 2"));
  REQUIRE_THROWS_AS(evaldata::load(write_temp("bad2.txt", "N=5\n0 7\n")),
                    RangeError);
  REQUIRE_THROWS_AS(evaldata::load(write_temp("bad3.txt", "N=5\n3\n")),
                    ParseError);
  REQUIRE_THROWS_AS(
      evaldata::load(write_temp("bad4.txt", "N=5\n0 1 2 3 4 0 1 2 3 4 0 1\n")),
      ParseError);
  REQUIRE_THROWS_AS(evaldata::load(write_temp("bad5.txt", "corpus 5\n0 1\n")),
                    ParseError);
}

TEST_CASE("dataset files round-trip", "[evaldata]") {
  Rng rng(4);
  const auto ds = evaldata::synth_cycle(12, 40, 0.25, rng);
  const auto path = write_temp("roundtrip.txt", "");
  evaldata::save(ds, path);
  const auto back = evaldata::load(path);
  REQUIRE(back.num_items == ds.num_items);
  REQUIRE(back.sequences.size() == ds.sequences.size());
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    REQUIRE(back.sequences[i].history == ds.sequences[i].history);
    REQUIRE(back.sequences[i].target == ds.sequences[i].target);
  }
}

TEST_CASE("noiseless synthetic targets follow the successor rule", "[evaldata]") {
  Rng rng(11);
  const auto ds = evaldata::synth_cycle(17, 200, 0.0, rng);
  for (const auto& seq : ds.sequences) {
    REQUIRE(seq.history.size() >= 4);
    REQUIRE(seq.history.size() <= 10);
    for (std::size_t k = 1; k < seq.history.size(); ++k)
      REQUIRE(seq.history[k] == (seq.history[k - 1] + 1) % 17);
    REQUIRE(seq.target == (seq.history.back() + 1) % 17);
  }
}

TEST_CASE("synthetic generation is seed-deterministic", "[evaldata]") {
  Rng a(9), b(9);
  const auto da = evaldata::synth_cycle(20, 50, 0.3, a);
  const auto db = evaldata::synth_cycle(20, 50, 0.3, b);
  for (std::size_t i = 0; i < da.sequences.size(); ++i) {
    REQUIRE(da.sequences[i].history == db.sequences[i].history);
    REQUIRE(da.sequences[i].target == db.sequences[i].target);
  }
}

TEST_CASE("near-total noise makes targets approximately uniform",
          "[evaldata][property]") {
  Rng rng(13);
  const int n = 50;
  const auto ds = evaldata::synth_cycle(n, 10000, 0.999, rng);
  std::vector<int> counts(n, 0);
  for (const auto& seq : ds.sequences) ++counts[seq.target];
  const double expected = 10000.0 / n;
  double chi2 = 0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 0.999 quantile of chi-squared with 49 degrees of freedom.
  REQUIRE(chi2 < 85.4);
}

TEST_CASE("hit rate and NDCG at hand-computed points", "[evaldata]") {
  REQUIRE(evaldata::hr_at_k(1, 5) == 1.0);
  REQUIRE(evaldata::ndcg_at_k(1, 5) == 1.0);
  REQUIRE(evaldata::hr_at_k(3, 5) == 1.0);
  REQUIRE(evaldata::ndcg_at_k(3, 5) == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(evaldata::hr_at_k(6, 5) == 0.0);
  REQUIRE(evaldata::ndcg_at_k(6, 5) == 0.0);
  REQUIRE_THROWS_AS(evaldata::hr_at_k(1, 0), ConfigError);
  REQUIRE_THROWS_AS(evaldata::ndcg_at_k(0, 5), DomainError);
}

TEST_CASE("uniform ranks give the analytic hit rate", "[evaldata][property]") {
  Rng rng(15);
  std::vector<int> ranks(10000);
  for (int& r : ranks) r = rng.uniform_int(1, 100);
  const auto rows = evaldata::metrics_from_ranks(ranks, {10});
  REQUIRE(rows[0].hr > 0.10 - 0.01);
  REQUIRE(rows[0].hr < 0.10 + 0.01);
}

TEST_CASE("NDCG never exceeds the hit rate and cutoffs nest", "[evaldata][property]") {
  Rng rng(16);
  std::vector<int> ranks(500);
  for (int& r : ranks) r = rng.uniform_int(1, 40);
  const auto rows = evaldata::metrics_from_ranks(ranks, {5, 10, 20});
  for (const auto& row : rows) REQUIRE(row.ndcg <= row.hr + 1e-12);
  REQUIRE(rows[0].hr <= rows[1].hr);
  REQUIRE(rows[1].hr <= rows[2].hr);
}

TEST_CASE("target ranking breaks ties by ascending index", "[evaldata]") {
  const std::vector<double> dist = {0.2, 0.5, 0.2, 0.1, 0.9};
  // Item 4 is virtual and excluded from the real-item count of 4.
  REQUIRE(evaldata::rank_of_target(dist, 0, 4) == 2);
  REQUIRE(evaldata::rank_of_target(dist, 2, 4) == 3);
  REQUIRE(evaldata::rank_of_target(dist, 1, 4) == 1);
  REQUIRE(evaldata::rank_of_target(dist, 3, 4) == 4);
}

TEST_CASE("evaluation is order- and thread-invariant", "[evaldata]") {
  Rng rng(17);
  const auto ds = evaldata::synth_cycle(10, 60, 0.0, rng);
  scorenet::InitConfig cfg;
  cfg.num_items = 10;
  cfg.dim = 8;
  cfg.steps = 4;
  cfg.setting = losses::SettingKind::pairwise();
  Rng init_rng(3);
  const auto field = scorenet::init<double>(cfg, init_rng);
  const auto sched = schedule::Schedule::geometric(1e-3, 10.0, 4);
  sampler::SamplerConfig sampler_cfg;
  sampler_cfg.steps = 4;

  const auto a = evaldata::evaluate(field, ds, ds.test_split, sampler_cfg, sched,
                                    {5, 10}, 99, 1);
  const auto b = evaldata::evaluate(field, ds, ds.test_split, sampler_cfg, sched,
                                    {5, 10}, 99, 4);
  REQUIRE(a.ranks == b.ranks);
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    REQUIRE(a.metrics[i].hr == b.metrics[i].hr);
    REQUIRE(a.metrics[i].ndcg == b.metrics[i].ndcg);
  }
  REQUIRE_THROWS_AS(evaldata::evaluate(field, ds, {}, sampler_cfg, sched, {5},
                                       99, 1),
                    DataError);
}
