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

#include <filesystem>
#include <fstream>

#include "prefergrow/config.hpp"

using namespace prefergrow;
using config::RunConfig;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "prefergrow_config_test";
  fs::create_directories(dir);
  const std::string path = (dir / name).string();
  std::ofstream os(path);
  os << content;
  return path;
}

}  // namespace

TEST_CASE("defaults resolve without any input", "[config]") {
  RunConfig cfg;
  REQUIRE(cfg.seed() == 100);
  REQUIRE(cfg.threads() == 1);
  REQUIRE(cfg.get_int("schedule.steps") == 20);
  REQUIRE(cfg.get_string("loss.setting") == "pairwise");
  REQUIRE(cfg.data_path() == "out/dataset.txt");
  REQUIRE(cfg.checkpoint_path() == "out/checkpoint.bin");
}

TEST_CASE("unknown keys are rejected", "[config][errors]") {
  RunConfig cfg;
  REQUIRE_THROWS_AS(cfg.set("tpyo", "1"), ConfigError);
  const auto path = write_temp("unknown.cfg", "no_such_key = 3\n");
  RunConfig other;
  REQUIRE_THROWS_AS(other.load_file(path), ConfigError);
}

TEST_CASE("files support comments and whitespace", "[config]") {
  const auto path = write_temp("ok.cfg",
                               "# a comment\n"
                               "  seed = 7   # trailing comment\n"
                               "\n"
                               "schedule.kind=linear\n"
                               "schedule.beta_scale = 0.01\n");
  RunConfig cfg;
  cfg.load_file(path);
  REQUIRE(cfg.seed() == 7);
  REQUIRE(cfg.make_schedule().kind == schedule::ScheduleKind::Linear);
  REQUIRE(cfg.make_schedule().beta_scale == Catch::Approx(0.01));
}

TEST_CASE("later overrides win", "[config]") {
  const auto path = write_temp("prec.cfg", "seed = 7\nthreads = 3\n");
  RunConfig cfg;
  cfg.load_file(path);
  cfg.set("seed", "9");  // command-line override
  REQUIRE(cfg.seed() == 9);
  REQUIRE(cfg.threads() == 3);
}

TEST_CASE("typed getters validate their input", "[config][errors]") {
  RunConfig cfg;
  cfg.set("seed", "abc");
  REQUIRE_THROWS_AS(cfg.seed(), ConfigError);
  cfg.set("loss.include_beta", "maybe");
  REQUIRE_THROWS_AS(cfg.get_bool("loss.include_beta"), ConfigError);
  cfg.set("train.eval_ks", "5,x");
  REQUIRE_THROWS_AS(cfg.get_int_list("train.eval_ks"), ConfigError);
  cfg.set("schedule.kind", "cosine");
  REQUIRE_THROWS_AS(cfg.make_schedule(), ConfigError);
  cfg.set("loss.setting", "entropy");
  REQUIRE_THROWS_AS(cfg.make_setting(), ConfigError);
}

TEST_CASE("the echoed config reproduces itself", "[config]") {
  RunConfig cfg;
  cfg.set("seed", "123");
  cfg.set("loss.setting", "hybrid");
  cfg.set("loss.n_lambda", "2");
  const auto path = write_temp("echo.cfg", "");
  cfg.write_echo(path);

  RunConfig reloaded;
  reloaded.load_file(path);
  REQUIRE(reloaded.echo() == cfg.echo());
  REQUIRE(reloaded.make_setting().kind == losses::SettingKind::Kind::Hybrid);
  REQUIRE(reloaded.make_setting().n_lambda == 2);
}

TEST_CASE("composite objects inherit the resolved values", "[config]") {
  RunConfig cfg;
  cfg.set("train.batch_size", "32");
  cfg.set("train.lr", "0.01");
  cfg.set("model.dim", "16");
  cfg.set("sampler.w", "2.5");
  const auto train_cfg = cfg.make_train_config();
  REQUIRE(train_cfg.batch_size == 32);
  REQUIRE(train_cfg.lr == Catch::Approx(0.01));
  REQUIRE(train_cfg.dim == 16);
  REQUIRE(train_cfg.eval_guidance == Catch::Approx(2.5));

  const auto sampler_cfg = cfg.make_sampler_config();
  REQUIRE(sampler_cfg.guidance == Catch::Approx(2.5));
  REQUIRE(sampler_cfg.steps == 20);  // follows schedule.steps when unset
  cfg.set("sampler.steps", "7");
  REQUIRE(cfg.make_sampler_config().steps == 7);
}
