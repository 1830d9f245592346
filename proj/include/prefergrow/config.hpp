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

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "prefergrow/errors.hpp"
#include "prefergrow/losses.hpp"
#include "prefergrow/sampler.hpp"
#include "prefergrow/schedule.hpp"
#include "prefergrow/train.hpp"

namespace prefergrow::config {

/// Flat key=value configuration with defaults, file loading, and override
/// precedence: command-line flag > config file > default. Unknown keys are
/// rejected. The resolved state can be echoed back to a file that, fed in
/// again, reproduces the run.
class RunConfig {
 public:
  RunConfig() { values_ = defaults(); }

  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> table = {
        {"seed", "100"},
        {"threads", "1"},
        {"out_dir", "out"},
        {"data_path", ""},
        {"checkpoint_path", ""},
        {"schedule.kind", "geometric"},
        {"schedule.beta_min", "0.001"},
        {"schedule.beta_max", "10"},
        {"schedule.beta_scale", "0.001"},
        {"schedule.steps", "20"},
        {"loss.setting", "pairwise"},
        {"loss.n_lambda", "3"},
        {"loss.adaptive_virtual_item", "true"},
        {"loss.include_beta", "true"},
        {"model.dim", "64"},
        {"model.blocks", "1"},
        {"train.nonpref_prob", "0.1"},
        {"train.batch_size", "256"},
        {"train.lr", "0.001"},
        {"train.max_epochs", "200"},
        {"train.patience", "20"},
        {"train.eval_ks", "1,5,10,20"},
        {"sampler.w", "0"},
        {"sampler.steps", "0"},  // 0 means: follow schedule.steps
        {"sampler.avg_trajectories", "1"},
        {"synth.n", "50"},
        {"synth.count", "3000"},
        {"synth.noise", "0"},
        {"eval.split", "test"},
        {"sample.top_k", "10"},
        {"sample.max_users", "0"},  // 0 means: the whole split
    };
    return table;
  }

  void set(const std::string& key, const std::string& value) {
    if (defaults().find(key) == defaults().end())
      throw ConfigError("unknown configuration key '" + key + "'");
    values_[key] = value;
  }

  void load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::string line;
    int line_number = 0;
    while (std::getline(is, line)) {
      ++line_number;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const auto trim = [](std::string s) {
        const auto begin = s.find_first_not_of(" \t\r");
        if (begin == std::string::npos) return std::string();
        const auto end = s.find_last_not_of(" \t\r");
        return s.substr(begin, end - begin + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(line_number) +
                          ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      set(key, value);
    }
  }

  const std::string& raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end())
      throw ConfigError("unknown configuration key '" + key + "'");
    return it->second;
  }

  std::string get_string(const std::string& key) const { return raw(key); }

  long long get_int(const std::string& key) const {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(raw(key), &used);
      if (used != raw(key).size()) throw std::invalid_argument("junk");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "' is not an integer: " + raw(key));
    }
  }

  double get_double(const std::string& key) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(raw(key), &used);
      if (used != raw(key).size()) throw std::invalid_argument("junk");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "' is not a number: " + raw(key));
    }
  }

  bool get_bool(const std::string& key) const {
    const std::string& v = raw(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key '" + key + "' is not a boolean: " + v);
  }

  std::vector<int> get_int_list(const std::string& key) const {
    std::vector<int> out;
    std::stringstream ss(raw(key));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) continue;
      try {
        out.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' holds a malformed list: " + raw(key));
      }
    }
    if (out.empty()) throw ConfigError("key '" + key + "' holds an empty list");
    return out;
  }

  std::uint64_t seed() const { return static_cast<std::uint64_t>(get_int("seed")); }
  int threads() const { return static_cast<int>(get_int("threads")); }
  std::string out_dir() const { return get_string("out_dir"); }

  std::string data_path() const {
    const std::string explicit_path = get_string("data_path");
    return explicit_path.empty() ? out_dir() + "/dataset.txt" : explicit_path;
  }

  std::string checkpoint_path() const {
    const std::string explicit_path = get_string("checkpoint_path");
    return explicit_path.empty() ? out_dir() + "/checkpoint.bin" : explicit_path;
  }

  schedule::Schedule make_schedule() const {
    const std::string kind = get_string("schedule.kind");
    const int steps = static_cast<int>(get_int("schedule.steps"));
    if (kind == "geometric")
      return schedule::Schedule::geometric(get_double("schedule.beta_min"),
                                           get_double("schedule.beta_max"), steps);
    if (kind == "linear")
      return schedule::Schedule::linear(get_double("schedule.beta_scale"), steps);
    throw ConfigError("schedule.kind must be geometric or linear, got " + kind);
  }

  losses::SettingKind make_setting() const {
    const std::string kind = get_string("loss.setting");
    if (kind == "pointwise") return losses::SettingKind::pointwise();
    if (kind == "pairwise") return losses::SettingKind::pairwise();
    if (kind == "hybrid")
      return losses::SettingKind::hybrid(static_cast<int>(get_int("loss.n_lambda")));
    if (kind == "adaptive")
      return losses::SettingKind::adaptive(get_bool("loss.adaptive_virtual_item"));
    throw ConfigError(
        "loss.setting must be pointwise, pairwise, hybrid or adaptive, got " +
        kind);
  }

  train::TrainConfig make_train_config() const {
    train::TrainConfig cfg;
    cfg.setting = make_setting();
    cfg.nonpref_prob = get_double("train.nonpref_prob");
    cfg.batch_size = static_cast<int>(get_int("train.batch_size"));
    cfg.lr = get_double("train.lr");
    cfg.max_epochs = static_cast<int>(get_int("train.max_epochs"));
    cfg.patience = static_cast<int>(get_int("train.patience"));
    cfg.seed = seed();
    cfg.sched = make_schedule();
    cfg.eval_ks = get_int_list("train.eval_ks");
    cfg.include_beta = get_bool("loss.include_beta");
    cfg.threads = threads();
    cfg.dim = static_cast<int>(get_int("model.dim"));
    cfg.blocks = static_cast<int>(get_int("model.blocks"));
    cfg.eval_guidance = get_double("sampler.w");
    cfg.validate();
    return cfg;
  }

  sampler::SamplerConfig make_sampler_config() const {
    sampler::SamplerConfig cfg;
    const int steps = static_cast<int>(get_int("sampler.steps"));
    cfg.steps = steps > 0 ? steps : static_cast<int>(get_int("schedule.steps"));
    cfg.guidance = get_double("sampler.w");
    cfg.avg_trajectories = static_cast<int>(get_int("sampler.avg_trajectories"));
    return cfg;
  }

  /// Fully-resolved key=value dump, sorted, suitable for --config.
  std::string echo() const {
    std::ostringstream os;
    for (const auto& [key, value] : values_) os << key << " = " << value << "\n";
    return os.str();
  }

  void write_echo(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write resolved config: " + path);
    os << echo();
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace prefergrow::config
