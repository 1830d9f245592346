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

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "prefergrow/prefergrow.hpp"

namespace pg = prefergrow;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
  std::string config_file;
  std::string seed, out_dir, threads, setting, guidance, steps;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_file, "key = value config file");
  cmd->add_option("--seed", flags.seed, "master random seed");
  cmd->add_option("--out-dir", flags.out_dir, "output directory");
  cmd->add_option("--threads", flags.threads, "worker threads (results are thread-count invariant)");
  cmd->add_option("--setting", flags.setting,
                  "loss setting: pointwise|pairwise|hybrid|adaptive");
  cmd->add_option("--w", flags.guidance, "personalization strength");
  cmd->add_option("--steps", flags.steps, "timestep grid size");
}

pg::config::RunConfig resolve(const CommonFlags& flags,
                              const std::vector<std::pair<std::string, std::string>>&
                                  extra_overrides) {
  pg::config::RunConfig cfg;
  if (!flags.config_file.empty()) cfg.load_file(flags.config_file);
  if (!flags.seed.empty()) cfg.set("seed", flags.seed);
  if (!flags.out_dir.empty()) cfg.set("out_dir", flags.out_dir);
  if (!flags.threads.empty()) cfg.set("threads", flags.threads);
  if (!flags.setting.empty()) cfg.set("loss.setting", flags.setting);
  if (!flags.guidance.empty()) cfg.set("sampler.w", flags.guidance);
  if (!flags.steps.empty()) cfg.set("schedule.steps", flags.steps);
  for (const auto& [key, value] : extra_overrides)
    if (!value.empty()) cfg.set(key, value);
  return cfg;
}

void prepare_out_dir(const pg::config::RunConfig& cfg, const std::string& command) {
  fs::create_directories(cfg.out_dir());
  cfg.write_echo(cfg.out_dir() + "/resolved_" + command + ".cfg");
}

std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

int cmd_verify(const pg::config::RunConfig& cfg, const std::string& filter) {
  const auto results = pg::verify::run(filter, cfg.seed());
  if (results.empty()) {
    std::cerr << "no verification suite matches '" << filter << "'\n";
    return kExitUsage;
  }
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("[%s] %-24s max_err=%.3e  tol=%.0e  %s\n",
                r.pass ? "PASS" : "FAIL", r.name.c_str(), r.max_error,
                r.tolerance, r.note.c_str());
    all_pass = all_pass && r.pass;
  }
  std::printf("%zu suite(s): %s\n", results.size(), all_pass ? "all passed" : "FAILURES");
  return all_pass ? kExitOk : kExitVerificationFailure;
}

int cmd_synth(const pg::config::RunConfig& cfg) {
  prepare_out_dir(cfg, "synth");
  pg::Rng rng(cfg.seed());
  const auto ds = pg::evaldata::synth_cycle(
      static_cast<int>(cfg.get_int("synth.n")),
      static_cast<int>(cfg.get_int("synth.count")), cfg.get_double("synth.noise"),
      rng);
  pg::evaldata::save(ds, cfg.data_path());
  std::printf("wrote %zu sequences over %d items to %s\n", ds.sequences.size(),
              ds.num_items, cfg.data_path().c_str());
  return kExitOk;
}

int cmd_train(const pg::config::RunConfig& cfg) {
  prepare_out_dir(cfg, "train");
  const auto dataset = pg::evaldata::load(cfg.data_path());
  auto train_cfg = cfg.make_train_config();
  pg::Rng rng(cfg.seed());
  const auto result = pg::train::train(dataset, train_cfg, rng);

  const std::string log_path = cfg.out_dir() + "/train_log.csv";
  std::ofstream log(log_path);
  log << "epoch,train_loss,val_HR@5,val_NDCG@5,val_HR@10,val_NDCG@10,clamp_rate\n";
  for (const auto& row : result.history)
    log << row.epoch << ',' << format_double(row.train_loss) << ','
        << format_double(row.val_hr5) << ',' << format_double(row.val_ndcg5) << ','
        << format_double(row.val_hr10) << ',' << format_double(row.val_ndcg10)
        << ',' << format_double(row.clamp_rate) << "\n";
  log.close();

  pg::scorenet::save_checkpoint(result.field, cfg.checkpoint_path());
  std::printf("trained %zu epoch(s); best epoch %d (combined metric %s)\n",
              result.history.size(), result.best_epoch,
              format_double(result.best_metric).c_str());
  std::printf("training log: %s\ncheckpoint:  %s\n", log_path.c_str(),
              cfg.checkpoint_path().c_str());
  return kExitOk;
}

const std::vector<int>& pick_split(const pg::evaldata::InteractionDataset& ds,
                                   const std::string& name) {
  if (name == "train") return ds.train_split;
  if (name == "valid") return ds.valid_split;
  if (name == "test") return ds.test_split;
  throw pg::ConfigError("eval.split must be train, valid or test, got " + name);
}

int cmd_eval(const pg::config::RunConfig& cfg) {
  if (!fs::exists(cfg.checkpoint_path()))
    throw pg::ConfigError("checkpoint not found: " + cfg.checkpoint_path());
  prepare_out_dir(cfg, "eval");
  const auto field = pg::scorenet::load_checkpoint<double>(cfg.checkpoint_path());
  const auto dataset = pg::evaldata::load(cfg.data_path());
  const auto& split = pick_split(dataset, cfg.get_string("eval.split"));
  const auto result = pg::evaldata::evaluate(
      field, dataset, split, cfg.make_sampler_config(), cfg.make_schedule(),
      cfg.get_int_list("train.eval_ks"), cfg.seed(), cfg.threads());

  const std::string path = cfg.out_dir() + "/metrics.csv";
  std::ofstream os(path);
  os << "K,HR,NDCG\n";
  for (const auto& row : result.metrics)
    os << row.k << ',' << format_double(row.hr) << ',' << format_double(row.ndcg)
       << "\n";
  os.close();

  for (const auto& row : result.metrics)
    std::printf("K=%-3d HR=%.4f NDCG=%.4f\n", row.k, row.hr, row.ndcg);
  std::printf("metrics: %s\n", path.c_str());
  return kExitOk;
}

int cmd_sample(const pg::config::RunConfig& cfg) {
  if (!fs::exists(cfg.checkpoint_path()))
    throw pg::ConfigError("checkpoint not found: " + cfg.checkpoint_path());
  prepare_out_dir(cfg, "sample");
  const auto field = pg::scorenet::load_checkpoint<double>(cfg.checkpoint_path());
  const auto dataset = pg::evaldata::load(cfg.data_path());
  const auto& split = pick_split(dataset, cfg.get_string("eval.split"));
  const auto sampler_cfg = cfg.make_sampler_config();
  const auto sched = cfg.make_schedule();
  const int top_k = static_cast<int>(cfg.get_int("sample.top_k"));
  const long long max_users = cfg.get_int("sample.max_users");

  const auto target = field.current_target();
  const auto fm = pg::fading::build_rank1(target);

  const std::string path = cfg.out_dir() + "/topk.csv";
  std::ofstream os(path);
  os << "user_index,rank,item,score\n";
  long long done = 0;
  for (int seq_index : split) {
    if (max_users > 0 && done >= max_users) break;
    const auto& seq = dataset.sequences[seq_index];
    pg::scorenet::UserContext ctx{seq.history, false};
    pg::Rng rng = pg::Rng::stream(cfg.seed(), static_cast<std::uint64_t>(seq_index));
    const auto gen = pg::sampler::generate(field, ctx, sampler_cfg, sched, target,
                                           fm, rng);
    const int limit = std::min<int>(top_k, static_cast<int>(gen.ranking.size()));
    for (int rank = 1; rank <= limit; ++rank) {
      const int item = gen.ranking[rank - 1];
      os << seq_index << ',' << rank << ',' << item << ','
         << format_double(gen.distribution[item]) << "\n";
    }
    ++done;
  }
  os.close();
  std::printf("wrote top-%d lists for %lld user(s) to %s\n", top_k, done,
              path.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "prefergrow: discrete-diffusion preference engine "
      "(verify | synth | train | sample | eval)"};
  app.require_subcommand(1);

  CommonFlags verify_flags, synth_flags, train_flags, sample_flags, eval_flags;
  std::string filter;
  std::string synth_n, synth_count, synth_noise;
  std::string data_path_train, data_path_eval, data_path_sample;
  std::string ckpt_eval, ckpt_sample;
  std::string epochs, lr, batch, dim, patience, nonpref_prob;
  std::string split_eval, split_sample, top_k, max_users;

  auto* verify_cmd = app.add_subcommand("verify", "run the numerical verification suites");
  add_common(verify_cmd, verify_flags);
  verify_cmd->add_option("--filter", filter, "run only suites whose name contains this");

  auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic benchmark dataset");
  add_common(synth_cmd, synth_flags);
  synth_cmd->add_option("--n", synth_n, "corpus size");
  synth_cmd->add_option("--count", synth_count, "number of sequences");
  synth_cmd->add_option("--noise", synth_noise, "target noise in [0,1)");

  auto* train_cmd = app.add_subcommand("train", "train the score network");
  add_common(train_cmd, train_flags);
  train_cmd->add_option("--data", data_path_train, "dataset file");
  train_cmd->add_option("--epochs", epochs, "maximum epochs");
  train_cmd->add_option("--lr", lr, "learning rate");
  train_cmd->add_option("--batch", batch, "batch size");
  train_cmd->add_option("--dim", dim, "embedding width");
  train_cmd->add_option("--patience", patience, "early-stopping patience");
  train_cmd->add_option("--nonpref-prob", nonpref_prob,
                        "non-preference user dropout probability");

  auto* sample_cmd = app.add_subcommand("sample", "emit top-K recommendations");
  add_common(sample_cmd, sample_flags);
  sample_cmd->add_option("--data", data_path_sample, "dataset file");
  sample_cmd->add_option("--checkpoint", ckpt_sample, "trained checkpoint");
  sample_cmd->add_option("--split", split_sample, "train|valid|test");
  sample_cmd->add_option("--top-k", top_k, "list length");
  sample_cmd->add_option("--max-users", max_users, "limit the number of users");

  auto* eval_cmd = app.add_subcommand("eval", "all-rank evaluation of a checkpoint");
  add_common(eval_cmd, eval_flags);
  eval_cmd->add_option("--data", data_path_eval, "dataset file");
  eval_cmd->add_option("--checkpoint", ckpt_eval, "trained checkpoint");
  eval_cmd->add_option("--split", split_eval, "train|valid|test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (verify_cmd->parsed())
      return cmd_verify(resolve(verify_flags, {}), filter);
    if (synth_cmd->parsed())
      return cmd_synth(resolve(synth_flags, {{"synth.n", synth_n},
                                             {"synth.count", synth_count},
                                             {"synth.noise", synth_noise}}));
    if (train_cmd->parsed())
      return cmd_train(resolve(train_flags, {{"data_path", data_path_train},
                                             {"train.max_epochs", epochs},
                                             {"train.lr", lr},
                                             {"train.batch_size", batch},
                                             {"model.dim", dim},
                                             {"train.patience", patience},
                                             {"train.nonpref_prob", nonpref_prob}}));
    if (sample_cmd->parsed())
      return cmd_sample(resolve(sample_flags, {{"data_path", data_path_sample},
                                               {"checkpoint_path", ckpt_sample},
                                               {"eval.split", split_sample},
                                               {"sample.top_k", top_k},
                                               {"sample.max_users", max_users}}));
    if (eval_cmd->parsed())
      return cmd_eval(resolve(eval_flags, {{"data_path", data_path_eval},
                                           {"checkpoint_path", ckpt_eval},
                                           {"eval.split", split_eval}}));
  } catch (const pg::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const pg::MagnitudeError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const pg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
