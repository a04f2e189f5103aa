// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <memory>

#include "common.hpp"
#include "snoopi/io/format.hpp"
#include "snoopi/io/setup.hpp"
#include "snoopi/model/training.hpp"
#include "snoopi/oracle/task.hpp"

namespace snoopi::cli {

namespace {

struct TrainArgs {
  ConfigOptions config;
  std::string out;
  std::string loss_csv;
  std::string init;
  std::optional<long> steps;
};

int run_train(const TrainArgs& a) {
  std::vector<std::pair<std::string, std::string>> flags;
  if (a.steps) flags.emplace_back("train.steps", std::to_string(*a.steps));
  const io::RunConfig cfg = a.config.build(flags);
  const auto schedule = io::schedule_from(cfg);
  const auto gm = io::mixture_from(cfg);
  const auto policy = io::prompt_policy_from(cfg);
  const auto train = io::teacher_config_from(cfg);
  const std::uint64_t seed = train.seed;

  model::DenoiserModel teacher(io::model_config_from(cfg), seed, model::Role::teacher);
  if (!a.init.empty()) {
    io::Checkpoint start = load_model(a.init, &cfg);
    teacher = std::move(start.model);
    teacher.set_role(model::Role::teacher);
    teacher.set_trainable(true);
  }
  const std::string csv_path = a.loss_csv.empty() ? a.out + ".loss.csv" : a.loss_csv;
  ensure_parent(a.out);
  ensure_parent(csv_path);

  const std::vector<double> losses =
      model::train_teacher(teacher, oracle::make_training_source(gm, policy), schedule, train);
  std::string csv = provenance_of(cfg) + "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) csv += std::to_string(i) + "," + io::format_double(losses[i]) + "\n";
  write_text(csv_path, csv);
  try {
    io::save_checkpoint(a.out, teacher, io::checkpoint_meta(cfg, model::Role::teacher));
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }

  const auto n = static_cast<std::size_t>(cfg.integer("train.eval_samples"));
  if (n > 0) {
    const oracle::EpsBenchmark b = oracle::heldout_eps_mse(teacher, gm, schedule, n, derive_seed(seed, 90), policy);
    std::printf("held-out eps MSE %s, zero predictor %s, reduction %s\n", io::format_double(b.model_mse).c_str(),
                io::format_double(b.zero_mse).c_str(), io::format_double(b.reduction()).c_str());
  }
  std::printf("wrote %s and %s (seed %llu, config %s)\n", a.out.c_str(), csv_path.c_str(),
              static_cast<unsigned long long>(seed), io::hex64(cfg.hash()).c_str());
  return kExitOk;
}

}  // namespace

CLI::App* add_train_teacher(CLI::App& app, int& exit_code) {
  auto args = std::make_shared<TrainArgs>();
  CLI::App* sub = app.add_subcommand("train-teacher", "train the conditional teacher on the oracle mixture");
  args->config.attach(*sub);
  sub->add_option("--out", args->out, "teacher checkpoint path")->required();
  sub->add_option("--loss-csv", args->loss_csv, "per-step loss CSV (default <out>.loss.csv)");
  sub->add_option("--init", args->init, "start from this checkpoint's parameters");
  sub->add_option("--steps", args->steps, "optimizer steps (train.steps)");
  sub->callback([args, &exit_code] { exit_code = run_train(*args); });
  return sub;
}

}  // namespace snoopi::cli
