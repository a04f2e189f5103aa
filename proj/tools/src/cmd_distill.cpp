// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <memory>

#include "common.hpp"
#include "snoopi/distill/evaluate.hpp"
#include "snoopi/experiments.hpp"
#include "snoopi/io/format.hpp"
#include "snoopi/io/setup.hpp"
#include "snoopi/io/table.hpp"

namespace snoopi::cli {

namespace {

/// Flags shared by `distill` and `ablate` that map onto distill.* keys.
struct DistillFlags {
  std::optional<std::string> mode;
  std::optional<double> kappa_fixed;
  std::vector<double> kappa_range;
  std::optional<int> lora_updates;
  std::optional<long> steps;

  void attach(CLI::App& sub, bool with_mode) {
    if (with_mode)
      sub.add_option("--mode", mode, "roles with random kappa")
          ->check(CLI::IsMember({"none", "teacher", "lora", "both"}));
    sub.add_option("--kappa-fixed", kappa_fixed, "kappa for fixed roles (distill.kappa_fixed)");
    sub.add_option("--kappa-range", kappa_range, "interval for random roles (distill.kappa_min, distill.kappa_max)")
        ->expected(2);
    sub.add_option("--lora-updates-per-step", lora_updates, "LoRA-teacher steps per student step");
    sub.add_option("--steps", steps, "student steps (distill.steps)");
  }

  std::vector<std::pair<std::string, std::string>> values() const {
    std::vector<std::pair<std::string, std::string>> v;
    if (mode) v.emplace_back("distill.mode", *mode);
    if (kappa_fixed) v.emplace_back("distill.kappa_fixed", io::format_double(*kappa_fixed));
    if (kappa_range.size() == 2) {
      v.emplace_back("distill.kappa_min", io::format_double(kappa_range[0]));
      v.emplace_back("distill.kappa_max", io::format_double(kappa_range[1]));
    }
    if (lora_updates) v.emplace_back("distill.lora_updates", std::to_string(*lora_updates));
    if (steps) v.emplace_back("distill.steps", std::to_string(*steps));
    return v;
  }
};

struct DistillArgs {
  ConfigOptions config;
  DistillFlags flags;
  std::string teacher;
  std::string out;
  std::string trace;
  std::string lora_out;
};

int run_distill(const DistillArgs& a) {
  const io::RunConfig cfg = a.config.build(a.flags.values());
  const auto schedule = io::schedule_from(cfg);
  const auto gm = io::mixture_from(cfg);
  const auto dcfg = io::distill_config_from(cfg);
  const auto prompts = io::parse_prompt_list(cfg.text("distill.prompts"));
  const io::Checkpoint teacher = load_model(a.teacher);
  const std::string trace_path = a.trace.empty() ? a.out + ".trace.csv" : a.trace;
  ensure_parent(a.out);
  ensure_parent(trace_path);

  const distill::Evaluator evaluator = distill::make_evaluator(gm, schedule, io::eval_protocol_from(cfg, prompts));
  const distill::DistillResult result = distill::distill(dcfg, teacher.model, prompts, schedule, evaluator);

  write_text(trace_path, provenance_of(cfg) + distill::DistillTrace::csv_header() + "\n" + result.trace.csv_body());
  try {
    io::save_checkpoint(a.out, result.student, io::checkpoint_meta(cfg, model::Role::student));
    if (!a.lora_out.empty())
      io::save_checkpoint(a.lora_out, result.lora_teacher, io::checkpoint_meta(cfg, model::Role::lora_teacher));
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  const auto& last = result.trace.records.back();
  if (last.eval)
    std::printf("final fd %s precision %s recall %s alignment %s\n", io::format_double(last.eval->fd).c_str(),
                io::format_double(last.eval->precision).c_str(), io::format_double(last.eval->recall).c_str(),
                io::format_double(last.eval->alignment).c_str());
  std::printf("wrote %s and %s (%ld skipped steps)\n", a.out.c_str(), trace_path.c_str(), result.trace.skipped_steps);
  return kExitOk;
}

struct AblateArgs {
  ConfigOptions config;
  DistillFlags flags;
  std::string teacher;
  std::string out_dir;
  std::vector<std::string> modes{"none", "teacher", "lora", "both"};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t jobs = 1;
  std::size_t final_samples = 8192;
};

int run_ablate(const AblateArgs& a) {
  const io::RunConfig cfg = a.config.build(a.flags.values());
  const auto schedule = io::schedule_from(cfg);
  const auto gm = io::mixture_from(cfg);
  const auto prompts = io::parse_prompt_list(cfg.text("distill.prompts"));
  const io::Checkpoint teacher = load_model(a.teacher);

  std::vector<experiments::DistillArm> arms;
  for (const std::string& mode : a.modes) {
    io::RunConfig arm_cfg = cfg;
    arm_cfg.set("distill.mode", mode);
    arms.push_back({mode, io::distill_config_from(arm_cfg)});
  }
  experiments::ArmOptions options;
  options.protocol = io::eval_protocol_from(cfg, prompts);
  options.final_samples = a.final_samples;
  options.jobs = a.jobs;
  const std::vector<experiments::DistillRun> runs =
      experiments::run_arms(arms, a.seeds, teacher.model, prompts, schedule, gm, options);

  const std::filesystem::path dir(a.out_dir);
  for (const experiments::DistillRun& r : runs) {
    const std::string stem = r.arm + "_seed" + std::to_string(r.seed);
    write_text(dir / (stem + ".trace.csv"), io::provenance(r.seed, cfg.hash()) + distill::DistillTrace::csv_header() + "\n" +
                                                r.result.trace.csv_body());
    io::CheckpointMeta meta = io::checkpoint_meta(cfg, model::Role::student);
    meta.seed = r.seed;
    io::save_checkpoint(dir / (stem + ".snpk"), r.result.student, meta);
  }
  write_text(dir / "summary.csv", provenance_of(cfg) + experiments::runs_csv(runs));

  std::string stats = provenance_of(cfg) + "arm,mean_final_fd,std_final_fd\n";
  for (const experiments::DistillArm& arm : arms) {
    std::vector<double> fds;
    for (const auto& r : runs)
      if (r.arm == arm.name) fds.push_back(r.final_eval.fd);
    const experiments::MeanStd ms = experiments::mean_std(fds);
    stats += arm.name + "," + io::format_double(ms.mean) + "," + io::format_double(ms.std) + "\n";
    std::printf("%-8s mean final fd %.4f  std %.4f\n", arm.name.c_str(), ms.mean, ms.std);
  }
  write_text(dir / "arms.csv", stats);
  std::printf("wrote %zu runs to %s\n", runs.size(), a.out_dir.c_str());
  return kExitOk;
}

}  // namespace

CLI::App* add_distill(CLI::App& app, int& exit_code) {
  auto args = std::make_shared<DistillArgs>();
  CLI::App* sub = app.add_subcommand("distill", "distill a one-step student from a teacher checkpoint");
  args->config.attach(*sub);
  args->flags.attach(*sub, true);
  sub->add_option("--teacher", args->teacher, "teacher checkpoint")->required();
  sub->add_option("--out", args->out, "student checkpoint path")->required();
  sub->add_option("--trace", args->trace, "trace CSV (default <out>.trace.csv)");
  sub->add_option("--lora-out", args->lora_out, "also save the final LoRA teacher here");
  sub->callback([args, &exit_code] { exit_code = run_distill(*args); });
  return sub;
}

CLI::App* add_ablate(CLI::App& app, int& exit_code) {
  auto args = std::make_shared<AblateArgs>();
  CLI::App* sub = app.add_subcommand("ablate", "distill every (mode, seed) pair and summarise final metrics");
  args->config.attach(*sub);
  args->flags.attach(*sub, false);
  sub->add_option("--teacher", args->teacher, "teacher checkpoint")->required();
  sub->add_option("--out-dir", args->out_dir, "directory for traces, students and summaries")->required();
  sub->add_option("--modes", args->modes, "modes to run")
      ->delimiter(',')
      ->check(CLI::IsMember({"none", "teacher", "lora", "both"}));
  sub->add_option("--seeds", args->seeds, "run seeds")->delimiter(',');
  sub->add_option("--jobs", args->jobs, "runs executed concurrently")->check(CLI::PositiveNumber);
  sub->add_option("--final-samples", args->final_samples, "samples for the final evaluation");
  sub->callback([args, &exit_code] { exit_code = run_ablate(*args); });
  return sub;
}

}  // namespace snoopi::cli
