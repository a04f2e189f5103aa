// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snoopi/ad/optimizer.hpp"
#include "snoopi/diffusion/guidance.hpp"
#include "snoopi/diffusion/schedule.hpp"
#include "snoopi/model/denoiser.hpp"
#include "snoopi/rng.hpp"

namespace snoopi::distill {

/// Which roles draw a random guidance scale: the four ablation rows.
enum class AblationMode { none, teacher, lora, both };
AblationMode parse_ablation_mode(std::string_view text);
std::string_view to_string(AblationMode mode);

/// Per-timestep weight w(t) on the score difference.
enum class Weighting { constant, sigma_squared };
Weighting parse_weighting(std::string_view text);
std::string_view to_string(Weighting weighting);

/// Which parameters evaluate the LoRA teacher's unconditional branch.
enum class LoraNullBranch { lora, base };

struct DistillConfig {
  /// Guidance for the frozen teacher and for the LoRA teacher. The `seed`
  /// fields are ignored; draws come from the run seed.
  diffusion::GuidanceConfig frozen_guidance = diffusion::GuidanceConfig::uniform(0.5, 4.0);
  diffusion::GuidanceConfig lora_guidance = diffusion::GuidanceConfig::uniform(0.5, 4.0);
  /// One shared uniform draw per step, mapped into each random role's range.
  bool independent_kappa = false;
  Weighting weighting = Weighting::sigma_squared;
  LoraNullBranch lora_null_branch = LoraNullBranch::lora;
  int t_min = 20;
  int t_max = 980;
  int lora_updates = 1;
  double student_lr = 1e-4;
  double lora_lr = 1e-3;
  double weight_decay = 0.0;
  std::size_t batch = 64;
  long steps = 2000;
  std::uint64_t seed = 0;
  model::LoraConfig lora{64, 128.0, 0};
  long eval_every = 500;
  double max_skip_fraction = 0.01;

  /// Sets both roles' guidance from an ablation row: random roles use
  /// U(kappa_min, kappa_max), fixed ones use kappa_fixed.
  void set_mode(AblationMode mode, double kappa_fixed, double kappa_min, double kappa_max);
  /// Throws ConfigError on inverted intervals, t range outside (0, T), k < 1.
  void validate(int T) const;
  /// The standard t range [0.02 T, 0.98 T].
  static std::pair<int, int> default_t_range(int T);
};

/// kappa for one step: the constant in fixed mode, U(kappa_min, kappa_max) otherwise.
double sample_guidance_scale(const diffusion::GuidanceConfig& guidance, Rng& rng);

/// Maps a uniform [0, 1) draw into the guidance interval.
double guidance_from_unit(const diffusion::GuidanceConfig& guidance, double u);

struct EvalSummary {
  double fd = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double alignment = 0.0;
};

struct StepRecord {
  long step = 0;
  double kappa_frozen = 0.0;
  double kappa_lora = 0.0;
  double lora_loss = 0.0;
  double grad_norm = 0.0;
  int timestep = 0;
  bool skipped = false;
  std::optional<EvalSummary> eval;
};

struct DistillTrace {
  std::vector<StepRecord> records;
  long skipped_steps = 0;

  static std::string csv_header();
  std::string csv_body() const;
};

/// d = w(t) (guided eps_psi - guided eps_phi) at (x_t, t, prompt).
ad::Array vsd_direction(const model::DenoiserModel& frozen, const model::DenoiserModel& lora_teacher,
                        const ad::Array& x_t, int t, const model::Prompt& prompt, double kappa_frozen,
                        double kappa_lora, double weight, LoraNullBranch null_branch = LoraNullBranch::lora);

/// <stop_grad(d), x0> averaged over rows.
ad::Var vsd_surrogate(ad::Var x0, const ad::Array& direction);

double timestep_weight(Weighting weighting, const diffusion::NoiseSchedule& schedule, int t);

/// Random streams used by one distillation run.
struct DistillStreams {
  explicit DistillStreams(std::uint64_t seed);
  Rng noise;
  Rng prompts;
  Rng timesteps;
  Rng eps;
  Rng kappa;
  Rng lora;
};

/// One student update. When the direction or the gradient is non-finite the
/// record is marked skipped and the optimizer is left untouched.
StepRecord vsd_student_step(model::DenoiserModel& student, const model::DenoiserModel& frozen,
                            const model::DenoiserModel& lora_teacher, std::span<const model::Prompt> prompts,
                            const DistillConfig& config, const diffusion::NoiseSchedule& schedule,
                            ad::AdamW& optimizer, DistillStreams& streams);

/// One optimizer step of the LoRA teacher's denoising loss on a detached x0
/// batch with fresh (t', eps'). Conditional branch only. Returns the loss.
double lora_teacher_step(model::DenoiserModel& lora_teacher, const ad::Array& x0,
                         std::span<const model::Prompt> prompts, const diffusion::NoiseSchedule& schedule,
                         int t_min, int t_max, ad::AdamW& optimizer, Rng& rng);

/// Draws `batch` rows of (z, prompt); prompts are chosen uniformly from the set.
struct GeneratorDraw {
  ad::Array z;
  std::vector<model::Prompt> prompts;
};
GeneratorDraw draw_generator_inputs(std::size_t batch, std::size_t dim, std::span<const model::Prompt> prompt_set,
                                    Rng& noise, Rng& prompt_rng);

/// Student output for rows with per-row prompts (inference only).
ad::Array generate_rows(const model::DenoiserModel& student, const ad::Array& z,
                        std::span<const model::Prompt> prompts, const diffusion::NoiseSchedule& schedule);

using Evaluator = std::function<EvalSummary(const model::DenoiserModel& student)>;

struct DistillResult {
  model::DenoiserModel student;
  model::DenoiserModel lora_teacher;
  DistillTrace trace;
};

/// Alternates k LoRA-teacher steps and one student step for `config.steps`
/// iterations, starting the student and LoRA teacher from `teacher`.
/// Throws TrainingAborted when more than `max_skip_fraction` of the steps
/// had to be skipped.
DistillResult distill(const DistillConfig& config, const model::DenoiserModel& teacher,
                      std::span<const model::Prompt> prompts, const diffusion::NoiseSchedule& schedule,
                      const Evaluator& evaluator = {},
                      const std::function<void(const StepRecord&)>& on_step = {});

}  // namespace snoopi::distill
