// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/distill/vsd.hpp"

#include <cmath>
#include <map>

#include "snoopi/ad/ops.hpp"
#include "snoopi/error.hpp"
#include "snoopi/io/format.hpp"
#include "snoopi/model/training.hpp"

namespace snoopi::distill {

using ad::Array;
using ad::Tape;
using ad::Var;
using diffusion::GuidanceConfig;
using diffusion::GuidanceMode;
using model::DenoiserModel;
using model::Prompt;

AblationMode parse_ablation_mode(std::string_view text) {
  if (text == "none") return AblationMode::none;
  if (text == "teacher") return AblationMode::teacher;
  if (text == "lora") return AblationMode::lora;
  if (text == "both") return AblationMode::both;
  throw ConfigError("unknown distill mode '" + std::string(text) + "' (expected none, teacher, lora or both)");
}

std::string_view to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::none: return "none";
    case AblationMode::teacher: return "teacher";
    case AblationMode::lora: return "lora";
    case AblationMode::both: return "both";
  }
  return "none";
}

Weighting parse_weighting(std::string_view text) {
  if (text == "constant") return Weighting::constant;
  if (text == "sigma2") return Weighting::sigma_squared;
  throw ConfigError("unknown weighting '" + std::string(text) + "' (expected constant or sigma2)");
}

std::string_view to_string(Weighting weighting) {
  return weighting == Weighting::constant ? "constant" : "sigma2";
}

void DistillConfig::set_mode(AblationMode mode, double kappa_fixed, double kappa_min, double kappa_max) {
  const bool frozen_random = mode == AblationMode::teacher || mode == AblationMode::both;
  const bool lora_random = mode == AblationMode::lora || mode == AblationMode::both;
  frozen_guidance = frozen_random ? GuidanceConfig::uniform(kappa_min, kappa_max) : GuidanceConfig::fixed(kappa_fixed);
  lora_guidance = lora_random ? GuidanceConfig::uniform(kappa_min, kappa_max) : GuidanceConfig::fixed(kappa_fixed);
}

std::pair<int, int> DistillConfig::default_t_range(int T) {
  return {static_cast<int>(std::ceil(0.02 * T)), static_cast<int>(std::floor(0.98 * T))};
}

void DistillConfig::validate(int T) const {
  frozen_guidance.validate();
  lora_guidance.validate();
  if (!(0 < t_min && t_min < t_max && t_max < T))
    throw ConfigError("distill timestep range must satisfy 0 < t_min < t_max < T");
  if (lora_updates < 1) throw ConfigError("distill.lora_updates must be >= 1");
  if (batch < 1) throw ConfigError("distill.batch must be >= 1");
  if (steps < 0) throw ConfigError("distill.steps must be >= 0");
  if (!(student_lr >= 0.0) || !(lora_lr >= 0.0)) throw ConfigError("learning rates must be >= 0");
  if (eval_every < 1) throw ConfigError("distill.eval_every must be >= 1");
}

double guidance_from_unit(const GuidanceConfig& guidance, double u) {
  if (guidance.mode == GuidanceMode::fixed) return guidance.kappa_min;
  return guidance.kappa_min + (guidance.kappa_max - guidance.kappa_min) * u;
}

double sample_guidance_scale(const GuidanceConfig& guidance, Rng& rng) {
  if (guidance.mode == GuidanceMode::fixed) return guidance.kappa_min;
  return guidance_from_unit(guidance, rng.uniform());
}

std::string DistillTrace::csv_header() {
  return "step,kappa_frozen,kappa_lora,lora_loss,grad_norm,eval_fd,eval_precision,eval_recall,eval_align";
}

std::string DistillTrace::csv_body() const {
  std::string out;
  for (const StepRecord& r : records) {
    out += std::to_string(r.step) + "," + io::format_double(r.kappa_frozen) + "," + io::format_double(r.kappa_lora) +
           "," + io::format_double(r.lora_loss) + "," + (r.skipped ? std::string("nan") : io::format_double(r.grad_norm));
    if (r.eval) {
      out += "," + io::format_double(r.eval->fd) + "," + io::format_double(r.eval->precision) + "," +
             io::format_double(r.eval->recall) + "," + io::format_double(r.eval->alignment);
    } else {
      out += ",,,,";
    }
    out += "\n";
  }
  return out;
}

double timestep_weight(Weighting weighting, const diffusion::NoiseSchedule& schedule, int t) {
  if (weighting == Weighting::constant) return 1.0;
  const double s = schedule.sigma(t);
  return s * s;
}

Array vsd_direction(const DenoiserModel& frozen, const DenoiserModel& lora_teacher, const Array& x_t, int t,
                    const Prompt& prompt, double kappa_frozen, double kappa_lora, double weight,
                    LoraNullBranch null_branch) {
  const Array target = diffusion::guided_predict(frozen, x_t, t, prompt, kappa_frozen);
  Array fake;
  if (null_branch == LoraNullBranch::lora) {
    fake = diffusion::guided_predict(lora_teacher, x_t, t, prompt, kappa_lora);
  } else {
    fake = diffusion::cfg_combine(frozen.predict_eps(x_t, t, Prompt::null()),
                                  lora_teacher.predict_eps(x_t, t, prompt), kappa_lora);
  }
  Array d(target.shape());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = weight * (target[i] - fake[i]);
  return d;
}

Var vsd_surrogate(Var x0, const Array& direction) {
  SNOOPI_REQUIRE(x0.value().same_shape(direction), "vsd_surrogate: direction shape mismatch");
  Tape& tape = *x0.tape();
  return ad::scale(ad::dot(tape.constant(direction), x0), 1.0 / static_cast<double>(x0.rows()));
}

DistillStreams::DistillStreams(std::uint64_t seed)
    : noise(derive_seed(seed, 31)),
      prompts(derive_seed(seed, 32)),
      timesteps(derive_seed(seed, 33)),
      eps(derive_seed(seed, 34)),
      kappa(derive_seed(seed, 35)),
      lora(derive_seed(seed, 36)) {}

GeneratorDraw draw_generator_inputs(std::size_t batch, std::size_t dim, std::span<const Prompt> prompt_set,
                                    Rng& noise, Rng& prompt_rng) {
  SNOOPI_REQUIRE(!prompt_set.empty(), "prompt set is empty");
  GeneratorDraw draw{Array({batch, dim}), {}};
  for (double& v : draw.z.data()) v = noise.normal();
  draw.prompts.reserve(batch);
  const auto last = static_cast<std::int64_t>(prompt_set.size()) - 1;
  for (std::size_t r = 0; r < batch; ++r)
    draw.prompts.push_back(prompt_set[static_cast<std::size_t>(prompt_rng.uniform_int(0, last))]);
  return draw;
}

namespace {

std::map<Prompt, std::vector<std::size_t>> group_rows(std::span<const Prompt> prompts) {
  std::map<Prompt, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < prompts.size(); ++r) groups[prompts[r]].push_back(r);
  return groups;
}

Array take_rows(const Array& a, const std::vector<std::size_t>& rows) {
  Array out({rows.size(), a.cols()});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < a.cols(); ++c) out(i, c) = a(rows[i], c);
  return out;
}

bool gradients_finite(const ad::AdamW& optimizer) {
  for (const ad::Parameter* p : optimizer.parameters())
    if (!p->gradient().all_finite()) return false;
  return true;
}

}  // namespace

Array generate_rows(const DenoiserModel& student, const Array& z, std::span<const Prompt> prompts,
                    const diffusion::NoiseSchedule& schedule) {
  SNOOPI_REQUIRE(prompts.size() == z.rows(), "generate_rows: need one prompt per row");
  Array out(z.shape());
  for (const auto& [prompt, rows] : group_rows(prompts)) {
    const Array x0 = model::student_generate(student, take_rows(z, rows), prompt, schedule);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t c = 0; c < z.cols(); ++c) out(rows[i], c) = x0(i, c);
  }
  return out;
}

StepRecord vsd_student_step(DenoiserModel& student, const DenoiserModel& frozen, const DenoiserModel& lora_teacher,
                            std::span<const Prompt> prompts, const DistillConfig& config,
                            const diffusion::NoiseSchedule& schedule, ad::AdamW& optimizer, DistillStreams& streams) {
  SNOOPI_REQUIRE(student.data_dim() == frozen.data_dim() && frozen.data_dim() == lora_teacher.data_dim(),
                 "vsd_student_step: models disagree on data dimension");
  SNOOPI_REQUIRE(student.config().vocab == frozen.config().vocab &&
                     frozen.config().vocab == lora_teacher.config().vocab,
                 "vsd_student_step: models disagree on vocabulary");
  const std::size_t dim = student.data_dim();
  const GeneratorDraw draw = draw_generator_inputs(config.batch, dim, prompts, streams.noise, streams.prompts);
  const int t = static_cast<int>(streams.timesteps.uniform_int(config.t_min, config.t_max));
  Array eps({config.batch, dim});
  for (double& v : eps.data()) v = streams.eps.normal();

  StepRecord record;
  record.timestep = t;
  if (config.independent_kappa) {
    record.kappa_frozen = sample_guidance_scale(config.frozen_guidance, streams.kappa);
    record.kappa_lora = sample_guidance_scale(config.lora_guidance, streams.kappa);
  } else {
    const double u = streams.kappa.uniform();
    record.kappa_frozen = guidance_from_unit(config.frozen_guidance, u);
    record.kappa_lora = guidance_from_unit(config.lora_guidance, u);
  }
  const double weight = timestep_weight(config.weighting, schedule, t);
  const double a = schedule.alpha(t);
  const double s = schedule.sigma(t);

  try {
    Tape tape;
    Var total;
    for (const auto& [prompt, rows] : group_rows(draw.prompts)) {
      Var x0 = model::student_generate(tape, student, tape.constant(take_rows(draw.z, rows)), prompt, schedule);
      const Array e = take_rows(eps, rows);
      Array x_t(e.shape());
      for (std::size_t i = 0; i < x_t.size(); ++i) x_t[i] = a * x0.value()[i] + s * e[i];
      const Array d = vsd_direction(frozen, lora_teacher, x_t, t, prompt, record.kappa_frozen, record.kappa_lora,
                                    weight, config.lora_null_branch);
      if (!d.all_finite()) throw OverflowError("non-finite VSD direction");
      Var term = ad::dot(tape.constant(d), x0);
      total = total.valid() ? ad::add(total, term) : term;
    }
    Var loss = ad::scale(total, 1.0 / static_cast<double>(config.batch));
    optimizer.zero_gradients();
    tape.backward(loss);
    if (!gradients_finite(optimizer)) throw OverflowError("non-finite student gradient");
    record.grad_norm = optimizer.gradient_norm();
    optimizer.step();
  } catch (const OverflowError&) {
    optimizer.zero_gradients();
    record.skipped = true;
  }
  return record;
}

double lora_teacher_step(DenoiserModel& lora_teacher, const Array& x0, std::span<const Prompt> prompts,
                         const diffusion::NoiseSchedule& schedule, int t_min, int t_max, ad::AdamW& optimizer,
                         Rng& rng) {
  SNOOPI_REQUIRE(lora_teacher.has_lora(), "lora_teacher_step: model has no LoRA adapters");
  const model::Corruption noisy = model::corrupt(x0, schedule, t_min, t_max, rng);
  Tape tape;
  Var loss = model::denoising_loss(tape, lora_teacher, noisy.x_t, noisy.t, prompts, noisy.eps);
  optimizer.zero_gradients();
  tape.backward(loss);
  optimizer.step();
  return loss.value().item();
}

DistillResult distill(const DistillConfig& config, const DenoiserModel& teacher, std::span<const Prompt> prompts,
                      const diffusion::NoiseSchedule& schedule, const Evaluator& evaluator,
                      const std::function<void(const StepRecord&)>& on_step) {
  config.validate(schedule.T());
  SNOOPI_REQUIRE(!prompts.empty(), "distill: prompt set is empty");
  for (const Prompt& p : prompts)
    model::validate_prompt(p, teacher.config().vocab, teacher.config().max_prompt_length);

  DistillResult result{teacher, teacher, {}};
  DenoiserModel frozen = teacher;
  frozen.set_role(model::Role::teacher);
  frozen.set_trainable(false);
  result.student.set_role(model::Role::student);
  result.student.set_trainable(true);
  result.lora_teacher.set_role(model::Role::lora_teacher);
  model::LoraConfig lora = config.lora;
  lora.seed = derive_seed(config.seed, 37);
  result.lora_teacher.attach_lora(lora);

  ad::AdamW student_opt(result.student.trainable_parameters(),
                        ad::AdamWConfig{config.student_lr, 0.9, 0.999, 1e-8, config.weight_decay});
  ad::AdamW lora_opt(result.lora_teacher.lora_parameters(), ad::AdamWConfig{config.lora_lr, 0.9, 0.999, 1e-8, 0.0});
  DistillStreams streams(config.seed);
  const std::size_t dim = teacher.data_dim();
  const double skip_budget = config.max_skip_fraction * static_cast<double>(config.steps);

  result.trace.records.reserve(static_cast<std::size_t>(config.steps));
  for (long step = 0; step < config.steps; ++step) {
    double lora_loss = 0.0;
    bool lora_failed = false;
    try {
      const GeneratorDraw draw = draw_generator_inputs(config.batch, dim, prompts, streams.lora, streams.lora);
      const Array x0 = generate_rows(result.student, draw.z, draw.prompts, schedule);
      for (int k = 0; k < config.lora_updates; ++k)
        lora_loss += lora_teacher_step(result.lora_teacher, x0, draw.prompts, schedule, config.t_min, config.t_max,
                                       lora_opt, streams.lora);
      lora_loss /= static_cast<double>(config.lora_updates);
    } catch (const OverflowError&) {
      lora_opt.zero_gradients();
      lora_failed = true;
    }
    StepRecord record = vsd_student_step(result.student, frozen, result.lora_teacher, prompts, config, schedule,
                                         student_opt, streams);
    record.step = step;
    record.lora_loss = lora_failed ? std::nan("") : lora_loss;
    if (lora_failed) record.skipped = true;
    if (record.skipped) {
      ++result.trace.skipped_steps;
      if (static_cast<double>(result.trace.skipped_steps) > skip_budget)
        throw TrainingAborted("distillation aborted: " + std::to_string(result.trace.skipped_steps) +
                              " skipped steps exceed the budget at step " + std::to_string(step));
    }
    if (evaluator && ((step + 1) % config.eval_every == 0 || step + 1 == config.steps))
      record.eval = evaluator(result.student);
    if (on_step) on_step(record);
    result.trace.records.push_back(std::move(record));
  }
  return result;
}

}  // namespace snoopi::distill
