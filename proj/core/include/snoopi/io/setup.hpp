// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "snoopi/diffusion/schedule.hpp"
#include "snoopi/distill/evaluate.hpp"
#include "snoopi/distill/vsd.hpp"
#include "snoopi/experiments.hpp"
#include "snoopi/io/checkpoint.hpp"
#include "snoopi/io/config.hpp"
#include "snoopi/model/denoiser.hpp"
#include "snoopi/model/training.hpp"
#include "snoopi/nasa/nasa.hpp"
#include "snoopi/oracle/mixture.hpp"
#include "snoopi/oracle/task.hpp"

namespace snoopi::io {

// Typed views of a RunConfig. Each throws ConfigError on inconsistent values.

diffusion::NoiseSchedule schedule_from(const RunConfig& cfg);
model::DenoiserConfig model_config_from(const RunConfig& cfg);
oracle::GaussianMixture mixture_from(const RunConfig& cfg);
oracle::PromptPolicy prompt_policy_from(const RunConfig& cfg);
model::TeacherTrainConfig teacher_config_from(const RunConfig& cfg);
distill::DistillConfig distill_config_from(const RunConfig& cfg);
/// Periodic evaluation over `prompts` on a stream derived from the seed.
distill::EvalProtocol eval_protocol_from(const RunConfig& cfg, const std::vector<model::Prompt>& prompts);
experiments::CfgSweepOptions cfg_sweep_options_from(const RunConfig& cfg);
nasa::SweepOptions nasa_sweep_options_from(const RunConfig& cfg);
/// "all" -> every block (nullopt), otherwise a ','-separated index list.
std::optional<std::set<std::size_t>> parse_layers(std::string_view text);

/// "1;2;1+3" -> three prompts.
std::vector<model::Prompt> parse_prompt_list(std::string_view text);

/// Checkpoint header for an artifact produced under `cfg`.
CheckpointMeta checkpoint_meta(const RunConfig& cfg, model::Role role);

}  // namespace snoopi::io
