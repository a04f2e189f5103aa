// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "snoopi/diffusion/predictor.hpp"
#include "snoopi/diffusion/schedule.hpp"
#include "snoopi/model/training.hpp"
#include "snoopi/oracle/mixture.hpp"

namespace snoopi::oracle {

/// How training prompts are attached to labelled samples. A non-null prompt
/// is, with equal odds, the agnostic token, the sample's class token, or both.
struct PromptPolicy {
  double null_probability = 0.15;
  int agnostic_token = TwoClassTokens::agnostic;
};

/// Prompt drawn for a sample of class `label` under `policy`.
model::Prompt draw_prompt(const GaussianMixture& mixture, int label, const PromptPolicy& policy, Rng& rng);

model::DataSource make_training_source(const GaussianMixture& mixture, const PromptPolicy& policy = {});

struct EpsBenchmark {
  double model_mse = 0.0;
  /// MSE of the all-zero predictor against eps*.
  double zero_mse = 0.0;
  std::size_t samples = 0;
  double reduction() const { return zero_mse > 0.0 ? 1.0 - model_mse / zero_mse : 0.0; }
};

/// Held-out comparison of a predictor against the analytic eps* over a fixed
/// set of (x0, prompt, t, eps) draws determined by `seed`.
EpsBenchmark heldout_eps_mse(const diffusion::NoisePredictor& model, const GaussianMixture& mixture,
                             const diffusion::NoiseSchedule& schedule, std::size_t n, std::uint64_t seed,
                             const PromptPolicy& policy = {});

}  // namespace snoopi::oracle
