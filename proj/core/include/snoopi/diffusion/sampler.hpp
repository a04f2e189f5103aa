// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "snoopi/ad/array.hpp"
#include "snoopi/diffusion/guidance.hpp"
#include "snoopi/diffusion/predictor.hpp"
#include "snoopi/diffusion/schedule.hpp"

namespace snoopi::diffusion {

/// Decreasing timestep grid floor(k*T/steps) for k = steps..0.
std::vector<int> sampling_grid(int T, int steps);

/// Timestep at which the initial (t = T) step is evaluated: the largest t < T
/// with alpha_t > 0 and alpha_t >= alpha_floor, where the pure-noise start is
/// taken as x_t.
int initial_eval_timestep(const NoiseSchedule& schedule, double alpha_floor = 0.0);

/// Default floor for `initial_eval_timestep`. Dividing by alpha_t near the end
/// of the cosine schedule amplifies any eps error by up to 1/alpha_t; starting
/// where alpha_t >= 0.06 keeps the first x0 estimate well conditioned.
inline constexpr double kDefaultAlphaFloor = 0.06;

struct SamplerOptions {
  int steps = 50;
  std::size_t count = 1024;
  std::uint64_t seed = 0;
  /// Trajectories evaluated together per model call.
  std::size_t chunk = 1024;
  double alpha_floor = kDefaultAlphaFloor;
};

/// Initial noise for `ddim_sample`: row i is drawn from its own stream derived
/// from (seed, i), so any prefix of a larger draw is the smaller draw.
ad::Array sampler_noise(std::size_t count, std::size_t dim, std::uint64_t seed);

/// Deterministic DDIM: at each grid step the guided eps is converted to
/// x0_hat = (x_t - sigma_t eps)/alpha_t and re-noised to the next timestep.
/// In uniform guidance mode each trajectory draws its own kappa from `guidance.seed`.
ad::Array ddim_sample(const NoisePredictor& model, const NoiseSchedule& schedule, const model::Prompt& prompt,
                      const std::optional<model::Prompt>& negative, const GuidanceConfig& guidance,
                      const SamplerOptions& options);

/// Same loop from caller-supplied initial noise (rows are trajectories).
ad::Array ddim_sample_from(const NoisePredictor& model, const NoiseSchedule& schedule, const model::Prompt& prompt,
                           const std::optional<model::Prompt>& negative, std::span<const double> kappas,
                           ad::Array x, int steps, double alpha_floor = kDefaultAlphaFloor);

}  // namespace snoopi::diffusion
