// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "snoopi/ad/array.hpp"
#include "snoopi/ad/optimizer.hpp"
#include "snoopi/diffusion/schedule.hpp"
#include "snoopi/model/denoiser.hpp"
#include "snoopi/rng.hpp"

namespace snoopi::model {

struct TrainingBatch {
  ad::Array x0;                  // batch x D
  std::vector<Prompt> prompts;   // one per row
};

/// Produces `batch` labelled clean samples from the given stream.
using DataSource = std::function<TrainingBatch(std::size_t batch, Rng& rng)>;

/// Mean squared error between eps and the model's prediction at (x_t, t),
/// normalised by batch * D. Rows sharing a prompt are evaluated together.
ad::Var denoising_loss(ad::Tape& tape, DenoiserModel& model, const ad::Array& x_t, std::span<const int> t,
                       std::span<const Prompt> prompts, const ad::Array& eps);

/// Draws t uniformly from [t_min, t_max] and eps ~ N(0, I) per row, diffuses x0.
struct Corruption {
  ad::Array x_t;
  std::vector<int> t;
  ad::Array eps;
};
Corruption corrupt(const ad::Array& x0, const diffusion::NoiseSchedule& schedule, int t_min, int t_max, Rng& rng);

struct TeacherTrainConfig {
  long steps = 20000;
  std::size_t batch = 64;
  double learning_rate = 2e-3;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  /// Cosine decay of the learning rate to zero over `steps`.
  bool cosine_decay = true;
};

/// Trains `model` on the conditional denoising objective. Returns one loss
/// per step. A non-finite loss raises OverflowError.
std::vector<double> train_teacher(DenoiserModel& model, const DataSource& data,
                                  const diffusion::NoiseSchedule& schedule, const TeacherTrainConfig& config,
                                  const std::function<void(long step, double loss)>& on_step = {});

}  // namespace snoopi::model
