// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/model/training.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "snoopi/ad/ops.hpp"
#include "snoopi/error.hpp"

namespace snoopi::model {

using ad::Array;
using ad::Tape;
using ad::Var;

Var denoising_loss(Tape& tape, DenoiserModel& model, const Array& x_t, std::span<const int> t,
                   std::span<const Prompt> prompts, const Array& eps) {
  const std::size_t batch = x_t.rows();
  const std::size_t dim = x_t.cols();
  SNOOPI_REQUIRE(eps.same_shape(x_t), "denoising_loss: eps and x_t shapes differ");
  SNOOPI_REQUIRE(t.size() == batch && prompts.size() == batch, "denoising_loss: need one t and prompt per row");
  std::map<Prompt, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < batch; ++r) groups[prompts[r].canonical()].push_back(r);
  Var total;
  for (const auto& [prompt, rows] : groups) {
    Array xg({rows.size(), dim});
    Array eg({rows.size(), dim});
    std::vector<int> tg;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t c = 0; c < dim; ++c) {
        xg(i, c) = x_t(rows[i], c);
        eg(i, c) = eps(rows[i], c);
      }
      tg.push_back(t[rows[i]]);
    }
    Var pred = model.forward(tape, tape.constant(std::move(xg)), tg, prompt);
    Var err = ad::squared_norm(ad::sub(pred, tape.constant(std::move(eg))));
    total = total.valid() ? ad::add(total, err) : err;
  }
  return ad::scale(total, 1.0 / static_cast<double>(batch * dim));
}

Corruption corrupt(const Array& x0, const diffusion::NoiseSchedule& schedule, int t_min, int t_max, Rng& rng) {
  SNOOPI_REQUIRE(0 <= t_min && t_min <= t_max && t_max <= schedule.T(), "corrupt: invalid timestep range");
  Corruption out{Array(x0.shape()), std::vector<int>(x0.rows()), Array(x0.shape())};
  for (std::size_t r = 0; r < x0.rows(); ++r) {
    const int t = static_cast<int>(rng.uniform_int(t_min, t_max));
    out.t[r] = t;
    const double a = schedule.alpha(t);
    const double s = schedule.sigma(t);
    for (std::size_t c = 0; c < x0.cols(); ++c) {
      const double e = rng.normal();
      out.eps(r, c) = e;
      out.x_t(r, c) = a * x0(r, c) + s * e;
    }
  }
  return out;
}

std::vector<double> train_teacher(DenoiserModel& model, const DataSource& data,
                                  const diffusion::NoiseSchedule& schedule, const TeacherTrainConfig& config,
                                  const std::function<void(long, double)>& on_step) {
  if (config.steps < 0) throw ConfigError("train.steps must be >= 0");
  if (config.batch < 1) throw ConfigError("train.batch must be >= 1");
  if (!(config.learning_rate >= 0.0)) throw ConfigError("train.lr must be >= 0");
  std::vector<double> trace;
  if (config.steps == 0) return trace;
  trace.reserve(static_cast<std::size_t>(config.steps));
  ad::AdamW optimizer(model.trainable_parameters(),
                      ad::AdamWConfig{config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay});
  Rng data_rng(derive_seed(config.seed, 11));
  Rng noise_rng(derive_seed(config.seed, 12));
  for (long step = 0; step < config.steps; ++step) {
    const TrainingBatch batch = data(config.batch, data_rng);
    const Corruption noisy = corrupt(batch.x0, schedule, 1, schedule.T(), noise_rng);
    Tape tape;
    Var loss = denoising_loss(tape, model, noisy.x_t, noisy.t, batch.prompts, noisy.eps);
    const double value = loss.value().item();
    if (!std::isfinite(value)) throw OverflowError("teacher loss became non-finite at step " + std::to_string(step));
    optimizer.zero_gradients();
    tape.backward(loss);
    if (config.cosine_decay)
      optimizer.set_learning_rate(config.learning_rate * 0.5 *
                                  (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) /
                                                  static_cast<double>(config.steps))));
    optimizer.step();
    trace.push_back(value);
    if (on_step) on_step(step, value);
  }
  return trace;
}

}  // namespace snoopi::model
