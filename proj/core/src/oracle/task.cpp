// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/oracle/task.hpp"

#include <map>

#include "snoopi/error.hpp"

namespace snoopi::oracle {

model::Prompt draw_prompt(const GaussianMixture& mixture, int label, const PromptPolicy& policy, Rng& rng) {
  const double u = rng.uniform();
  const std::int64_t form = rng.uniform_int(0, 2);
  if (u < policy.null_probability) return model::Prompt::null();
  int class_token = -1;
  for (const auto& [token, cls] : mixture.class_tokens())
    if (cls == label) {
      class_token = token;
      break;
    }
  if (class_token < 0 || form == 0) return model::Prompt{{policy.agnostic_token}};
  if (form == 1) return model::Prompt{{class_token}};

  return model::Prompt{{policy.agnostic_token, class_token}};
}

model::DataSource make_training_source(const GaussianMixture& mixture, const PromptPolicy& policy) {
  return [&mixture, policy](std::size_t batch, Rng& rng) {
    const LabeledPoints points = mixture.sample(batch, rng.next_u64());
    model::TrainingBatch out{points.points, {}};
    out.prompts.reserve(batch);
    for (int label : points.labels) out.prompts.push_back(draw_prompt(mixture, label, policy, rng));
    return out;
  };
}

EpsBenchmark heldout_eps_mse(const diffusion::NoisePredictor& model, const GaussianMixture& mixture,
                             const diffusion::NoiseSchedule& schedule, std::size_t n, std::uint64_t seed,
                             const PromptPolicy& policy) {
  SNOOPI_REQUIRE(n >= 1, "heldout_eps_mse: n must be >= 1");
  Rng rng(derive_seed(seed, 21));
  const LabeledPoints points = mixture.sample(n, derive_seed(seed, 22));
  const std::size_t dim = mixture.dim();
  EpsBenchmark result;
  result.samples = n;
  for (std::size_t i = 0; i < n; ++i) {
    const model::Prompt prompt = draw_prompt(mixture, points.labels[i], policy, rng);
    const int t = static_cast<int>(rng.uniform_int(1, schedule.T()));
    ad::Array x_t({1, dim});
    for (std::size_t c = 0; c < dim; ++c)
      x_t(0, c) = schedule.alpha(t) * points.points(i, c) + schedule.sigma(t) * rng.normal();
    const ad::Array target = mixture.analytic_eps(x_t, t, schedule, mixture.classes_for_prompt(prompt));
    const ad::Array pred = model.predict(x_t, t, prompt);
    for (std::size_t c = 0; c < dim; ++c) {
      const double e = pred(0, c) - target(0, c);
      result.model_mse += e * e;
      result.zero_mse += target(0, c) * target(0, c);
    }
  }
  result.model_mse /= static_cast<double>(n * dim);
  result.zero_mse /= static_cast<double>(n * dim);
  return result;
}

}  // namespace snoopi::oracle
