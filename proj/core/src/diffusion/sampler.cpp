// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/diffusion/sampler.hpp"

#include <algorithm>

#include "snoopi/error.hpp"
#include "snoopi/rng.hpp"

namespace snoopi::diffusion {

std::vector<int> sampling_grid(int T, int steps) {
  SNOOPI_REQUIRE(steps >= 1, "ddim_sample: steps must be >= 1");
  SNOOPI_REQUIRE(steps <= T, "ddim_sample: more steps than schedule timesteps");
  std::vector<int> grid;
  grid.reserve(static_cast<std::size_t>(steps) + 1);
  for (int k = steps; k >= 0; --k)
    grid.push_back(static_cast<int>((static_cast<long long>(k) * T) / steps));
  return grid;
}

int initial_eval_timestep(const NoiseSchedule& schedule, double alpha_floor) {
  for (int t = schedule.T() - 1; t > 0; --t)
    if (schedule.alpha(t) > 0.0 && schedule.alpha(t) >= alpha_floor) return t;
  throw DegenerateStepError("schedule has no interior timestep with alpha > 0");
}

ad::Array sampler_noise(std::size_t count, std::size_t dim, std::uint64_t seed) {
  ad::Array z({count, dim});
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    for (std::size_t d = 0; d < dim; ++d) z(i, d) = rng.normal();
  }
  return z;
}

namespace {

ad::Array take_rows(const ad::Array& a, std::size_t begin, std::size_t end) {
  const std::size_t cols = a.cols();
  std::vector<double> data(a.data().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                           a.data().begin() + static_cast<std::ptrdiff_t>(end * cols));
  return ad::Array({end - begin, cols}, std::move(data));
}

ad::Array guided_rows(const NoisePredictor& model, const ad::Array& x, int t, const model::Prompt& prompt,
                      const std::optional<model::Prompt>& negative, std::span<const double> kappas) {
  const bool all_same = std::all_of(kappas.begin(), kappas.end(), [&](double k) { return k == kappas[0]; });
  if (all_same) return guided_predict(model, x, t, prompt, kappas[0], negative);
  const ad::Array cond = model.predict(x, t, prompt);
  const ad::Array other = model.predict(x, t, negative.value_or(model::Prompt::null()));
  ad::Array out(cond.shape());
  const std::size_t cols = cond.cols();
  for (std::size_t r = 0; r < cond.rows(); ++r) {
    const ad::Array mixed = cfg_combine(other.row(r), cond.row(r), kappas[r]);
    std::copy(mixed.data().begin(), mixed.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  return out;
}

}  // namespace

ad::Array ddim_sample_from(const NoisePredictor& model, const NoiseSchedule& schedule, const model::Prompt& prompt,
                           const std::optional<model::Prompt>& negative, std::span<const double> kappas,
                           ad::Array x, int steps, double alpha_floor) {
  SNOOPI_REQUIRE(kappas.size() == x.rows(), "ddim_sample: one kappa per trajectory required");
  const std::vector<int> grid = sampling_grid(schedule.T(), steps);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    int t = grid[k];
    const int t_next = grid[k + 1];
    if (k == 0 && t == schedule.T()) t = initial_eval_timestep(schedule, alpha_floor);
    const double a = schedule.alpha(t);
    if (a == 0.0) throw DegenerateStepError("ddim_sample: alpha_t = 0 at t = " + std::to_string(t));
    const double s = schedule.sigma(t);
    const double a_next = schedule.alpha(t_next);
    const double s_next = schedule.sigma(t_next);
    const ad::Array eps = guided_rows(model, x, t, prompt, negative, kappas);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double x0_hat = (x[i] - s * eps[i]) / a;
      x[i] = a_next * x0_hat + s_next * eps[i];
    }
  }
  return x;
}

ad::Array ddim_sample(const NoisePredictor& model, const NoiseSchedule& schedule, const model::Prompt& prompt,
                      const std::optional<model::Prompt>& negative, const GuidanceConfig& guidance,
                      const SamplerOptions& options) {
  guidance.validate();
  SNOOPI_REQUIRE(options.count >= 1, "ddim_sample: count must be >= 1");
  SNOOPI_REQUIRE(options.chunk >= 1, "ddim_sample: chunk must be >= 1");
  const std::size_t dim = model.data_dim();
  const ad::Array z = sampler_noise(options.count, dim, options.seed);
  std::vector<double> kappas(options.count, guidance.kappa_min);
  if (guidance.mode == GuidanceMode::uniform) {
    for (std::size_t i = 0; i < options.count; ++i) {
      Rng rng(derive_seed(guidance.seed, i));
      kappas[i] = rng.uniform(guidance.kappa_min, guidance.kappa_max);
    }
  }
  ad::Array out({options.count, dim});
  for (std::size_t begin = 0; begin < options.count; begin += options.chunk) {
    const std::size_t end = std::min(options.count, begin + options.chunk);
    const ad::Array part =
        ddim_sample_from(model, schedule, prompt, negative, std::span<const double>(kappas).subspan(begin, end - begin),
                         take_rows(z, begin, end), options.steps, options.alpha_floor);
    std::copy(part.data().begin(), part.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(begin * dim));
  }
  return out;
}

}  // namespace snoopi::diffusion
