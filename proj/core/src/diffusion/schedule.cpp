// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/diffusion/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "snoopi/error.hpp"

namespace snoopi::diffusion {

ScheduleKind parse_schedule_kind(std::string_view text) {
  if (text == "linear") return ScheduleKind::linear;
  if (text == "cosine") return ScheduleKind::cosine;
  throw ConfigError("unknown schedule kind '" + std::string(text) + "' (expected linear|cosine)");
}

std::string_view to_string(ScheduleKind kind) { return kind == ScheduleKind::linear ? "linear" : "cosine"; }

NoiseSchedule::NoiseSchedule(ScheduleKind kind, int steps) : kind_(kind) {
  SNOOPI_REQUIRE(steps >= 2, "make_schedule: T must be at least 2, got " + std::to_string(steps));
  const auto n = static_cast<std::size_t>(steps) + 1;
  alpha_bars_.resize(n);
  constexpr double offset = 0.008;
  const double base = std::cos(offset / (1.0 + offset) * std::numbers::pi / 2.0);
  for (std::size_t t = 0; t < n; ++t) {
    const double u = static_cast<double>(t) / static_cast<double>(steps);
    if (kind == ScheduleKind::linear) {
      alpha_bars_[t] = 1.0 - u;
    } else {
      const double c = std::cos((u + offset) / (1.0 + offset) * std::numbers::pi / 2.0) / base;
      alpha_bars_[t] = std::clamp(c * c, 0.0, 1.0);
    }
  }
  alpha_bars_.front() = 1.0;
  alpha_bars_.back() = 0.0;
  alphas_.resize(n);
  sigmas_.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    alphas_[t] = std::sqrt(alpha_bars_[t]);
    sigmas_[t] = std::sqrt(1.0 - alpha_bars_[t]);
  }
}

void NoiseSchedule::check(int t) const {
  SNOOPI_REQUIRE(t >= 0 && t <= T(), "timestep " + std::to_string(t) + " outside [0, " + std::to_string(T()) + "]");
}

double NoiseSchedule::alpha(int t) const {
  check(t);
  return alphas_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::sigma(int t) const {
  check(t);
  return sigmas_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::alpha_bar(int t) const {
  check(t);
  return alpha_bars_[static_cast<std::size_t>(t)];
}

int NoiseSchedule::nearest_timestep(double target) const {
  int best = 0;
  for (int t = 1; t <= T(); ++t)
    if (std::abs(alpha_bar(t) - target) < std::abs(alpha_bar(best) - target)) best = t;
  return best;
}

NoiseSchedule make_schedule(ScheduleKind kind, int steps) { return NoiseSchedule(kind, steps); }

NoisyPoint forward_diffuse(const ad::Array& x0, int t, const ad::Array& eps, const NoiseSchedule& schedule) {
  SNOOPI_REQUIRE(x0.same_shape(eps), "forward_diffuse: x0 " + ad::shape_string(x0.shape()) + " vs eps " +
                                         ad::shape_string(eps.shape()));
  const double a = schedule.alpha(t);
  const double s = schedule.sigma(t);
  ad::Array x_t(x0.shape());
  for (std::size_t i = 0; i < x0.size(); ++i) x_t[i] = a * x0[i] + s * eps[i];
  return NoisyPoint{std::move(x_t), t, eps};
}

ad::Array invert_diffuse(const NoisyPoint& point, const NoiseSchedule& schedule) {
  const double a = schedule.alpha(point.t);
  if (a == 0.0) throw DegenerateStepError("invert_diffuse: alpha_t = 0");
  const double s = schedule.sigma(point.t);
  ad::Array x0(point.x_t.shape());
  for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = (point.x_t[i] - s * point.eps[i]) / a;
  return x0;
}

}  // namespace snoopi::diffusion
