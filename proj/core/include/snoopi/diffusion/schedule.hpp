// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "snoopi/ad/array.hpp"

namespace snoopi::diffusion {

enum class ScheduleKind { linear, cosine };

ScheduleKind parse_schedule_kind(std::string_view text);
std::string_view to_string(ScheduleKind kind);

/// Variance-preserving (alpha_t, sigma_t) table for t = 0..T with
/// (alpha_0, sigma_0) = (1, 0) and (alpha_T, sigma_T) = (0, 1).
class NoiseSchedule {
 public:
  NoiseSchedule(ScheduleKind kind, int steps);

  ScheduleKind kind() const { return kind_; }
  int T() const { return static_cast<int>(alphas_.size()) - 1; }
  double alpha(int t) const;
  double sigma(int t) const;
  /// Cumulative signal fraction alpha_t^2.
  double alpha_bar(int t) const;
  /// Timestep whose alpha_bar is closest to `target` (lower t on ties).
  int nearest_timestep(double alpha_bar_target) const;

 private:
  void check(int t) const;

  ScheduleKind kind_;
  std::vector<double> alpha_bars_;
  std::vector<double> alphas_;
  std::vector<double> sigmas_;
};

/// Linear kind: alpha_bar_t = 1 - t/T. Cosine kind: the squared-cosine
/// alpha_bar with offset 0.008, endpoints clamped to the exact boundary values.
NoiseSchedule make_schedule(ScheduleKind kind, int steps);

struct NoisyPoint {
  ad::Array x_t;
  int t = 0;
  ad::Array eps;
};

/// x_t = alpha_t * x0 + sigma_t * eps.
NoisyPoint forward_diffuse(const ad::Array& x0, int t, const ad::Array& eps, const NoiseSchedule& schedule);

/// Exact inverse (x_t - sigma_t * eps) / alpha_t; requires alpha_t > 0.
ad::Array invert_diffuse(const NoisyPoint& point, const NoiseSchedule& schedule);

}  // namespace snoopi::diffusion
