// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "snoopi/ad/array.hpp"
#include "snoopi/diffusion/predictor.hpp"

namespace snoopi::diffusion {

enum class GuidanceMode { fixed, uniform };

GuidanceMode parse_guidance_mode(std::string_view text);
std::string_view to_string(GuidanceMode mode);

/// Guidance scale: a constant, or drawn from U(kappa_min, kappa_max).
struct GuidanceConfig {
  GuidanceMode mode = GuidanceMode::fixed;
  double kappa_min = 1.0;
  double kappa_max = 1.0;
  std::uint64_t seed = 0;

  static GuidanceConfig fixed(double kappa) { return {GuidanceMode::fixed, kappa, kappa, 0}; }
  static GuidanceConfig uniform(double lo, double hi, std::uint64_t seed = 0) {
    return {GuidanceMode::uniform, lo, hi, seed};
  }
  /// Throws ConfigError when the interval is inverted, non-finite, or a
  /// fixed config has kappa_min != kappa_max.
  void validate() const;
};

/// (1 - kappa) * eps_uncond + kappa * eps_cond.
ad::Array cfg_combine(const ad::Array& eps_uncond, const ad::Array& eps_cond, double kappa);
/// Same combination with the negative-prompt prediction in the unconditional slot.
ad::Array negative_cfg_combine(const ad::Array& eps_neg, const ad::Array& eps_pos, double kappa);

/// CFG with the null prompt as the unconditional branch, or with `negative`
/// in that slot when given.
ad::Array guided_predict(const NoisePredictor& model, const ad::Array& x_t, int t, const model::Prompt& prompt,
                         double kappa, const std::optional<model::Prompt>& negative = std::nullopt);

}  // namespace snoopi::diffusion
