// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/diffusion/guidance.hpp"

#include <cmath>
#include <string>

#include "snoopi/error.hpp"

namespace snoopi::diffusion {

GuidanceMode parse_guidance_mode(std::string_view text) {
  if (text == "fixed") return GuidanceMode::fixed;
  if (text == "uniform" || text == "uniform-random") return GuidanceMode::uniform;
  throw ConfigError("unknown guidance mode '" + std::string(text) + "' (expected fixed|uniform)");
}

std::string_view to_string(GuidanceMode mode) { return mode == GuidanceMode::fixed ? "fixed" : "uniform"; }

void GuidanceConfig::validate() const {
  if (!std::isfinite(kappa_min) || !std::isfinite(kappa_max)) throw ConfigError("guidance scale must be finite");
  if (kappa_min > kappa_max) throw ConfigError("guidance: kappa_min > kappa_max");
  if (mode == GuidanceMode::fixed && kappa_min != kappa_max)
    throw ConfigError("guidance: fixed mode requires kappa_min == kappa_max");
}

ad::Array cfg_combine(const ad::Array& eps_uncond, const ad::Array& eps_cond, double kappa) {
  SNOOPI_REQUIRE(eps_uncond.same_shape(eps_cond), "cfg_combine: shape mismatch " +
                                                      ad::shape_string(eps_uncond.shape()) + " vs " +
                                                      ad::shape_string(eps_cond.shape()));
  ad::Array out(eps_cond.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double u = eps_uncond[i];
    const double c = eps_cond[i];
    // Identical branches combine to the branch itself for every kappa.
    out[i] = u == c ? c : (1.0 - kappa) * u + kappa * c;
  }
  return out;
}

ad::Array negative_cfg_combine(const ad::Array& eps_neg, const ad::Array& eps_pos, double kappa) {
  return cfg_combine(eps_neg, eps_pos, kappa);
}

ad::Array guided_predict(const NoisePredictor& model, const ad::Array& x_t, int t, const model::Prompt& prompt,
                         double kappa, const std::optional<model::Prompt>& negative) {
  const model::Prompt other = negative.value_or(model::Prompt::null());
  const ad::Array cond = model.predict(x_t, t, prompt);
  if (other == prompt || kappa == 1.0) return cond;
  return cfg_combine(model.predict(x_t, t, other), cond, kappa);
}

}  // namespace snoopi::diffusion
