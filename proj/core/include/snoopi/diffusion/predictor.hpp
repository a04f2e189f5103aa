// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "snoopi/ad/array.hpp"
#include "snoopi/model/prompt.hpp"

namespace snoopi::diffusion {

/// Anything that predicts the noise in x_t: trained denoisers, steered views,
/// and the closed-form mixture oracle. Implementations must be safe to call
/// concurrently from several threads.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual std::size_t data_dim() const = 0;
  /// Rows of `x_t` are samples; result has the same shape.
  virtual ad::Array predict(const ad::Array& x_t, int t, const model::Prompt& prompt) const = 0;
};

}  // namespace snoopi::diffusion
