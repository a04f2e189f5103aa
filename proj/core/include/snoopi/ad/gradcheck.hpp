// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "snoopi/ad/tape.hpp"

namespace snoopi::ad {

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_coordinate;
};

struct GradcheckOptions {
  double step = 1e-6;
  /// 0 checks every coordinate; otherwise a seeded subset per parameter.
  std::size_t max_coordinates_per_parameter = 0;
  std::uint64_t seed = 0;
};

using ScalarFunction = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients of `f` against central differences.
/// Error per coordinate is |analytic - numeric| / max(1, |numeric|).
GradcheckResult gradcheck(const ScalarFunction& f, std::span<Parameter* const> params,
                          const GradcheckOptions& options = {});

}  // namespace snoopi::ad
