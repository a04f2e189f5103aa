// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snoopi/ad/gradcheck.hpp"

namespace snoopi::verify {

struct GradientCase {
  std::string name;
  ad::GradcheckResult result;
};

struct SuiteOptions {
  /// Adds the default-size model cases on a seeded coordinate subset.
  bool include_default_size = true;
  std::size_t default_size_coordinates = 64;
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
};

struct SuiteReport {
  std::vector<GradientCase> cases;
  double tolerance = 1e-4;

  double max_error() const;
  bool passed() const { return max_error() < tolerance; }
};

/// Central-difference checks of every layer type (affine, embedding lookup,
/// timestep features, cross-attention, steered attention, low-rank adapter)
/// and of both training objectives (denoising loss, distillation surrogate).
/// Small models are checked on every coordinate.
SuiteReport run_gradient_suite(const SuiteOptions& options = {});

}  // namespace snoopi::verify
