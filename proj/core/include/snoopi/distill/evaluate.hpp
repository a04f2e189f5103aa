// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "snoopi/distill/vsd.hpp"
#include "snoopi/oracle/mixture.hpp"

namespace snoopi::distill {

/// Periodic evaluation: a fixed set of student samples is split evenly over
/// the prompts and compared per prompt with fresh oracle samples of the
/// prompt's classes. Metrics are averaged over prompts; alignment only over
/// prompts naming exactly one class.
struct EvalProtocol {
  std::vector<model::Prompt> prompts;
  std::size_t samples = 2048;
  std::uint64_t seed = 0;
  int k = 3;
};

Evaluator make_evaluator(const oracle::GaussianMixture& mixture, const diffusion::NoiseSchedule& schedule,
                         EvalProtocol protocol);

}  // namespace snoopi::distill
