// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "snoopi/diffusion/predictor.hpp"
#include "snoopi/diffusion/sampler.hpp"
#include "snoopi/distill/evaluate.hpp"
#include "snoopi/distill/vsd.hpp"
#include "snoopi/oracle/mixture.hpp"

namespace snoopi::experiments {

struct CfgSweepOptions {
  std::vector<double> kappas{1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<model::Prompt> prompts{model::Prompt{{2}}, model::Prompt{{3}}};
  std::size_t samples = 4096;
  int steps = 100;
  double alpha_floor = diffusion::kDefaultAlphaFloor;
  std::uint64_t seed = 0;
  int k = 3;
  std::size_t jobs = 1;
};

/// Metrics averaged over the sweep prompts at one guidance scale.
struct CfgSweepRow {
  double kappa = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double fd = 0.0;
  double alignment = 0.0;
};

/// DDIM samples of `teacher` per (prompt, kappa) from noise shared across
/// kappa values, scored against oracle samples of the prompt's classes.
std::vector<CfgSweepRow> cfg_sweep(const diffusion::NoisePredictor& teacher, const diffusion::NoiseSchedule& schedule,
                                   const oracle::GaussianMixture& mixture, const CfgSweepOptions& options);

std::string cfg_sweep_csv(std::span<const CfgSweepRow> rows);

struct DistillArm {
  std::string name;
  distill::DistillConfig config;
};

struct DistillRun {
  std::string arm;
  std::uint64_t seed = 0;
  distill::DistillResult result;
  /// Separate evaluation of the final student with `final_samples`.
  distill::EvalSummary final_eval;
};

struct ArmOptions {
  distill::EvalProtocol protocol;
  std::size_t final_samples = 8192;
  std::size_t jobs = 1;
};

/// Runs every (arm, seed) pair; the seed replaces the arm config's seed.
/// Results are ordered arm-major regardless of `jobs`.
std::vector<DistillRun> run_arms(std::span<const DistillArm> arms, std::span<const std::uint64_t> seeds,
                                 const model::DenoiserModel& teacher, std::span<const model::Prompt> prompts,
                                 const diffusion::NoiseSchedule& schedule, const oracle::GaussianMixture& mixture,
                                 const ArmOptions& options);

std::string runs_csv(std::span<const DistillRun> runs);

struct MeanStd {
  double mean = 0.0;
  /// Sample standard deviation (n - 1); 0 for a single value.
  double std = 0.0;
};
MeanStd mean_std(std::span<const double> values);

}  // namespace snoopi::experiments
