// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "snoopi/ad/array.hpp"
#include "snoopi/diffusion/predictor.hpp"
#include "snoopi/diffusion/schedule.hpp"
#include "snoopi/model/denoiser.hpp"
#include "snoopi/oracle/mixture.hpp"

namespace snoopi::nasa {

struct NasaConfig {
  /// Removal scale; must be finite and >= 0.
  double alpha = 0.5;
  /// Steered cross-attention layers; nullopt means every layer.
  std::optional<std::set<std::size_t>> layers;
  model::Prompt negative = model::Prompt::null();

  void validate(std::size_t block_count) const;
  bool steers(std::size_t block) const { return !layers || layers->contains(block); }
};

struct SteeredAttentionOutput {
  ad::Array positive;  // Z+
  ad::Array negative;  // Z-
  ad::Array combined;  // Z+ - alpha Z-
};

/// Array form for one layer: K/V for both prompts come from the same w_k,
/// w_v and each branch has its own softmax. Rows of c_p and c_n are token
/// embeddings; their counts may differ.
SteeredAttentionOutput nasa_attention(const ad::Array& query, const ad::Array& c_p, const ad::Array& c_n,
                                      const ad::Array& w_k, const ad::Array& w_v, double alpha);

/// Z+ - alpha Z- on the tape.
ad::Var nasa_combine(ad::Var positive, ad::Var negative, double alpha);

/// Steering hook that routes masked-in layers through the NASA combinator.
class NasaSteering final : public model::AttentionSteering {
 public:
  explicit NasaSteering(NasaConfig config) : config_(std::move(config)) {}
  ad::Var attend(ad::Tape& tape, const model::AttentionSite& site) const override;
  const NasaConfig& config() const { return config_; }

 private:
  NasaConfig config_;
};

/// Comparison stub: subtracts alpha times the mean negative-token embedding
/// from every positive-token embedding before the key/value maps.
class EmbeddingSubtraction final : public model::AttentionSteering {
 public:
  EmbeddingSubtraction(model::Prompt negative, double alpha) : negative_(std::move(negative)), alpha_(alpha) {}
  ad::Var attend(ad::Tape& tape, const model::AttentionSite& site) const override;

 private:
  model::Prompt negative_;
  double alpha_;
};

/// Read-only view of a model with NASA installed. The model must outlive it.
class SteeredModel final : public diffusion::NoisePredictor {
 public:
  SteeredModel(const model::DenoiserModel& model, NasaConfig config);

  std::size_t data_dim() const override { return model_->data_dim(); }
  ad::Array predict(const ad::Array& x_t, int t, const model::Prompt& prompt) const override;
  ad::Array generate(const ad::Array& z, const model::Prompt& prompt, const diffusion::NoiseSchedule& schedule) const;
  const NasaSteering& steering() const { return steering_; }
  const model::DenoiserModel& base() const { return *model_; }

 private:
  const model::DenoiserModel* model_;
  NasaSteering steering_;
};

/// Throws ConfigError for an empty layer mask, an out-of-range layer or a bad alpha.
SteeredModel install_nasa(const model::DenoiserModel& model, NasaConfig config);

/// What the sweep applies at each alpha.
enum class SweepMethod { nasa, output_cfg, embedding };

struct SweepRow {
  double alpha = 0.0;
  double removal_rate = 0.0;
  double alignment = 0.0;
  double fd = 0.0;
  ad::Array samples;
};

struct SweepOptions {
  std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t samples = 4096;
  std::uint64_t seed = 0;
  SweepMethod method = SweepMethod::nasa;
  std::optional<std::set<std::size_t>> layers;
};

/// Generates `samples` student outputs per alpha from one shared noise draw.
/// Removal is judged against the negative prompt's class; alignment and FD
/// are measured against the positive prompt's classes minus that class.
std::vector<SweepRow> nasa_sweep(const model::DenoiserModel& student, const diffusion::NoiseSchedule& schedule,
                                 const oracle::GaussianMixture& mixture, const model::Prompt& positive,
                                 const model::Prompt& negative, const SweepOptions& options);

}  // namespace snoopi::nasa
