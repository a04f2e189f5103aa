// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "snoopi/ad/tape.hpp"
#include "snoopi/diffusion/predictor.hpp"
#include "snoopi/diffusion/schedule.hpp"
#include "snoopi/model/prompt.hpp"

namespace snoopi::model {

/// Frozen teacher (psi), LoRA teacher (phi) or one-step student (theta).
enum class Role { teacher, lora_teacher, student };
Role parse_role(std::string_view text);
std::string_view to_string(Role role);

struct DenoiserConfig {
  std::size_t data_dim = 2;
  int vocab = 16;
  int max_prompt_length = 4;
  std::size_t embed_dim = 32;
  std::size_t width = 64;
  std::size_t key_dim = 32;
  std::size_t blocks = 3;
  /// Size of the sinusoidal timestep feature (sin and cos halves).
  std::size_t time_dim = 16;
  /// Token embeddings start uniform in [-embed_init, embed_init].
  double embed_init = 0.0;

  void validate() const;
};

struct LoraConfig {
  std::size_t rank = 64;
  double gamma = 128.0;
  std::uint64_t seed = 0;
  double scaling() const { return gamma / static_cast<double>(rank); }
};

/// One affine map x W + b stored as parameter indices. With an adapter the
/// effective weight is W + (gamma/r) * down * up, where `down` is in x r and
/// `up` is r x out (zero at attachment).
struct LinearRef {
  std::size_t weight = 0;
  std::optional<std::size_t> bias;
  std::optional<std::size_t> lora_down;
  std::optional<std::size_t> lora_up;
  std::size_t in = 0;
  std::size_t out = 0;
};

struct CrossAttentionRef {
  LinearRef query;   // W -> d, no bias
  LinearRef key;     // d_c -> d, no bias
  LinearRef value;   // d_c -> d, no bias
  LinearRef output;  // d -> W
};

struct BlockRef {
  LinearRef mlp_in;
  LinearRef mlp_out;
  CrossAttentionRef attention;
};

/// softmax(Q K^T / sqrt(d)) V with one independent softmax per query row.
ad::Var attention(ad::Var query, ad::Var keys, ad::Var values);

/// What a steering hook sees at one cross-attention layer.
struct AttentionSite {
  std::size_t block = 0;
  ad::Var query;    // B x d
  ad::Var context;  // L x d_c prompt embedding
  ad::Var keys;     // L x d
  ad::Var values;   // L x d
  /// Embeds another prompt with the model's table (tokens canonicalised).
  std::function<ad::Var(const Prompt&)> embed;
  /// Applies this layer's own key and value maps to an embedding.
  std::function<std::pair<ad::Var, ad::Var>(ad::Var)> project;
};

/// Replaces the pre-output-projection attention result of selected layers.
class AttentionSteering {
 public:
  virtual ~AttentionSteering() = default;
  /// Returns Z for the site; the layer's output projection and residual are
  /// applied to it afterwards.
  virtual ad::Var attend(ad::Tape& tape, const AttentionSite& site) const = 0;
};

class DenoiserModel final : public diffusion::NoisePredictor {
 public:
  explicit DenoiserModel(const DenoiserConfig& config = {}, std::uint64_t seed = 0, Role role = Role::teacher);

  const DenoiserConfig& config() const { return config_; }
  Role role() const { return role_; }
  void set_role(Role role) { role_ = role; }

  std::vector<ad::Parameter>& parameters() { return params_; }
  const std::vector<ad::Parameter>& parameters() const { return params_; }
  std::vector<ad::Parameter*> parameter_pointers();
  std::vector<ad::Parameter*> trainable_parameters();
  ad::Parameter* find_parameter(std::string_view name);
  const ad::Parameter* find_parameter(std::string_view name) const;
  std::size_t parameter_count() const;
  void set_trainable(bool trainable);

  /// Table rows for the prompt's tokens, in the given order.
  ad::Array embed_prompt(const Prompt& prompt) const;
  ad::Var embed(ad::Tape& tape, const Prompt& prompt);

  /// Differentiable eps-prediction. `t` holds one timestep per row or a single
  /// shared one. Tokens are canonicalised before attention.
  ad::Var forward(ad::Tape& tape, ad::Var x_t, std::span<const int> t, const Prompt& prompt,
                  const AttentionSteering* steering = nullptr);

  /// Inference-only eps-prediction (safe for concurrent callers).
  ad::Array predict_eps(const ad::Array& x_t, int t, const Prompt& prompt,
                        const AttentionSteering* steering = nullptr) const;
  std::size_t data_dim() const override { return config_.data_dim; }
  ad::Array predict(const ad::Array& x_t, int t, const Prompt& prompt) const override {
    return predict_eps(x_t, t, prompt);
  }

  /// Wraps every linear map with a low-rank adapter and freezes everything
  /// else. Throws StateError when adapters are already attached.
  void attach_lora(const LoraConfig& lora);
  bool has_lora() const { return lora_.has_value(); }
  const std::optional<LoraConfig>& lora() const { return lora_; }
  std::vector<ad::Parameter*> lora_parameters();

  /// Precision of the tapes built by `predict_eps`.
  void set_inference_precision(ad::Precision precision) { precision_ = precision; }

  const std::vector<BlockRef>& blocks() const { return blocks_; }
  std::size_t block_count() const { return blocks_.size(); }

  /// Model whose parameters are replaced by `params` (matched by name and shape).
  static DenoiserModel from_parameters(const DenoiserConfig& config, Role role, std::optional<LoraConfig> lora,
                                       std::vector<ad::Parameter> params);

 private:
  LinearRef add_linear(const std::string& name, std::size_t in, std::size_t out, bool bias, std::uint64_t seed);
  void attach_adapter(LinearRef& layer, const std::string& name, std::uint64_t seed);
  ad::Var apply(ad::Tape& tape, const LinearRef& layer, ad::Var x);
  std::size_t index_of(std::string_view name) const;

  DenoiserConfig config_;
  Role role_;
  std::vector<ad::Parameter> params_;
  std::size_t embedding_ = 0;
  LinearRef input_;
  std::vector<BlockRef> blocks_;
  LinearRef head_;
  std::vector<double> frequencies_;
  std::optional<LoraConfig> lora_;
  ad::Precision precision_ = ad::Precision::double_;
};

/// Timestep at which the student is evaluated: alpha_bar closest to 1/4.
int student_timestep(const diffusion::NoiseSchedule& schedule);

/// x0_hat = (z - sigma_s * eps(z, t_s, p)) / alpha_s, differentiable in the student.
ad::Var student_generate(ad::Tape& tape, DenoiserModel& student, ad::Var z, const Prompt& prompt,
                         const diffusion::NoiseSchedule& schedule, const AttentionSteering* steering = nullptr);
ad::Array student_generate(const DenoiserModel& student, const ad::Array& z, const Prompt& prompt,
                           const diffusion::NoiseSchedule& schedule, const AttentionSteering* steering = nullptr);

/// Borrowing view that presents a model plus a steering hook as a NoisePredictor.
class SteeredPredictor final : public diffusion::NoisePredictor {
 public:
  SteeredPredictor(const DenoiserModel& model, const AttentionSteering& steering)
      : model_(model), steering_(steering) {}
  std::size_t data_dim() const override { return model_.data_dim(); }
  ad::Array predict(const ad::Array& x_t, int t, const Prompt& prompt) const override {
    return model_.predict_eps(x_t, t, prompt, &steering_);
  }

 private:
  const DenoiserModel& model_;
  const AttentionSteering& steering_;
};

}  // namespace snoopi::model
