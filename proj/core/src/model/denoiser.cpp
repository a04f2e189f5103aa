// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/model/denoiser.hpp"

#include <cmath>
#include <map>

#include "snoopi/ad/ops.hpp"
#include "snoopi/error.hpp"
#include "snoopi/rng.hpp"

namespace snoopi::model {

using ad::Array;
using ad::Parameter;
using ad::Tape;
using ad::Var;

Role parse_role(std::string_view text) {
  if (text == "teacher") return Role::teacher;
  if (text == "lora_teacher") return Role::lora_teacher;
  if (text == "student") return Role::student;
  throw ConfigError("unknown model role '" + std::string(text) + "'");
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::teacher: return "teacher";
    case Role::lora_teacher: return "lora_teacher";
    case Role::student: return "student";
  }
  return "teacher";
}

void DenoiserConfig::validate() const {
  if (data_dim == 0 || embed_dim == 0 || width == 0 || key_dim == 0 || blocks == 0)
    throw ConfigError("model dimensions must be positive and blocks >= 1");
  if (vocab < 2) throw ConfigError("model.vocab must be >= 2");
  if (max_prompt_length < 1) throw ConfigError("model.max_prompt_length must be >= 1");
  if (time_dim < 2 || time_dim % 2 != 0) throw ConfigError("model.time_dim must be even and >= 2");
  if (!(embed_init >= 0.0) || !std::isfinite(embed_init)) throw ConfigError("model.embed_init must be finite and >= 0");
}

namespace {

Array uniform_array(std::size_t rows, std::size_t cols, double bound, std::uint64_t seed) {
  Rng rng(seed);
  Array a({rows, cols});
  for (double& v : a.data()) v = rng.uniform(-bound, bound);
  return a;
}

}  // namespace

DenoiserModel::DenoiserModel(const DenoiserConfig& config, std::uint64_t seed, Role role)
    : config_(config), role_(role) {
  config_.validate();
  const std::size_t w = config_.width;
  const std::size_t d = config_.key_dim;
  params_.reserve(3 + config_.blocks * 9);
  params_.emplace_back("embed.table",
                       uniform_array(static_cast<std::size_t>(config_.vocab), config_.embed_dim, config_.embed_init,
                                     derive_seed(seed, 1)));
  embedding_ = 0;
  std::uint64_t stream = 100;
  input_ = add_linear("in", config_.data_dim + config_.time_dim, w, true, derive_seed(seed, stream++));
  for (std::size_t b = 0; b < config_.blocks; ++b) {
    const std::string prefix = "block" + std::to_string(b) + ".";
    BlockRef block;
    block.mlp_in = add_linear(prefix + "mlp.in", w, w, true, derive_seed(seed, stream++));
    block.mlp_out = add_linear(prefix + "mlp.out", w, w, true, derive_seed(seed, stream++));
    block.attention.query = add_linear(prefix + "attn.q", w, d, false, derive_seed(seed, stream++));
    block.attention.key = add_linear(prefix + "attn.k", config_.embed_dim, d, false, derive_seed(seed, stream++));
    block.attention.value = add_linear(prefix + "attn.v", config_.embed_dim, d, false, derive_seed(seed, stream++));
    block.attention.output = add_linear(prefix + "attn.o", d, w, true, derive_seed(seed, stream++));
    blocks_.push_back(block);
  }
  head_ = add_linear("head", w, config_.data_dim, true, derive_seed(seed, stream++));
  frequencies_ = ad::sinusoid_frequencies(config_.time_dim / 2);
}

LinearRef DenoiserModel::add_linear(const std::string& name, std::size_t in, std::size_t out, bool bias,
                                    std::uint64_t seed) {
  LinearRef ref;
  ref.in = in;
  ref.out = out;
  ref.weight = params_.size();
  params_.emplace_back(name + ".weight", uniform_array(in, out, 1.0 / std::sqrt(static_cast<double>(in)), seed));
  if (bias) {
    ref.bias = params_.size();
    params_.emplace_back(name + ".bias", Array({1, out}));
  }
  return ref;
}

std::vector<Parameter*> DenoiserModel::parameter_pointers() {
  std::vector<Parameter*> out;
  for (Parameter& p : params_) out.push_back(&p);
  return out;
}

std::vector<Parameter*> DenoiserModel::trainable_parameters() {
  std::vector<Parameter*> out;
  for (Parameter& p : params_)
    if (p.trainable()) out.push_back(&p);
  return out;
}

std::size_t DenoiserModel::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name() == name) return i;
  return params_.size();
}

Parameter* DenoiserModel::find_parameter(std::string_view name) {
  const std::size_t i = index_of(name);
  return i < params_.size() ? &params_[i] : nullptr;
}

const Parameter* DenoiserModel::find_parameter(std::string_view name) const {
  const std::size_t i = index_of(name);
  return i < params_.size() ? &params_[i] : nullptr;
}

std::size_t DenoiserModel::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value().size();
  return n;
}

void DenoiserModel::set_trainable(bool trainable) {
  for (Parameter& p : params_) p.set_trainable(trainable);
  if (trainable && lora_) {
    for (Parameter& p : params_) p.set_trainable(false);
    for (Parameter* p : lora_parameters()) p->set_trainable(true);
  }
}

Array DenoiserModel::embed_prompt(const Prompt& prompt) const {
  validate_prompt(prompt, config_.vocab, config_.max_prompt_length);
  const Array& table = params_[embedding_].value();
  Array out({prompt.length(), config_.embed_dim});
  for (std::size_t i = 0; i < prompt.length(); ++i)
    for (std::size_t c = 0; c < config_.embed_dim; ++c)
      out(i, c) = table(static_cast<std::size_t>(prompt.tokens[i]), c);
  return out;
}

Var DenoiserModel::embed(Tape& tape, const Prompt& prompt) {
  validate_prompt(prompt, config_.vocab, config_.max_prompt_length);
  std::vector<std::size_t> rows(prompt.tokens.begin(), prompt.tokens.end());
  return ad::gather_rows(tape.param(params_[embedding_]), rows);
}

Var DenoiserModel::apply(Tape& tape, const LinearRef& layer, Var x) {
  SNOOPI_REQUIRE(x.cols() == layer.in, "linear map expects " + std::to_string(layer.in) + " input columns, got " +
                                           std::to_string(x.cols()));
  Var y = ad::matmul(x, tape.param(params_[layer.weight]));
  if (layer.lora_down) {
    Var low = ad::matmul(x, tape.param(params_[*layer.lora_down]));
    Var delta = ad::matmul(low, tape.param(params_[*layer.lora_up]));
    y = ad::add(y, ad::scale(delta, lora_->scaling()));
  }
  if (layer.bias) y = ad::add(y, ad::broadcast_rows(tape.param(params_[*layer.bias]), x.rows()));
  return y;
}

Var attention(Var query, Var keys, Var values) {
  SNOOPI_REQUIRE(query.cols() == keys.cols(), "attention: query/key width mismatch");
  SNOOPI_REQUIRE(keys.rows() == values.rows(), "attention: key/value count mismatch");
  const double scale = 1.0 / std::sqrt(static_cast<double>(keys.cols()));
  Var scores = ad::scale(ad::matmul(query, ad::transpose(keys)), scale);
  return ad::matmul(ad::row_softmax(scores), values);
}

Var DenoiserModel::forward(Tape& tape, Var x_t, std::span<const int> t, const Prompt& prompt,
                           const AttentionSteering* steering) {
  const std::size_t batch = x_t.rows();
  SNOOPI_REQUIRE(x_t.value().rank() == 2 && x_t.cols() == config_.data_dim,
                 "predict_eps: x_t must be (batch, " + std::to_string(config_.data_dim) + "), got " +
                     ad::shape_string(x_t.value().shape()));
  SNOOPI_REQUIRE(batch >= 1, "predict_eps: empty batch");
  SNOOPI_REQUIRE(t.size() == 1 || t.size() == batch, "predict_eps: need one timestep or one per row");
  Array positions({batch, 1});
  for (std::size_t r = 0; r < batch; ++r) {
    const int tr = t.size() == 1 ? t[0] : t[r];
    SNOOPI_REQUIRE(tr >= 0, "predict_eps: negative timestep");
    positions(r, 0) = static_cast<double>(tr);
  }
  const Prompt canonical = prompt.canonical();
  Var context = embed(tape, canonical);
  Var temb = ad::sinusoid(tape.constant(std::move(positions)), frequencies_);
  const Var first[] = {x_t, temb};
  Var h = apply(tape, input_, ad::concat_cols(first));
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const BlockRef& block = blocks_[b];
    h = ad::add(h, apply(tape, block.mlp_out, ad::silu(apply(tape, block.mlp_in, h))));
    const CrossAttentionRef& attn = block.attention;
    Var q = apply(tape, attn.query, h);
    Var k = apply(tape, attn.key, context);
    Var v = apply(tape, attn.value, context);
    Var z;
    if (steering) {
      AttentionSite site{b, q, context, k, v, [this, &tape](const Prompt& other) { return embed(tape, other.canonical()); },
                         [this, &tape, &attn](Var c) {
                           return std::pair<Var, Var>(apply(tape, attn.key, c), apply(tape, attn.value, c));
                         }};
      z = steering->attend(tape, site);
    } else {
      z = attention(q, k, v);
    }
    h = ad::add(h, apply(tape, attn.output, z));
  }
  return apply(tape, head_, h);
}

Array DenoiserModel::predict_eps(const Array& x_t, int t, const Prompt& prompt,
                                 const AttentionSteering* steering) const {
  Tape tape(ad::TapeMode::inference, precision_);
  // Inference tapes only read parameter values.
  auto& self = const_cast<DenoiserModel&>(*this);
  const int ts[] = {t};
  return tape.value(self.forward(tape, tape.view(x_t), ts, prompt, steering));
}

void DenoiserModel::attach_adapter(LinearRef& layer, const std::string& name, std::uint64_t seed) {
  const std::size_t r = lora_->rank;
  layer.lora_down = params_.size();
  params_.emplace_back(name + ".lora_down",
                       uniform_array(layer.in, r, 1.0 / std::sqrt(static_cast<double>(layer.in)), seed));
  layer.lora_up = params_.size();
  params_.emplace_back(name + ".lora_up", Array({r, layer.out}));
}

void DenoiserModel::attach_lora(const LoraConfig& lora) {
  if (lora_) throw StateError("LoRA adapters are already attached");
  if (lora.rank < 1) throw ConfigError("lora.rank must be >= 1");
  if (!std::isfinite(lora.gamma)) throw ConfigError("lora.gamma must be finite");
  lora_ = lora;
  std::vector<LinearRef*> layers{&input_};
  std::vector<std::string> names{"in"};
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const std::string prefix = "block" + std::to_string(b) + ".";
    BlockRef& block = blocks_[b];
    for (auto [layer, name] : {std::pair{&block.mlp_in, "mlp.in"}, std::pair{&block.mlp_out, "mlp.out"},
                               std::pair{&block.attention.query, "attn.q"}, std::pair{&block.attention.key, "attn.k"},
                               std::pair{&block.attention.value, "attn.v"},
                               std::pair{&block.attention.output, "attn.o"}}) {
      layers.push_back(layer);
      names.push_back(prefix + name);
    }
  }
  layers.push_back(&head_);
  names.push_back("head");
  for (Parameter& p : params_) p.set_trainable(false);
  params_.reserve(params_.size() + 2 * layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) attach_adapter(*layers[i], names[i], derive_seed(lora.seed, i));
}

std::vector<Parameter*> DenoiserModel::lora_parameters() {
  std::vector<Parameter*> out;
  if (!lora_) return out;
  auto collect = [&](const LinearRef& l) {
    out.push_back(&params_[*l.lora_down]);
    out.push_back(&params_[*l.lora_up]);
  };
  collect(input_);
  for (const BlockRef& b : blocks_) {
    collect(b.mlp_in);
    collect(b.mlp_out);
    collect(b.attention.query);
    collect(b.attention.key);
    collect(b.attention.value);
    collect(b.attention.output);
  }
  collect(head_);
  return out;
}

DenoiserModel DenoiserModel::from_parameters(const DenoiserConfig& config, Role role, std::optional<LoraConfig> lora,
                                             std::vector<Parameter> params) {
  DenoiserModel model(config, 0, role);
  if (lora) model.attach_lora(*lora);
  SNOOPI_REQUIRE(params.size() == model.params_.size(),
                 "parameter list has " + std::to_string(params.size()) + " entries, model expects " +
                     std::to_string(model.params_.size()));
  for (Parameter& src : params) {
    Parameter* dst = model.find_parameter(src.name());
    SNOOPI_REQUIRE(dst != nullptr, "unknown parameter '" + src.name() + "'");
    SNOOPI_REQUIRE(dst->value().same_shape(src.value()), "shape mismatch for parameter '" + src.name() + "'");
    dst->value() = src.value();
  }
  return model;
}

int student_timestep(const diffusion::NoiseSchedule& schedule) { return schedule.nearest_timestep(0.25); }

Var student_generate(Tape& tape, DenoiserModel& student, Var z, const Prompt& prompt,
                     const diffusion::NoiseSchedule& schedule, const AttentionSteering* steering) {
  const int ts = student_timestep(schedule);
  const double a = schedule.alpha(ts);
  if (a == 0.0) throw ConfigError("student timestep has alpha = 0");
  const int t[] = {ts};
  Var eps = student.forward(tape, z, t, prompt, steering);
  return ad::scale(ad::sub(z, ad::scale(eps, schedule.sigma(ts))), 1.0 / a);
}

Array student_generate(const DenoiserModel& student, const Array& z, const Prompt& prompt,
                       const diffusion::NoiseSchedule& schedule, const AttentionSteering* steering) {
  const int ts = student_timestep(schedule);
  const double a = schedule.alpha(ts);
  if (a == 0.0) throw ConfigError("student timestep has alpha = 0");
  const double s = schedule.sigma(ts);
  const Array eps = student.predict_eps(z, ts, prompt, steering);
  Array out(z.shape());
  const double inv = 1.0 / a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (z[i] - s * eps[i]) * inv;
  return out;
}

}  // namespace snoopi::model
