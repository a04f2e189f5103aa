// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/io/setup.hpp"

#include "snoopi/error.hpp"
#include "snoopi/io/format.hpp"
#include "snoopi/rng.hpp"

namespace snoopi::io {

namespace {

int to_int(std::int64_t v, std::string_view key) {
  if (v < -2147483647 || v > 2147483647) throw ConfigError(std::string(key) + " out of range");
  return static_cast<int>(v);
}

std::size_t to_size(std::int64_t v, std::string_view key) {
  if (v < 0) throw ConfigError(std::string(key) + " must be >= 0");
  return static_cast<std::size_t>(v);
}

std::vector<double> parse_numbers(std::string_view text) {
  std::vector<double> out;
  for (const std::string& item : split_list(text, ' ')) out.push_back(parse_double(item));
  return out;
}

}  // namespace

diffusion::NoiseSchedule schedule_from(const RunConfig& cfg) {
  const int T = to_int(cfg.integer("schedule.T"), "schedule.T");
  if (T < 2) throw ConfigError("schedule.T must be >= 2");
  return diffusion::make_schedule(diffusion::parse_schedule_kind(cfg.text("schedule.kind")), T);
}

model::DenoiserConfig model_config_from(const RunConfig& cfg) {
  model::DenoiserConfig m;
  m.data_dim = to_size(cfg.integer("model.data_dim"), "model.data_dim");
  m.vocab = to_int(cfg.integer("model.vocab"), "model.vocab");
  m.max_prompt_length = to_int(cfg.integer("model.max_prompt_length"), "model.max_prompt_length");
  m.embed_dim = to_size(cfg.integer("model.embed_dim"), "model.embed_dim");
  m.width = to_size(cfg.integer("model.width"), "model.width");
  m.key_dim = to_size(cfg.integer("model.key_dim"), "model.key_dim");
  m.blocks = to_size(cfg.integer("model.blocks"), "model.blocks");
  m.time_dim = to_size(cfg.integer("model.time_dim"), "model.time_dim");
  m.embed_init = cfg.real("model.embed_init");
  m.validate();
  return m;
}

oracle::GaussianMixture mixture_from(const RunConfig& cfg) {
  const std::string& preset = cfg.text("mixture.preset");
  if (preset == "two-class-2d") return oracle::GaussianMixture::two_class_2d();
  if (preset != "custom") throw ConfigError("mixture.preset must be two-class-2d or custom, got '" + preset + "'");
  std::vector<oracle::Component> components;
  for (const std::string& spec : split_list(cfg.text("mixture.components"), ';')) {
    const std::vector<double> v = parse_numbers(spec);
    // w, D means, D*D covariance, label: 2 + D + D^2 numbers.
    std::size_t dim = 0;
    while (2 + dim + dim * dim < v.size()) ++dim;
    if (dim == 0 || 2 + dim + dim * dim != v.size())
      throw ConfigError("mixture component '" + spec + "' must hold w, D means, D*D covariance and a label");
    oracle::Component c;
    c.weight = v[0];
    c.mean.assign(v.begin() + 1, v.begin() + 1 + static_cast<std::ptrdiff_t>(dim));
    c.covariance.assign(v.begin() + 1 + static_cast<std::ptrdiff_t>(dim), v.end() - 1);
    c.label = static_cast<int>(v.back());
    if (static_cast<double>(c.label) != v.back()) throw ConfigError("mixture component label must be an integer");
    components.push_back(std::move(c));
  }
  if (components.empty()) throw ConfigError("mixture.preset = custom needs mixture.components");
  std::map<int, int> tokens;
  for (const std::string& pair : split_list(cfg.text("mixture.tokens"), ',')) {
    const auto colon = pair.find(':');
    if (colon == std::string::npos) throw ConfigError("mixture.tokens entries must be token:class, got '" + pair + "'");
    tokens[static_cast<int>(parse_int(pair.substr(0, colon)))] = static_cast<int>(parse_int(pair.substr(colon + 1)));
  }
  try {
    return oracle::GaussianMixture(std::move(components), std::move(tokens));
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("invalid mixture: ") + e.what());
  }
}

oracle::PromptPolicy prompt_policy_from(const RunConfig& cfg) {
  oracle::PromptPolicy p;
  p.null_probability = cfg.real("prompts.null_probability");
  p.agnostic_token = to_int(cfg.integer("prompts.agnostic_token"), "prompts.agnostic_token");
  if (!(p.null_probability >= 0.0 && p.null_probability <= 1.0))
    throw ConfigError("prompts.null_probability must lie in [0, 1]");
  return p;
}

model::TeacherTrainConfig teacher_config_from(const RunConfig& cfg) {
  model::TeacherTrainConfig t;
  t.steps = cfg.integer("train.steps");
  t.batch = to_size(cfg.integer("train.batch"), "train.batch");
  t.learning_rate = cfg.real("train.lr");
  t.weight_decay = cfg.real("train.weight_decay");
  t.cosine_decay = cfg.boolean("train.cosine_decay");
  t.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  if (t.steps < 0) throw ConfigError("train.steps must be >= 0");
  if (t.batch == 0) throw ConfigError("train.batch must be >= 1");
  if (!(t.learning_rate > 0.0)) throw ConfigError("train.lr must be > 0");
  return t;
}

distill::DistillConfig distill_config_from(const RunConfig& cfg) {
  distill::DistillConfig d;
  d.set_mode(distill::parse_ablation_mode(cfg.text("distill.mode")), cfg.real("distill.kappa_fixed"),
             cfg.real("distill.kappa_min"), cfg.real("distill.kappa_max"));
  d.independent_kappa = cfg.boolean("distill.independent_kappa");
  d.weighting = distill::parse_weighting(cfg.text("distill.weighting"));
  const std::string& branch = cfg.text("distill.lora_null_branch");
  if (branch == "lora") {
    d.lora_null_branch = distill::LoraNullBranch::lora;
  } else if (branch == "base") {
    d.lora_null_branch = distill::LoraNullBranch::base;
  } else {
    throw ConfigError("distill.lora_null_branch must be lora or base, got '" + branch + "'");
  }
  d.t_min = to_int(cfg.integer("distill.t_min"), "distill.t_min");
  d.t_max = to_int(cfg.integer("distill.t_max"), "distill.t_max");
  d.lora_updates = to_int(cfg.integer("distill.lora_updates"), "distill.lora_updates");
  d.student_lr = cfg.real("distill.student_lr");
  d.lora_lr = cfg.real("distill.lora_lr");
  d.weight_decay = cfg.real("distill.weight_decay");
  d.batch = to_size(cfg.integer("distill.batch"), "distill.batch");
  d.steps = cfg.integer("distill.steps");
  d.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  d.lora = {to_size(cfg.integer("lora.rank"), "lora.rank"), cfg.real("lora.gamma"), d.seed};
  d.eval_every = cfg.integer("distill.eval_every");
  d.max_skip_fraction = cfg.real("distill.max_skip_fraction");
  d.validate(to_int(cfg.integer("schedule.T"), "schedule.T"));
  return d;
}

distill::EvalProtocol eval_protocol_from(const RunConfig& cfg, const std::vector<model::Prompt>& prompts) {
  return {prompts, to_size(cfg.integer("distill.eval_samples"), "distill.eval_samples"),
          derive_seed(static_cast<std::uint64_t>(cfg.integer("seed")), 60), to_int(cfg.integer("eval.k"), "eval.k")};
}

experiments::CfgSweepOptions cfg_sweep_options_from(const RunConfig& cfg) {
  experiments::CfgSweepOptions options;
  options.kappas = parse_real_list(cfg.text("cfg_sweep.kappas"));
  if (options.kappas.empty()) throw ConfigError("cfg_sweep.kappas is empty");
  options.prompts = parse_prompt_list(cfg.text("cfg_sweep.prompts"));
  options.samples = to_size(cfg.integer("cfg_sweep.samples"), "cfg_sweep.samples");
  options.steps = to_int(cfg.integer("sample.steps"), "sample.steps");
  options.alpha_floor = cfg.real("sample.alpha_floor");
  options.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  options.k = to_int(cfg.integer("eval.k"), "eval.k");
  return options;
}

std::optional<std::set<std::size_t>> parse_layers(std::string_view text) {
  if (text == "all") return std::nullopt;
  std::set<std::size_t> layers;
  for (const std::string& item : split_list(text, ',')) layers.insert(to_size(parse_int(item), "layer index"));
  return layers;
}

nasa::SweepOptions nasa_sweep_options_from(const RunConfig& cfg) {
  nasa::SweepOptions options;
  options.alphas = parse_real_list(cfg.text("nasa.alphas"));
  if (options.alphas.empty()) throw ConfigError("nasa.alphas is empty");
  options.samples = to_size(cfg.integer("nasa.samples"), "nasa.samples");
  options.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  options.layers = parse_layers(cfg.text("nasa.layers"));
  const std::string& method = cfg.text("nasa.method");
  if (method == "nasa") {
    options.method = nasa::SweepMethod::nasa;
  } else if (method == "output_cfg") {
    options.method = nasa::SweepMethod::output_cfg;
  } else if (method == "embedding") {
    options.method = nasa::SweepMethod::embedding;
  } else {
    throw ConfigError("nasa.method must be nasa, output_cfg or embedding");
  }
  return options;
}

std::vector<model::Prompt> parse_prompt_list(std::string_view text) {
  std::vector<model::Prompt> out;
  for (const std::string& item : split_list(text, ';')) out.push_back(model::Prompt::parse(item));
  if (out.empty()) throw ConfigError("prompt list is empty");
  return out;
}

CheckpointMeta checkpoint_meta(const RunConfig& cfg, model::Role role) {
  CheckpointMeta meta;
  meta.role = role;
  meta.config_hash = cfg.hash();
  meta.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  meta.schedule = diffusion::parse_schedule_kind(cfg.text("schedule.kind"));
  meta.T = to_int(cfg.integer("schedule.T"), "schedule.T");
  return meta;
}

}  // namespace snoopi::io
