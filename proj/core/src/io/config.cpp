// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/io/config.hpp"

#include <algorithm>

#include "snoopi/error.hpp"
#include "snoopi/io/checkpoint.hpp"
#include "snoopi/io/format.hpp"

namespace snoopi::io {

namespace {

using K = ValueKind;

std::vector<KeySpec> build_keys() {
  std::vector<KeySpec> keys = {
      {"seed", K::integer, "0", "master seed for every random stream"},
      {"schedule.kind", K::text, "cosine", "noise schedule: cosine or linear"},
      {"schedule.T", K::integer, "1000", "number of diffusion timesteps"},
      {"model.data_dim", K::integer, "2", "data dimension D"},
      {"model.vocab", K::integer, "16", "prompt vocabulary size V (token 0 is null)"},
      {"model.max_prompt_length", K::integer, "4", "longest prompt L_max"},
      {"model.embed_dim", K::integer, "32", "token embedding width d_c"},
      {"model.width", K::integer, "64", "hidden width W"},
      {"model.key_dim", K::integer, "32", "attention key width d"},
      {"model.blocks", K::integer, "3", "number of residual blocks N"},
      {"model.time_dim", K::integer, "16", "sinusoidal timestep feature size"},
      {"model.embed_init", K::real, "0", "token embeddings start uniform in [-embed_init, embed_init]"},
      {"mixture.preset", K::text, "two-class-2d", "data distribution: two-class-2d or custom"},
      {"mixture.components", K::text, "",
       "custom components 'w m1 .. mD c11 .. cDD label' separated by ';'"},
      {"mixture.tokens", K::text, "", "custom token:class pairs separated by ','"},
      {"prompts.null_probability", K::real, "0.15", "fraction of training prompts replaced by the null prompt"},
      {"prompts.agnostic_token", K::integer, "1", "token meaning 'any class'"},
      {"train.steps", K::integer, "20000", "teacher optimizer steps"},
      {"train.batch", K::integer, "64", "teacher batch size"},
      {"train.lr", K::real, "0.002", "teacher peak learning rate"},
      {"train.cosine_decay", K::boolean, "true", "cosine learning-rate decay to zero"},
      {"train.weight_decay", K::real, "0", "decoupled weight decay"},
      {"train.eval_samples", K::integer, "4096", "held-out draws for the eps-MSE check"},
      {"distill.mode", K::text, "both", "random-kappa roles: none, teacher, lora or both"},
      {"distill.kappa_fixed", K::real, "4.5", "kappa for roles in fixed mode"},
      {"distill.kappa_min", K::real, "0.5", "lower end of the random kappa interval"},
      {"distill.kappa_max", K::real, "4", "upper end of the random kappa interval"},
      {"distill.independent_kappa", K::boolean, "false", "draw kappa separately for each random role"},
      {"distill.weighting", K::text, "sigma2", "w(t): sigma2 or constant"},
      {"distill.lora_null_branch", K::text, "lora", "unconditional branch of the LoRA teacher: lora or base"},
      {"distill.t_min", K::integer, "20", "smallest distillation timestep"},
      {"distill.t_max", K::integer, "980", "largest distillation timestep"},
      {"distill.lora_updates", K::integer, "1", "LoRA-teacher steps per student step"},
      {"distill.student_lr", K::real, "0.0001", "student learning rate"},
      {"distill.lora_lr", K::real, "0.001", "LoRA-teacher learning rate"},
      {"distill.weight_decay", K::real, "0", "student decoupled weight decay"},
      {"distill.batch", K::integer, "64", "distillation batch size"},
      {"distill.steps", K::integer, "2000", "student steps"},
      {"distill.eval_every", K::integer, "500", "evaluation period in student steps"},
      {"distill.eval_samples", K::integer, "2048", "samples per periodic evaluation"},
      {"distill.prompts", K::text, "1;2;3", "training prompts, ';'-separated, tokens joined by '+'"},
      {"distill.max_skip_fraction", K::real, "0.01", "abort when more steps than this fraction are skipped"},
      {"lora.rank", K::integer, "64", "adapter rank r"},
      {"lora.gamma", K::real, "128", "adapter scaling gamma (effective scale gamma/r)"},
      {"sample.count", K::integer, "1024", "samples to emit"},
      {"sample.prompt", K::text, "2", "prompt to sample"},
      {"sample.negative", K::text, "", "negative prompt for teacher sampling (empty: null prompt)"},
      {"sample.kappa", K::real, "1", "guidance scale for teacher sampling"},
      {"sample.steps", K::integer, "100", "DDIM steps for teacher sampling"},
      {"sample.alpha_floor", K::real, "0.06", "smallest alpha at which the pure-noise start is evaluated"},
      {"eval.k", K::integer, "3", "k of the k-NN precision/recall estimator"},
      {"eval.real_samples", K::integer, "2048", "oracle reference samples"},
      {"cfg_sweep.kappas", K::text, "1,2,3,4,5", "guidance scales of the teacher sweep"},
      {"cfg_sweep.samples", K::integer, "4096", "samples per prompt and scale"},
      {"cfg_sweep.prompts", K::text, "2;3", "prompts averaged in the sweep"},
      {"nasa.alpha", K::real, "0.5", "removal scale alpha"},
      {"nasa.alphas", K::text, "0,0.25,0.5,0.75,1", "alphas of the sweep"},
      {"nasa.positive", K::text, "1", "positive prompt"},
      {"nasa.negative", K::text, "2", "negative prompt"},
      {"nasa.layers", K::text, "all", "steered blocks: all or a ','-separated list"},
      {"nasa.samples", K::integer, "4096", "samples per alpha"},
      {"nasa.method", K::text, "nasa", "nasa, output_cfg or embedding"},
  };
  std::sort(keys.begin(), keys.end(), [](const KeySpec& a, const KeySpec& b) { return a.key < b.key; });
  return keys;
}

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string normalise(const KeySpec& spec, std::string_view raw) {
  const std::string value = trim(raw);
  switch (spec.kind) {
    case K::integer:
      return std::to_string(parse_int(value));
    case K::real: {
      const double v = parse_double(value);
      return format_double(v);
    }
    case K::boolean:
      if (value == "true" || value == "1" || value == "yes") return "true";
      if (value == "false" || value == "0" || value == "no") return "false";
      throw ConfigError("'" + spec.key + "' expects true or false, got '" + value + "'");
    case K::text:
      return value;
  }
  return value;
}

}  // namespace

const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys = build_keys();
  return keys;
}

RunConfig::RunConfig() {
  for (const KeySpec& k : config_keys()) values_[k.key] = normalise(k, k.default_value);
}

const KeySpec& RunConfig::spec(std::string_view key) const {
  const auto& keys = config_keys();
  const auto it = std::lower_bound(keys.begin(), keys.end(), key,
                                   [](const KeySpec& k, std::string_view v) { return k.key < v; });
  if (it == keys.end() || it->key != key) throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  return *it;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const KeySpec& s = spec(key);
  try {
    values_[s.key] = normalise(s, value);
  } catch (const ConfigError& e) {
    throw ConfigError("'" + s.key + "': " + e.what());
  }
}

bool RunConfig::is_default(std::string_view key) const {
  const KeySpec& s = spec(key);
  return values_.find(key)->second == normalise(s, s.default_value);
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const std::string content = trim(line);
    if (content.empty() || content[0] == '#') continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  return parse(bytes);
}

const std::string& RunConfig::text(std::string_view key) const {
  spec(key);
  return values_.find(key)->second;
}

std::int64_t RunConfig::integer(std::string_view key) const {
  const KeySpec& s = spec(key);
  SNOOPI_REQUIRE(s.kind == K::integer, "'" + s.key + "' is not an integer key");
  return parse_int(values_.find(key)->second);
}

double RunConfig::real(std::string_view key) const {
  const KeySpec& s = spec(key);
  SNOOPI_REQUIRE(s.kind == K::real, "'" + s.key + "' is not a real key");
  return parse_double(values_.find(key)->second);
}

bool RunConfig::boolean(std::string_view key) const {
  const KeySpec& s = spec(key);
  SNOOPI_REQUIRE(s.kind == K::boolean, "'" + s.key + "' is not a boolean key");
  return values_.find(key)->second == "true";
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

std::uint64_t RunConfig::hash() const { return fnv1a(serialize()); }

std::string RunConfig::defaults_text() {
  std::string out;
  for (const KeySpec& k : config_keys()) out += "# " + k.help + "\n" + k.key + " = " + normalise(k, k.default_value) + "\n";
  return out;
}

std::vector<std::string> split_list(std::string_view text, char sep) {
  std::vector<std::string> out;
  while (true) {
    const auto pos = text.find(sep);
    std::string item = trim(text.substr(0, pos));
    if (!item.empty()) out.push_back(std::move(item));
    if (pos == std::string_view::npos) break;
    text = text.substr(pos + 1);
  }
  return out;
}

std::vector<double> parse_real_list(std::string_view text) {
  std::vector<double> out;
  for (const std::string& item : split_list(text, ',')) out.push_back(parse_double(item));
  return out;
}

}  // namespace snoopi::io
