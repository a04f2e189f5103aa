// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>

#include "common.hpp"
#include "snoopi/diffusion/sampler.hpp"
#include "snoopi/io/format.hpp"
#include "snoopi/io/setup.hpp"
#include "snoopi/io/table.hpp"
#include "snoopi/nasa/nasa.hpp"
#include "snoopi/oracle/mixture.hpp"

namespace snoopi::cli {

namespace {

std::vector<int> bayes_labels(const oracle::GaussianMixture& gm, const ad::Array& x) {
  std::vector<int> out;
  for (std::size_t i = 0; i < x.rows(); ++i) out.push_back(gm.bayes_classify(x.row(i).data()).label);
  return out;
}

struct SampleArgs {
  ConfigOptions config;
  std::string checkpoint;
  std::string out;
  std::string svg;
  std::optional<std::size_t> count;
  std::optional<std::string> prompt;
  std::optional<std::string> negative;
  std::optional<double> kappa;
  std::optional<int> steps;
  std::optional<double> nasa_alpha;
};

int run_sample(const SampleArgs& a) {
  std::vector<std::pair<std::string, std::string>> flags;
  if (a.count) flags.emplace_back("sample.count", std::to_string(*a.count));
  if (a.prompt) flags.emplace_back("sample.prompt", *a.prompt);
  if (a.negative) flags.emplace_back("sample.negative", *a.negative);
  if (a.kappa) flags.emplace_back("sample.kappa", io::format_double(*a.kappa));
  if (a.steps) flags.emplace_back("sample.steps", std::to_string(*a.steps));
  if (a.nasa_alpha) flags.emplace_back("nasa.alpha", io::format_double(*a.nasa_alpha));
  const io::RunConfig cfg = a.config.build(flags);
  const auto schedule = io::schedule_from(cfg);
  const auto gm = io::mixture_from(cfg);
  const io::Checkpoint ck = load_model(a.checkpoint);
  const model::Prompt prompt = model::Prompt::parse(cfg.text("sample.prompt"));
  const std::string& negative_text = cfg.text("sample.negative");
  const std::optional<model::Prompt> negative =
      negative_text.empty() ? std::nullopt : std::optional<model::Prompt>(model::Prompt::parse(negative_text));
  const auto count = static_cast<std::size_t>(cfg.integer("sample.count"));
  if (count == 0) throw ConfigError("sample.count must be >= 1");
  const auto seed = static_cast<std::uint64_t>(cfg.integer("seed"));

  ad::Array x;
  if (ck.model.role() == model::Role::student) {
    const ad::Array z = diffusion::sampler_noise(count, ck.model.data_dim(), seed);
    if (negative) {
      const nasa::SteeredModel steered = nasa::install_nasa(
          ck.model, {cfg.real("nasa.alpha"), io::parse_layers(cfg.text("nasa.layers")), *negative});
      x = steered.generate(z, prompt, schedule);
    } else {
      x = model::student_generate(ck.model, z, prompt, schedule);
    }
  } else {
    diffusion::SamplerOptions options;
    options.steps = static_cast<int>(cfg.integer("sample.steps"));
    options.count = count;
    options.seed = seed;
    options.alpha_floor = cfg.real("sample.alpha_floor");
    x = diffusion::ddim_sample(ck.model, schedule, prompt, negative,
                               diffusion::GuidanceConfig::fixed(cfg.real("sample.kappa")), options);
  }
  write_text(a.out, provenance_of(cfg) +
                        io::points_csv(x, std::vector<std::string>(x.rows(), prompt.canonical().to_string()), seed));
  if (!a.svg.empty()) write_text(a.svg, io::scatter_svg(x, bayes_labels(gm, x), "prompt " + prompt.to_string()));
  std::printf("wrote %zu samples to %s\n", x.rows(), a.out.c_str());
  return kExitOk;
}

struct SweepArgs {
  ConfigOptions config;
  std::string student;
  std::string out;
  std::string pairs_dir;
  std::string svg;
  std::optional<std::string> alphas;
  std::optional<std::string> positive;
  std::optional<std::string> negative;
  std::optional<std::size_t> samples;
  std::optional<std::string> layers;
  bool output_cfg = false;
  bool embedding = false;
};

int run_sweep(const SweepArgs& a) {
  if (a.output_cfg && a.embedding) throw ConfigError("--output-cfg and --embedding-subtraction are exclusive");
  std::vector<std::pair<std::string, std::string>> flags;
  if (a.alphas) flags.emplace_back("nasa.alphas", *a.alphas);
  if (a.positive) flags.emplace_back("nasa.positive", *a.positive);
  if (a.negative) flags.emplace_back("nasa.negative", *a.negative);
  if (a.samples) flags.emplace_back("nasa.samples", std::to_string(*a.samples));
  if (a.layers) flags.emplace_back("nasa.layers", *a.layers);
  if (a.output_cfg) flags.emplace_back("nasa.method", "output_cfg");
  if (a.embedding) flags.emplace_back("nasa.method", "embedding");
  const io::RunConfig cfg = a.config.build(flags);
  const auto schedule = io::schedule_from(cfg);
  const auto gm = io::mixture_from(cfg);
  const io::Checkpoint ck = load_model(a.student);
  const model::Prompt positive = model::Prompt::parse(cfg.text("nasa.positive"));
  const model::Prompt negative = model::Prompt::parse(cfg.text("nasa.negative"));

  const nasa::SweepOptions options = io::nasa_sweep_options_from(cfg);
  const std::vector<nasa::SweepRow> rows = nasa::nasa_sweep(ck.model, schedule, gm, positive, negative, options);

  std::string table = provenance_of(cfg) + "alpha,removal_rate,alignment,fd\n";
  io::SvgSeries removal{"removal rate", {}, {}}, align{"alignment", {}, {}};
  for (const nasa::SweepRow& r : rows) {
    table += io::format_double(r.alpha) + "," + io::format_double(r.removal_rate) + "," +
             io::format_double(r.alignment) + "," + io::format_double(r.fd) + "\n";
    removal.x.push_back(r.alpha);
    removal.y.push_back(r.removal_rate);
    align.x.push_back(r.alpha);
    align.y.push_back(r.alignment);
    std::printf("alpha %-6s removal %.4f alignment %.4f fd %.4f\n", io::format_double(r.alpha).c_str(),
                r.removal_rate, r.alignment, r.fd);
  }
  write_text(a.out, table);
  if (!a.pairs_dir.empty()) {
    const std::string label = positive.to_string() + "-not-" + negative.to_string();
    for (const nasa::SweepRow& r : rows)
      write_text(std::filesystem::path(a.pairs_dir) / ("alpha_" + io::format_double(r.alpha) + ".csv"),
                 provenance_of(cfg) +
                     io::points_csv(r.samples, std::vector<std::string>(r.samples.rows(), label), options.seed));
  }
  if (!a.svg.empty()) write_text(a.svg, io::line_svg({removal, align}, "alpha", "rate"));
  return kExitOk;
}

}  // namespace

CLI::App* add_sample(CLI::App& app, int& exit_code) {
  auto args = std::make_shared<SampleArgs>();
  CLI::App* sub = app.add_subcommand(
      "sample", "draw samples: one step for a student checkpoint, guided DDIM for a teacher checkpoint");
  args->config.attach(*sub);
  sub->add_option("--checkpoint", args->checkpoint, "model checkpoint")->required();
  sub->add_option("--out", args->out, "points CSV (x, y, prompt, seed)")->required();
  sub->add_option("--svg", args->svg, "optional scatter plot");
  sub->add_option("--count", args->count, "number of samples (sample.count)");
  sub->add_option("--prompt", args->prompt, "prompt such as 2 or 1+3 (sample.prompt)");
  sub->add_option("--negative", args->negative,
                  "negative prompt: NASA for students, the unconditional CFG slot for teachers");
  sub->add_option("--kappa", args->kappa, "teacher guidance scale (sample.kappa)");
  sub->add_option("--steps", args->steps, "teacher DDIM steps (sample.steps)");
  sub->add_option("--nasa-alpha", args->nasa_alpha, "student NASA scale (nasa.alpha)");
  sub->callback([args, &exit_code] { exit_code = run_sample(*args); });
  return sub;
}

CLI::App* add_nasa_sweep(CLI::App& app, int& exit_code) {
  auto args = std::make_shared<SweepArgs>();
  CLI::App* sub = app.add_subcommand("nasa-sweep", "removal rate, alignment and FD of a steered student per alpha");
  args->config.attach(*sub);
  sub->add_option("--student", args->student, "student checkpoint")->required();
  sub->add_option("--out", args->out, "table CSV (alpha, removal_rate, alignment, fd)")->required();
  sub->add_option("--pairs-dir", args->pairs_dir, "directory for the per-alpha sample CSVs");
  sub->add_option("--svg", args->svg, "optional line plot");
  sub->add_option("--alphas", args->alphas, "comma-separated alphas (nasa.alphas)");
  sub->add_option("--positive", args->positive, "positive prompt (nasa.positive)");
  sub->add_option("--negative", args->negative, "negative prompt (nasa.negative)");
  sub->add_option("--samples", args->samples, "samples per alpha (nasa.samples)");
  sub->add_option("--layers", args->layers, "steered blocks: all or a list (nasa.layers)");
  sub->add_flag("--output-cfg", args->output_cfg, "comparison stub: CFG on the one-step outputs");
  sub->add_flag("--embedding-subtraction", args->embedding, "comparison stub: subtract the negative embedding");
  sub->callback([args, &exit_code] { exit_code = run_sweep(*args); });
  return sub;
}

}  // namespace snoopi::cli
