// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <memory>

#include "common.hpp"
#include "snoopi/experiments.hpp"
#include "snoopi/io/format.hpp"
#include "snoopi/io/setup.hpp"
#include "snoopi/io/table.hpp"

namespace snoopi::cli {

namespace {

struct CfgSweepArgs {
  ConfigOptions config;
  std::string teacher;
  std::string out;
  std::string svg;
  std::optional<std::string> kappas;
  std::optional<std::size_t> samples;
  std::optional<int> steps;
  std::size_t jobs = 1;
};

int run_cfg_sweep(const CfgSweepArgs& a) {
  if (a.jobs == 0) throw ConfigError("--jobs must be >= 1");
  std::vector<std::pair<std::string, std::string>> flags;
  if (a.kappas) flags.emplace_back("cfg_sweep.kappas", *a.kappas);
  if (a.samples) flags.emplace_back("cfg_sweep.samples", std::to_string(*a.samples));
  if (a.steps) flags.emplace_back("sample.steps", std::to_string(*a.steps));
  const io::RunConfig cfg = a.config.build(flags);
  const auto schedule = io::schedule_from(cfg);
  const auto gm = io::mixture_from(cfg);
  const io::Checkpoint ck = load_model(a.teacher);

  experiments::CfgSweepOptions options = io::cfg_sweep_options_from(cfg);
  options.jobs = a.jobs;
  const auto rows = experiments::cfg_sweep(ck.model, schedule, gm, options);

  write_text(a.out, provenance_of(cfg) + experiments::cfg_sweep_csv(rows));
  io::SvgSeries precision{"precision", {}, {}}, recall{"recall", {}, {}};
  for (const auto& r : rows) {
    std::printf("kappa %-4s precision %.4f recall %.4f fd %.4f alignment %.4f\n",
                io::format_double(r.kappa).c_str(), r.precision, r.recall, r.fd, r.alignment);
    precision.x.push_back(r.kappa);
    precision.y.push_back(r.precision);
    recall.x.push_back(r.kappa);
    recall.y.push_back(r.recall);
  }
  if (!a.svg.empty()) write_text(a.svg, io::line_svg({precision, recall}, "kappa", "rate"));
  return kExitOk;
}

}  // namespace

CLI::App* add_cfg_sweep(CLI::App& app, int& exit_code) {
  auto args = std::make_shared<CfgSweepArgs>();
  CLI::App* sub = app.add_subcommand("cfg-sweep", "teacher precision and recall as the guidance scale grows");
  args->config.attach(*sub);
  sub->add_option("--teacher", args->teacher, "teacher checkpoint")->required();
  sub->add_option("--out", args->out, "table CSV (kappa, precision, recall, fd, alignment)")->required();
  sub->add_option("--svg", args->svg, "optional line plot");
  sub->add_option("--kappas", args->kappas, "comma-separated guidance scales (cfg_sweep.kappas)");
  sub->add_option("--samples", args->samples, "samples per prompt and scale (cfg_sweep.samples)");
  sub->add_option("--steps", args->steps, "DDIM steps (sample.steps)");
  sub->add_option("--jobs", args->jobs, "concurrent (prompt, kappa) cells");
  sub->callback([args, &exit_code] { exit_code = run_cfg_sweep(*args); });
  return sub;
}

}  // namespace snoopi::cli
