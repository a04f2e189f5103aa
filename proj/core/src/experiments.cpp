// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/experiments.hpp"

#include <cmath>
#include <optional>

#include "snoopi/error.hpp"
#include "snoopi/io/format.hpp"
#include "snoopi/metrics/metrics.hpp"
#include "snoopi/parallel.hpp"
#include "snoopi/rng.hpp"

namespace snoopi::experiments {

std::vector<CfgSweepRow> cfg_sweep(const diffusion::NoisePredictor& teacher, const diffusion::NoiseSchedule& schedule,
                                   const oracle::GaussianMixture& mixture, const CfgSweepOptions& options) {
  SNOOPI_REQUIRE(!options.kappas.empty(), "cfg_sweep: kappa list is empty");
  SNOOPI_REQUIRE(!options.prompts.empty(), "cfg_sweep: prompt list is empty");
  const std::size_t P = options.prompts.size(), K = options.kappas.size();
  std::vector<ad::Array> noise, real;
  std::vector<std::optional<int>> prompted;
  for (std::size_t p = 0; p < P; ++p) {
    const std::set<int> classes = mixture.classes_for_prompt(options.prompts[p]);
    noise.push_back(diffusion::sampler_noise(options.samples, mixture.dim(), derive_seed(options.seed, 2 * p + 1)));
    real.push_back(mixture.sample_classes(classes, options.samples, derive_seed(options.seed, 2 * p + 2)).points);
    prompted.push_back(classes.size() == 1 ? std::optional<int>(*classes.begin()) : std::nullopt);
  }
  std::vector<CfgSweepRow> cells(P * K);
  parallel_for(P * K, options.jobs, [&](std::size_t cell) {
    const std::size_t p = cell / K, k = cell % K;
    const std::vector<double> kappas(options.samples, options.kappas[k]);
    const ad::Array fake = diffusion::ddim_sample_from(teacher, schedule, options.prompts[p], std::nullopt, kappas,
                                                       noise[p], options.steps, options.alpha_floor);
    const metrics::PrecisionRecall pr = metrics::precision_recall(real[p], fake, options.k);
    cells[cell] = {options.kappas[k], pr.precision, pr.recall, metrics::frechet_distance(real[p], fake).distance,
                   prompted[p] ? metrics::alignment(mixture, fake, *prompted[p]) : std::nan("")};
  });
  std::vector<CfgSweepRow> rows(K);
  for (std::size_t k = 0; k < K; ++k) {
    rows[k].kappa = options.kappas[k];
    std::size_t aligned = 0;
    for (std::size_t p = 0; p < P; ++p) {
      const CfgSweepRow& c = cells[p * K + k];
      rows[k].precision += c.precision / static_cast<double>(P);
      rows[k].recall += c.recall / static_cast<double>(P);
      rows[k].fd += c.fd / static_cast<double>(P);
      if (!std::isnan(c.alignment)) {
        rows[k].alignment += c.alignment;
        ++aligned;
      }
    }
    rows[k].alignment = aligned ? rows[k].alignment / static_cast<double>(aligned) : std::nan("");
  }
  return rows;
}

std::string cfg_sweep_csv(std::span<const CfgSweepRow> rows) {
  std::string out = "kappa,precision,recall,fd,alignment\n";
  for (const CfgSweepRow& r : rows)
    out += io::format_double(r.kappa) + "," + io::format_double(r.precision) + "," + io::format_double(r.recall) + "," +
           io::format_double(r.fd) + "," + io::format_double(r.alignment) + "\n";
  return out;
}

std::vector<DistillRun> run_arms(std::span<const DistillArm> arms, std::span<const std::uint64_t> seeds,
                                 const model::DenoiserModel& teacher, std::span<const model::Prompt> prompts,
                                 const diffusion::NoiseSchedule& schedule, const oracle::GaussianMixture& mixture,
                                 const ArmOptions& options) {
  SNOOPI_REQUIRE(!arms.empty() && !seeds.empty(), "run_arms: need at least one arm and one seed");
  const std::size_t S = seeds.size();
  std::vector<std::optional<DistillRun>> slots(arms.size() * S);
  distill::EvalProtocol final_protocol = options.protocol;
  final_protocol.samples = options.final_samples;
  final_protocol.seed = derive_seed(options.protocol.seed, 77);
  parallel_for(slots.size(), options.jobs, [&](std::size_t i) {
    const DistillArm& arm = arms[i / S];
    distill::DistillConfig cfg = arm.config;
    cfg.seed = seeds[i % S];
    cfg.lora.seed = cfg.seed;
    const distill::Evaluator periodic = distill::make_evaluator(mixture, schedule, options.protocol);
    distill::DistillResult result = distill::distill(cfg, teacher, prompts, schedule, periodic);
    const distill::EvalSummary final_eval = distill::make_evaluator(mixture, schedule, final_protocol)(result.student);
    slots[i].emplace(DistillRun{arm.name, cfg.seed, std::move(result), final_eval});
  });
  std::vector<DistillRun> runs;
  runs.reserve(slots.size());
  for (auto& s : slots) runs.push_back(std::move(*s));
  return runs;
}

std::string runs_csv(std::span<const DistillRun> runs) {
  std::string out = "arm,seed,final_fd,final_precision,final_recall,final_alignment,skipped_steps\n";
  for (const DistillRun& r : runs)
    out += r.arm + "," + std::to_string(r.seed) + "," + io::format_double(r.final_eval.fd) + "," +
           io::format_double(r.final_eval.precision) + "," + io::format_double(r.final_eval.recall) + "," +
           io::format_double(r.final_eval.alignment) + "," + std::to_string(r.result.trace.skipped_steps) + "\n";
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  SNOOPI_REQUIRE(!values.empty(), "mean_std: no values");
  MeanStd out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

}  // namespace snoopi::experiments
