// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "snoopi/ad/ops.hpp"
#include "snoopi/ad/optimizer.hpp"
#include "snoopi/diffusion/sampler.hpp"
#include "snoopi/distill/vsd.hpp"
#include "snoopi/metrics/metrics.hpp"
#include "snoopi/model/training.hpp"
#include "snoopi/nasa/nasa.hpp"
#include "snoopi/oracle/mixture.hpp"
#include "snoopi/rng.hpp"

namespace {

using namespace snoopi;

ad::Array gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  ad::Array a({rows, cols});
  for (double& v : a.data()) v = rng.normal();
  return a;
}

const diffusion::NoiseSchedule& schedule() {
  static const auto s = diffusion::make_schedule(diffusion::ScheduleKind::cosine, 1000);
  return s;
}

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ad::Array a = gaussian(n, n, 1), b = gaussian(n, n, 2);
  for (auto _ : state) {
    ad::Tape tape;
    const ad::Var x = tape.constant(a), y = tape.constant(b);
    tape.backward(ad::sum(ad::matmul(x, y)));
    benchmark::DoNotOptimize(tape.adjoint(x).data().data());
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(16)->Arg(64)->Arg(128);

void BM_DenoiserPredict(benchmark::State& state) {
  const model::DenoiserModel m({}, 3);
  const ad::Array x = gaussian(static_cast<std::size_t>(state.range(0)), 2, 4);
  for (auto _ : state) benchmark::DoNotOptimize(m.predict_eps(x, 500, model::Prompt::of({1, 2})));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DenoiserPredict)->Arg(64)->Arg(1024);

void BM_TeacherTrainingStep(benchmark::State& state) {
  model::DenoiserModel m({}, 5);
  ad::AdamW opt(m.trainable_parameters(), {});
  const ad::Array x = gaussian(64, 2, 6), eps = gaussian(64, 2, 7);
  std::vector<int> t(64);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<int>(15 * i);
  const std::vector<model::Prompt> prompts(64, model::Prompt::of({2}));
  for (auto _ : state) {
    opt.zero_gradients();
    ad::Tape tape;
    const ad::Var loss = model::denoising_loss(tape, m, x, t, prompts, eps);
    tape.backward(loss);
    opt.step();
  }
}
BENCHMARK(BM_TeacherTrainingStep);

void BM_LoraTeacherStep(benchmark::State& state) {
  model::DenoiserModel lora({}, 8, model::Role::lora_teacher);
  lora.attach_lora({});
  ad::AdamW opt(lora.lora_parameters(), {.learning_rate = 1e-3});
  const ad::Array x0 = gaussian(64, 2, 9);
  const std::vector<model::Prompt> prompts(64, model::Prompt::of({1}));
  Rng rng(10);
  for (auto _ : state) benchmark::DoNotOptimize(distill::lora_teacher_step(lora, x0, prompts, schedule(), 20, 980, opt, rng));
}
BENCHMARK(BM_LoraTeacherStep);

void BM_OracleDdim(benchmark::State& state) {
  const auto gm = oracle::GaussianMixture::two_class_2d();
  const oracle::MixtureOracle eps(gm, schedule());
  diffusion::SamplerOptions options;
  options.steps = static_cast<int>(state.range(0));
  options.count = 1024;
  for (auto _ : state)
    benchmark::DoNotOptimize(diffusion::ddim_sample(eps, schedule(), model::Prompt::null(), std::nullopt,
                                                    diffusion::GuidanceConfig::fixed(1.0), options));
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_OracleDdim)->Arg(10)->Arg(100);

void BM_SteeredGeneration(benchmark::State& state) {
  const model::DenoiserModel m({}, 11, model::Role::student);
  const ad::Array z = gaussian(1024, 2, 12);
  const nasa::SteeredModel steered = nasa::install_nasa(m, {0.5, std::nullopt, model::Prompt::of({2})});
  for (auto _ : state) benchmark::DoNotOptimize(steered.generate(z, model::Prompt::of({1}), schedule()));
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_SteeredGeneration);

void BM_FrechetDistance(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ad::Array a = gaussian(n, 2, 13), b = gaussian(n, 2, 14);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::frechet_distance(a, b).distance);
}
BENCHMARK(BM_FrechetDistance)->Arg(2048)->Arg(8192);

void BM_PrecisionRecall(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ad::Array a = gaussian(n, 2, 15), b = gaussian(n, 2, 16);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::precision_recall(a, b, 3).precision);
}
BENCHMARK(BM_PrecisionRecall)->Arg(512)->Arg(2048);

}  // namespace

BENCHMARK_MAIN();
