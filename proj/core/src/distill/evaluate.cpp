// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/distill/evaluate.hpp"

#include <memory>

#include "snoopi/diffusion/sampler.hpp"
#include "snoopi/error.hpp"
#include "snoopi/metrics/metrics.hpp"

namespace snoopi::distill {

namespace {

struct PromptSet {
  model::Prompt prompt;
  ad::Array z;
  ad::Array real;
  std::optional<int> prompted_class;
};

}  // namespace

Evaluator make_evaluator(const oracle::GaussianMixture& mixture, const diffusion::NoiseSchedule& schedule,
                         EvalProtocol protocol) {
  SNOOPI_REQUIRE(!protocol.prompts.empty(), "evaluation prompt set is empty");
  SNOOPI_REQUIRE(protocol.samples >= protocol.prompts.size() * static_cast<std::size_t>(protocol.k + 1),
                 "too few evaluation samples for the prompt set");
  auto sets = std::make_shared<std::vector<PromptSet>>();
  const std::size_t per = protocol.samples / protocol.prompts.size();
  for (std::size_t i = 0; i < protocol.prompts.size(); ++i) {
    const std::size_t n = per + (i < protocol.samples % protocol.prompts.size() ? 1 : 0);
    const model::Prompt& p = protocol.prompts[i];
    const std::set<int> classes = mixture.classes_for_prompt(p);
    PromptSet set{p, diffusion::sampler_noise(n, mixture.dim(), derive_seed(protocol.seed, 2 * i + 1)),
                  mixture.sample_classes(classes, n, derive_seed(protocol.seed, 2 * i + 2)).points, std::nullopt};
    if (classes.size() == 1) set.prompted_class = *classes.begin();
    sets->push_back(std::move(set));
  }
  const int k = protocol.k;
  return [&mixture, &schedule, sets, k](const model::DenoiserModel& student) {
    EvalSummary summary;
    std::size_t aligned = 0;
    for (const PromptSet& set : *sets) {
      const ad::Array fake = model::student_generate(student, set.z, set.prompt, schedule);
      summary.fd += metrics::frechet_distance(set.real, fake).distance;
      const metrics::PrecisionRecall pr = metrics::precision_recall(set.real, fake, k);
      summary.precision += pr.precision;
      summary.recall += pr.recall;
      if (set.prompted_class) {
        summary.alignment += metrics::alignment(mixture, fake, *set.prompted_class);
        ++aligned;
      }
    }
    const auto n = static_cast<double>(sets->size());
    summary.fd /= n;
    summary.precision /= n;
    summary.recall /= n;
    if (aligned > 0) summary.alignment /= static_cast<double>(aligned);
    return summary;
  };
}

}  // namespace snoopi::distill
