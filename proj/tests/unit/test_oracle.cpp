// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "snoopi/diffusion/guidance.hpp"
#include "snoopi/error.hpp"
#include "snoopi/oracle/mixture.hpp"
#include "snoopi/oracle/task.hpp"
#include "snoopi/rng.hpp"

namespace snoopi::oracle {
namespace {

using ad::Array;

const diffusion::NoiseSchedule& cosine() {
  static const diffusion::NoiseSchedule s = diffusion::make_schedule(diffusion::ScheduleKind::cosine, 1000);
  return s;
}

GaussianMixture symmetric_pair() {
  return GaussianMixture({{0.5, {1.5, -0.5}, {0.3, 0.1, 0.1, 0.4}, 0}, {0.5, {-1.5, 0.5}, {0.3, 0.1, 0.1, 0.4}, 1}});
}

TEST(Sample, ZeroCovarianceCollapsesToMean) {
  const GaussianMixture gm({{1.0, {0.7, -3.0}, {0, 0, 0, 0}, 0}});
  EXPECT_TRUE(gm.floored(0));
  const LabeledPoints p = gm.sample(100, 1);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_NEAR(p.points(i, 0), 0.7, 1e-3);
    EXPECT_NEAR(p.points(i, 1), -3.0, 1e-3);
  }
}

TEST(Sample, ZeroWeightComponentNeverDrawn) {
  const GaussianMixture gm({{1.0, {0, 0}, {1, 0, 0, 1}, 0}, {0.0, {5, 5}, {1, 0, 0, 1}, 1}});
  for (int label : gm.sample(1000, 2).labels) EXPECT_EQ(label, 0);
}

TEST(Sample, EqualComponentsSplitEvenly) {
  const GaussianMixture gm({{0.5, {-2, 0}, {1, 0, 0, 1}, 0}, {0.5, {2, 0}, {1, 0, 0, 1}, 1}});
  const LabeledPoints p = gm.sample(100000, 3);
  const double ones = std::accumulate(p.labels.begin(), p.labels.end(), 0.0) / 100000.0;
  EXPECT_NEAR(ones, 0.5, 0.01);
}

TEST(Sample, DeterministicAndPrefixStable) {
  const GaussianMixture gm = GaussianMixture::two_class_2d();
  const LabeledPoints a = gm.sample(50, 4), b = gm.sample(50, 4), c = gm.sample(20, 4);
  EXPECT_TRUE(a.points.bit_equal(b.points));
  for (std::size_t i = 0; i < c.points.size(); ++i) EXPECT_EQ(c.points[i], a.points[i]);
}

TEST(Mixture, InvalidDefinitionsAreRejected) {
  EXPECT_THROW(GaussianMixture({}), ContractViolation);
  EXPECT_THROW(GaussianMixture({{0.7, {0, 0}, {1, 0, 0, 1}, 0}}), ContractViolation);
  EXPECT_THROW(GaussianMixture({{1.0, {0, 0}, {1, 0.5, 0, 1}, 0}}), ContractViolation);
  EXPECT_THROW(GaussianMixture({{1.0, {0, 0}, {1, 0, 0}, 0}}), ContractViolation);
  EXPECT_THROW(GaussianMixture({{1.0, {0, 0}, {-1, 0, 0, 1}, 0}}), ContractViolation);
}

TEST(AnalyticEps, StandardNormalIsSigmaTimesX) {
  const GaussianMixture gm({{1.0, {0, 0}, {1, 0, 0, 1}, 0}});
  const Array x = Array::matrix(3, 2, {0.5, -1.0, 2.0, 0.1, -0.3, 0.0});
  for (int t : {1, 250, 664, 999}) {
    const Array eps = gm.analytic_eps(x, t, cosine());
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(eps[i], cosine().sigma(t) * x[i], 1e-12);
  }
}

TEST(AnalyticEps, ZeroAtFirstStepAndAtSymmetryPoint) {
  const GaussianMixture gm = GaussianMixture::two_class_2d();
  const Array x = Array::matrix(2, 2, {1.0, 3.0, -0.2, 0.4});
  EXPECT_EQ(ad::max_abs(gm.analytic_eps(x, 0, cosine())), 0.0);
  const GaussianMixture pm({{0.5, {1.0, 1.0}, {1, 0, 0, 1}, 0}, {0.5, {-1.0, -1.0}, {1, 0, 0, 1}, 1}});
  EXPECT_LT(ad::max_abs(pm.analytic_eps(Array::matrix(1, 2, {0.0, 0.0}), 500, cosine())), 1e-15);
}

TEST(AnalyticEps, MatchesFiniteDifferenceOfLogDensity) {
  const GaussianMixture gm = symmetric_pair();
  const double h = 1e-5;
  for (int t : {30, 200, 500, 800, 970})
    for (double x0 : {-2.0, -0.4, 0.3, 1.7})
      for (double x1 : {-1.0, 0.6})
        for (const std::set<int>& cls : {std::set<int>{}, std::set<int>{1}}) {
          const Array x = Array::matrix(1, 2, {x0, x1});
          const Array eps = gm.analytic_eps(x, t, cosine(), cls);
          for (int d = 0; d < 2; ++d) {
            std::vector<double> up{x0, x1}, down{x0, x1};
            up[static_cast<std::size_t>(d)] += h;
            down[static_cast<std::size_t>(d)] -= h;
            const double grad =
                (gm.log_marginal(up, t, cosine(), cls) - gm.log_marginal(down, t, cosine(), cls)) / (2 * h);
            EXPECT_NEAR(eps[static_cast<std::size_t>(d)], -cosine().sigma(t) * grad, 1e-5);
          }
        }
}

TEST(AnalyticEps, ConditionalPassesThroughUnitGuidance) {
  const GaussianMixture gm = GaussianMixture::two_class_2d();
  const MixtureOracle oracle(gm, cosine());
  const Array x = Array::matrix(2, 2, {0.3, -0.8, -1.2, 2.2});
  const model::Prompt a = model::Prompt::of({TwoClassTokens::class_a});
  EXPECT_TRUE(diffusion::guided_predict(oracle, x, 400, a, 1.0).bit_equal(gm.analytic_eps(x, 400, cosine(), {0})));
}

TEST(Bayes, ComponentMeansAreClassifiedToTheirClass) {
  const GaussianMixture gm = GaussianMixture::two_class_2d();
  for (const Component& c : gm.components()) {
    const Classification r = gm.bayes_classify(c.mean);
    EXPECT_EQ(r.label, c.label);
    EXPECT_GT(r.posterior[static_cast<std::size_t>(c.label)], 0.999);
  }
}

TEST(Bayes, TieGoesToLowerClass) {
  const GaussianMixture gm({{0.5, {-1, 0}, {1, 0, 0, 1}, 0}, {0.5, {1, 0}, {1, 0, 0, 1}, 1}});
  const std::vector<double> mid{0.0, 0.7};
  const Classification r = gm.bayes_classify(mid);
  EXPECT_EQ(r.label, 0);
  EXPECT_DOUBLE_EQ(r.posterior[0], 0.5);
}

TEST(Bayes, PosteriorSumsToOneAndFarPointsDoNotUnderflow) {
  const GaussianMixture gm = GaussianMixture::two_class_2d();
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> x{rng.uniform(-6, 6), rng.uniform(-6, 6)};
    const Classification r = gm.bayes_classify(x);
    EXPECT_NEAR(r.posterior[0] + r.posterior[1], 1.0, 1e-12);
  }
  const std::vector<double> far{-300.0, 10.0};
  const Classification r = gm.bayes_classify(far);
  EXPECT_EQ(r.label, 0);
  EXPECT_TRUE(std::isfinite(r.posterior[0]));
}

TEST(Task, StandardTaskLayout) {
  const GaussianMixture gm = GaussianMixture::two_class_2d();
  EXPECT_EQ(gm.class_count(), 2);
  EXPECT_EQ(gm.components().size(), 4u);
  EXPECT_EQ(gm.class_for_token(TwoClassTokens::class_a), 0);
  EXPECT_EQ(gm.class_for_token(TwoClassTokens::class_b), 1);
  EXPECT_FALSE(gm.class_for_token(TwoClassTokens::agnostic).has_value());
  EXPECT_TRUE(gm.classes_for_prompt(model::Prompt::of({TwoClassTokens::agnostic})).empty());
  for (const Component& c : gm.components()) EXPECT_EQ(c.label, c.mean[0] < 0 ? 0 : 1);
}

TEST(Task, PromptPolicyForms) {
  const GaussianMixture gm = GaussianMixture::two_class_2d();
  Rng rng(6);
  const PromptPolicy policy;
  int nulls = 0;
  std::set<model::Prompt> seen;
  for (int i = 0; i < 4000; ++i) {
    model::Prompt p = draw_prompt(gm, 1, policy, rng);
    if (p.is_null()) ++nulls;
    else seen.insert(p.canonical());
  }
  EXPECT_NEAR(nulls / 4000.0, 0.15, 0.025);
  EXPECT_EQ(seen, (std::set<model::Prompt>{model::Prompt::of({1}), model::Prompt::of({3}), model::Prompt::of({1, 3})}));
}

TEST(Task, OracleAgainstItselfHasFullReduction) {
  const GaussianMixture gm = GaussianMixture::two_class_2d();
  const MixtureOracle oracle(gm, cosine());
  const EpsBenchmark b = heldout_eps_mse(oracle, gm, cosine(), 500, 7);
  EXPECT_LT(b.model_mse, 1e-24);
  EXPECT_GT(b.zero_mse, 0.0);
  EXPECT_DOUBLE_EQ(b.reduction(), 1.0);
}

}  // namespace
}  // namespace snoopi::oracle
