// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "snoopi/diffusion/sampler.hpp"
#include "snoopi/error.hpp"
#include "snoopi/io/checkpoint.hpp"
#include "snoopi/metrics/metrics.hpp"
#include "snoopi/nasa/nasa.hpp"
#include "snoopi/rng.hpp"

namespace snoopi::nasa {
namespace {

using ad::Array;
using model::DenoiserModel;
using model::Prompt;

Array noise(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Array a({rows, cols});
  for (double& v : a.data()) v = rng.normal();
  return a;
}

model::DenoiserConfig small() {
  model::DenoiserConfig c;
  c.vocab = 6;
  c.embed_dim = 4;
  c.width = 8;
  c.key_dim = 4;
  c.blocks = 2;
  c.time_dim = 4;
  c.embed_init = 0.5;
  return c;
}

const diffusion::NoiseSchedule& cosine() {
  static const diffusion::NoiseSchedule s = diffusion::make_schedule(diffusion::ScheduleKind::cosine, 1000);
  return s;
}

TEST(Attention, SingleKeyByHand) {
  const Array q = Array::matrix(1, 2, {0.3, -0.7});
  const Array c_p = Array::matrix(1, 2, {1, 0});
  const Array c_n = Array::matrix(1, 2, {0, 1});
  const Array w_k = Array::matrix(2, 2, {0.5, 1.0, -1.0, 2.0});
  const Array w_v = Array::matrix(2, 2, {2, 0, 1, 1});
  const SteeredAttentionOutput out = nasa_attention(q, c_p, c_n, w_k, w_v, 0.5);
  EXPECT_TRUE(out.positive.bit_equal(Array::matrix(1, 2, {2, 0})));
  EXPECT_TRUE(out.negative.bit_equal(Array::matrix(1, 2, {1, 1})));
  EXPECT_TRUE(out.combined.bit_equal(Array::matrix(1, 2, {1.5, -0.5})));
}

TEST(Attention, ZeroAlphaIsPositiveBranchAndSamePromptScales) {
  const Array q = noise(3, 4, 1), c_p = noise(2, 5, 2), c_n = noise(3, 5, 3);
  const Array w_k = noise(5, 4, 4), w_v = noise(5, 4, 5);
  const SteeredAttentionOutput zero = nasa_attention(q, c_p, c_n, w_k, w_v, 0.0);
  EXPECT_TRUE(zero.combined.bit_equal(zero.positive));
  const SteeredAttentionOutput same = nasa_attention(q, c_p, c_p, w_k, w_v, 0.3);
  EXPECT_TRUE(same.negative.bit_equal(same.positive));
  for (std::size_t i = 0; i < same.combined.size(); ++i)
    EXPECT_NEAR(same.combined[i], 0.7 * same.positive[i], 1e-15);
}

TEST(Attention, AffineInAlpha) {
  const Array q = noise(2, 4, 6), c_p = noise(2, 5, 7), c_n = noise(1, 5, 8);
  const Array w_k = noise(5, 4, 9), w_v = noise(5, 4, 10);
  const auto z = [&](double a) { return nasa_attention(q, c_p, c_n, w_k, w_v, a).combined; };
  const Array a = z(0.2), b = z(1.4), m = z(0.8);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i] + b[i] - 2.0 * m[i], 0.0, 1e-10);
}

TEST(Attention, DimensionMismatchIsContractViolation) {
  EXPECT_THROW(nasa_attention(noise(1, 4, 1), noise(1, 3, 2), noise(1, 5, 3), noise(5, 4, 4), noise(5, 4, 5), 0.5),
               ContractViolation);
}

TEST(Install, ZeroAlphaIsBitIdenticalForAnyNegative) {
  const DenoiserModel m(small(), 11);
  const Array x = noise(5, 2, 12);
  const Prompt p = Prompt::of({1, 3});
  const Array base = m.predict_eps(x, 300, p);
  for (const Prompt& neg : {Prompt::of({2}), Prompt::of({4, 5}), Prompt::null()}) {
    const SteeredModel view = install_nasa(m, {0.0, std::nullopt, neg});
    EXPECT_TRUE(view.predict(x, 300, p).bit_equal(base));
  }
  const Array z = noise(5, 2, 13);
  EXPECT_TRUE(install_nasa(m, {0.0, std::nullopt, Prompt::of({2})})
                  .generate(z, p, cosine())
                  .bit_equal(model::student_generate(m, z, p, cosine())));
}

TEST(Install, SamePromptEqualsScaledOutputProjection) {
  // With y- = y the steered block emits (1 - alpha) Z+, which a copy of the model with a
  // scaled output projection weight reproduces.
  const DenoiserModel m(small(), 14);
  const Array x = noise(4, 2, 15);
  const Prompt p = Prompt::of({2, 5});
  const double alpha = 0.35;
  for (std::size_t block = 0; block < m.block_count(); ++block) {
    const SteeredModel view = install_nasa(m, {alpha, std::set<std::size_t>{block}, p});
    DenoiserModel scaled = m;
    for (double& v : scaled.find_parameter("block" + std::to_string(block) + ".attn.o.weight")->value().data())
      v *= 1.0 - alpha;
    EXPECT_LT(ad::max_abs_diff(view.predict(x, 600, p), scaled.predict_eps(x, 600, p)), 1e-12) << block;
  }
}

TEST(Install, MaskedOutLayersAreStandardAttention) {
  model::DenoiserConfig one = small();
  one.blocks = 1;
  const DenoiserModel m(one, 16);
  const Array x = noise(3, 2, 17);
  EXPECT_THROW(install_nasa(m, {0.5, std::set<std::size_t>{1}, Prompt::of({2})}), ConfigError);
  const DenoiserModel two(small(), 16);
  const SteeredModel first = install_nasa(two, {0.8, std::set<std::size_t>{0}, Prompt::of({2})});
  const SteeredModel both = install_nasa(two, {0.8, std::nullopt, Prompt::of({2})});
  const Prompt p = Prompt::of({1});
  EXPECT_FALSE(first.predict(x, 200, p).bit_equal(both.predict(x, 200, p)));
  EXPECT_FALSE(first.predict(x, 200, p).bit_equal(two.predict_eps(x, 200, p)));
}

TEST(Install, InvalidConfigurations) {
  const DenoiserModel m(small(), 18);
  EXPECT_THROW(install_nasa(m, {0.5, std::set<std::size_t>{}, Prompt::of({2})}), ConfigError);
  EXPECT_THROW(install_nasa(m, {-0.1, std::nullopt, Prompt::of({2})}), ConfigError);
  EXPECT_THROW(install_nasa(m, {INFINITY, std::nullopt, Prompt::of({2})}), ConfigError);
}

TEST(Install, SteeringNeverTouchesParameters) {
  const DenoiserModel m(small(), 19);
  const std::string before = io::encode_checkpoint(m, {});
  {
    const SteeredModel view = install_nasa(m, {0.9, std::nullopt, Prompt::of({3})});
    view.predict(noise(8, 2, 20), 500, Prompt::of({1}));
    view.generate(noise(8, 2, 21), Prompt::of({1}), cosine());
  }
  EXPECT_EQ(io::encode_checkpoint(m, {}), before);
}

TEST(Sweep, ZeroAlphaMatchesUnsteeredAndIsRepeatable) {
  const DenoiserModel m(small(), 22, model::Role::student);
  const auto gm = oracle::GaussianMixture::two_class_2d();
  SweepOptions opts;
  opts.alphas = {0.0};
  opts.samples = 256;
  opts.seed = 23;
  const Prompt pos = Prompt::of({1}), neg = Prompt::of({2});
  const std::vector<SweepRow> rows = nasa_sweep(m, cosine(), gm, pos, neg, opts);
  ASSERT_EQ(rows.size(), 1u);
  const Array plain = model::student_generate(m, diffusion::sampler_noise(256, 2, 23), pos, cosine());
  EXPECT_TRUE(rows[0].samples.bit_equal(plain));
  EXPECT_EQ(rows[0].removal_rate, metrics::removal_rate(gm, plain, 0));

  opts.alphas = {0.0, 0.5, 1.0};
  const std::vector<SweepRow> again = nasa_sweep(m, cosine(), gm, pos, neg, opts);
  EXPECT_TRUE(again[0].samples.bit_equal(rows[0].samples));
  EXPECT_EQ(again[0].removal_rate, rows[0].removal_rate);
  EXPECT_THROW(nasa_sweep(m, cosine(), gm, pos, neg, {.alphas = {}}), ConfigError);
}

TEST(Sweep, ComparisonStubsRun) {
  const DenoiserModel m(small(), 24, model::Role::student);
  const auto gm = oracle::GaussianMixture::two_class_2d();
  for (SweepMethod method : {SweepMethod::output_cfg, SweepMethod::embedding}) {
    SweepOptions opts;
    opts.alphas = {0.0, 0.5};
    opts.samples = 64;
    opts.method = method;
    const auto rows = nasa_sweep(m, cosine(), gm, Prompt::of({1}), Prompt::of({2}), opts);
    ASSERT_EQ(rows.size(), 2u);
    const Array plain = model::student_generate(m, diffusion::sampler_noise(64, 2, 0), Prompt::of({1}), cosine());
    EXPECT_LT(ad::max_abs_diff(rows[0].samples, plain), 1e-12);
    for (const SweepRow& r : rows) {
      EXPECT_GE(r.removal_rate, 0.0);
      EXPECT_LE(r.removal_rate, 1.0);
    }
  }
}

}  // namespace
}  // namespace snoopi::nasa
