// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "snoopi/ad/gradcheck.hpp"
#include "snoopi/ad/ops.hpp"
#include "snoopi/diffusion/guidance.hpp"
#include "snoopi/error.hpp"
#include "snoopi/model/denoiser.hpp"
#include "snoopi/model/training.hpp"
#include "snoopi/oracle/task.hpp"
#include "snoopi/rng.hpp"

namespace snoopi::model {
namespace {

using ad::Array;

DenoiserConfig small_config() {
  DenoiserConfig c;
  c.vocab = 6;
  c.embed_dim = 4;
  c.width = 6;
  c.key_dim = 3;
  c.blocks = 2;
  c.time_dim = 4;
  c.embed_init = 0.5;
  return c;
}

Array noise(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Array a({rows, cols});
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.normal();
  return a;
}

const diffusion::NoiseSchedule& cosine() {
  static const diffusion::NoiseSchedule s = diffusion::make_schedule(diffusion::ScheduleKind::cosine, 1000);
  return s;
}

TEST(Embedding, RowsAreTableRows) {
  const DenoiserModel m(small_config(), 3);
  const Array& table = m.find_parameter("embed.table")->value();
  const Array null_row = m.embed_prompt(Prompt::null());
  ASSERT_EQ(null_row.rows(), 1u);
  for (std::size_t c = 0; c < table.cols(); ++c) EXPECT_EQ(null_row(0, c), table(0, c));

  const Array dup = m.embed_prompt(Prompt::of({4, 4}));
  const Array fwd = m.embed_prompt(Prompt::of({2, 5}));
  const Array rev = m.embed_prompt(Prompt::of({5, 2}));
  for (std::size_t c = 0; c < table.cols(); ++c) {
    EXPECT_EQ(dup(0, c), dup(1, c));
    EXPECT_EQ(fwd(0, c), rev(1, c));
    EXPECT_EQ(fwd(1, c), rev(0, c));
  }
}

TEST(Embedding, OutOfRangeTokenIsContractViolation) {
  const DenoiserModel m(small_config(), 3);
  EXPECT_THROW(m.embed_prompt(Prompt::of({6})), ContractViolation);
  EXPECT_THROW(m.embed_prompt(Prompt::of({-1})), ContractViolation);
  EXPECT_THROW(m.embed_prompt(Prompt::of({1, 1, 1, 1, 1})), ContractViolation);
  EXPECT_THROW(m.embed_prompt(Prompt{}), ContractViolation);
}

TEST(PredictEps, ZeroHeadPredictsZero) {
  DenoiserModel m(small_config(), 4);
  for (const char* name : {"head.weight", "head.bias"}) {
    Array& v = m.find_parameter(name)->value();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.0;
  }
  EXPECT_EQ(ad::max_abs(m.predict_eps(noise(5, 2, 1), 300, Prompt::of({2, 3}))), 0.0);
}

TEST(PredictEps, TokenOrderDoesNotMatter) {
  const DenoiserModel m(small_config(), 5);
  const Array x = noise(4, 2, 2);
  EXPECT_TRUE(m.predict_eps(x, 400, Prompt::of({1, 2, 5})).bit_equal(m.predict_eps(x, 400, Prompt::of({5, 1, 2}))));
}

TEST(PredictEps, ShapeMismatchIsContractViolation) {
  const DenoiserModel m(small_config(), 5);
  EXPECT_THROW(m.predict_eps(noise(4, 3, 2), 10, Prompt::null()), ContractViolation);
}

TEST(PredictEps, GradcheckOfSquaredError) {
  DenoiserModel m(small_config(), 6);
  const Array x = noise(3, 2, 3);
  const Array eps = noise(3, 2, 4);
  const std::vector<int> t{10, 500, 990};
  const ad::ScalarFunction f = [&](ad::Tape& tape) {
    const ad::Var pred = m.forward(tape, tape.constant(x), t, Prompt::of({2, 3}));
    return ad::squared_norm(ad::sub(pred, tape.constant(eps)));
  };
  const std::vector<ad::Parameter*> params = m.parameter_pointers();
  EXPECT_LT(ad::gradcheck(f, params).max_relative_error, 1e-4);
}

TEST(Attention, RowsOfWeightsSumToOne) {
  ad::Tape tape;
  const ad::Var q = tape.constant(noise(3, 4, 7));
  const ad::Var k = tape.constant(noise(5, 4, 8));
  const ad::Var ones = tape.constant(Array({5, 1}, 1.0));
  const Array out = attention(q, k, ones).value();
  for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(out(r, 0), 1.0, 1e-12);
}

TEST(GuidedPredict, ScaleOneZeroAndNullPrompt) {
  const DenoiserModel m(small_config(), 8);
  const Array x = noise(4, 2, 9);
  const Prompt p = Prompt::of({3});
  const Array cond = m.predict_eps(x, 200, p);
  const Array uncond = m.predict_eps(x, 200, Prompt::null());
  EXPECT_TRUE(diffusion::guided_predict(m, x, 200, p, 1.0).bit_equal(cond));
  EXPECT_TRUE(diffusion::guided_predict(m, x, 200, Prompt::null(), 6.0).bit_equal(uncond));
  EXPECT_LT(ad::max_abs_diff(diffusion::guided_predict(m, x, 200, p, 0.0), uncond), 1e-15);
}

TEST(Lora, ScalingIsGammaOverRank) { EXPECT_EQ((LoraConfig{64, 128.0, 0}.scaling()), 2.0); }

TEST(Lora, AttachIsBitIdenticalAndFreezesBase) {
  DenoiserModel m(small_config(), 10);
  const Array x = noise(4, 2, 11);
  const Prompt p = Prompt::of({2});
  const Array before = m.predict_eps(x, 700, p);
  m.attach_lora({3, 6.0, 1});
  EXPECT_TRUE(m.predict_eps(x, 700, p).bit_equal(before));
  const std::vector<ad::Parameter*> lora = m.lora_parameters();
  EXPECT_FALSE(lora.empty());
  for (ad::Parameter* t : m.trainable_parameters())
    EXPECT_NE(std::find(lora.begin(), lora.end(), t), lora.end()) << t->name();
  EXPECT_THROW(m.attach_lora({3, 6.0, 1}), StateError);
}

TEST(Lora, ZeroDownFactorRestoresBase) {
  DenoiserModel m(small_config(), 12);
  const Array x = noise(4, 2, 13);
  const Prompt p = Prompt::of({3});
  const Array base = m.predict_eps(x, 100, p);
  m.attach_lora({2, 4.0, 2});
  for (ad::Parameter* q : m.lora_parameters()) {
    Array& v = q->value();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.3;
  }
  EXPECT_GT(ad::max_abs_diff(m.predict_eps(x, 100, p), base), 1e-6);
  for (ad::Parameter* q : m.lora_parameters()) {
    if (q->name().find("lora_down") == std::string::npos) continue;
    Array& v = q->value();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.0;
  }
  EXPECT_TRUE(m.predict_eps(x, 100, p).bit_equal(base));
}

TEST(StudentGenerate, ZeroPredictionDividesByAlpha) {
  DenoiserModel m(small_config(), 14, Role::student);
  for (const char* name : {"head.weight", "head.bias"}) {
    Array& v = m.find_parameter(name)->value();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.0;
  }
  const Array z = noise(3, 2, 15);
  const Array x0 = student_generate(m, z, Prompt::of({2}), cosine());
  const double a = cosine().alpha(student_timestep(cosine()));
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_DOUBLE_EQ(x0[i], z[i] / a);
  EXPECT_TRUE(x0.bit_equal(student_generate(m, z, Prompt::of({2}), cosine())));
}

TEST(StudentGenerate, TimestepHasQuarterSignal) {
  const int ts = student_timestep(cosine());
  EXPECT_NEAR(cosine().alpha_bar(ts), 0.25, 2e-3);
  EXPECT_EQ(student_timestep(diffusion::make_schedule(diffusion::ScheduleKind::linear, 100)), 75);
}

TEST(StudentGenerate, ConversionByHand) {
  // eps = 0.6 z at a step with (alpha, sigma) = (0.8, 0.6): x0 = (z - 0.36 z) / 0.8.
  const double a = 0.8, s = 0.6;
  const Array z = Array::matrix(1, 2, {1.0, 0.0});
  Array x0({1, 2});
  for (std::size_t i = 0; i < 2; ++i) x0[i] = (z[i] - s * (s * z[i])) / a;
  EXPECT_NEAR(x0[0], 0.8, 1e-15);
  EXPECT_EQ(x0[1], 0.0);
}

TEST(Training, ZeroStepsAndZeroLearningRateLeaveModel) {
  const auto gm = oracle::GaussianMixture::two_class_2d();
  const auto source = oracle::make_training_source(gm);
  DenoiserModel m(small_config(), 16);
  const DenoiserModel copy = m;
  EXPECT_TRUE(train_teacher(m, source, cosine(), {.steps = 0}).empty());
  const std::vector<double> trace = train_teacher(m, source, cosine(), {.steps = 5, .learning_rate = 0.0});
  EXPECT_EQ(trace.size(), 5u);
  for (std::size_t i = 0; i < m.parameters().size(); ++i)
    EXPECT_TRUE(m.parameters()[i].value().bit_equal(copy.parameters()[i].value()));
}

TEST(Training, DeterministicGivenSeed) {
  const auto gm = oracle::GaussianMixture::two_class_2d();
  const auto source = oracle::make_training_source(gm);
  DenoiserModel a(small_config(), 17), b(small_config(), 17);
  const TeacherTrainConfig cfg{.steps = 20, .batch = 8, .seed = 4};
  EXPECT_EQ(train_teacher(a, source, cosine(), cfg), train_teacher(b, source, cosine(), cfg));
}

TEST(Training, NonFiniteLossIsOverflow) {
  const auto gm = oracle::GaussianMixture::two_class_2d();
  DenoiserModel m(small_config(), 18);
  const DataSource bad = [](std::size_t batch, Rng&) {
    TrainingBatch b{Array({batch, 2}, 1e200), std::vector<Prompt>(batch, Prompt::null())};
    return b;
  };
  EXPECT_THROW(train_teacher(m, bad, cosine(), {.steps = 3, .batch = 4}), OverflowError);
}

}  // namespace
}  // namespace snoopi::model
