// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "snoopi/ad/gradcheck.hpp"
#include "snoopi/ad/ops.hpp"
#include "snoopi/ad/optimizer.hpp"
#include "snoopi/ad/tape.hpp"
#include "snoopi/error.hpp"
#include "snoopi/rng.hpp"

namespace snoopi::ad {
namespace {

Array random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Array a({r, c});
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.normal();
  return a;
}

TEST(Ops, SoftmaxOfEqualLogitsIsUniform) {
  Tape tape;
  const Var s = row_softmax(tape.constant(Array::matrix(1, 2, {0.0, 0.0})));
  EXPECT_EQ(s.value()(0, 0), 0.5);
  EXPECT_EQ(s.value()(0, 1), 0.5);
}

TEST(Ops, MatmulWithIdentityLeavesOperand) {
  Tape tape;
  const Array a = random_matrix(3, 2, 1);
  const Var out = matmul(tape.constant(a), tape.constant(Array::matrix(2, 2, {1, 0, 0, 1})));
  EXPECT_TRUE(out.value().bit_equal(a));
}

TEST(Ops, SquaredNormByHand) {
  Tape tape;
  EXPECT_EQ(squared_norm(tape.constant(Array::matrix(1, 2, {3.0, 4.0}))).value().item(), 25.0);
}

TEST(Ops, ShapeMismatchIsContractViolation) {
  Tape tape;
  const Var a = tape.constant(Array({2, 3}));
  const Var b = tape.constant(Array({2, 2}));
  EXPECT_THROW(add(a, b), ContractViolation);
  EXPECT_THROW(matmul(a, a), ContractViolation);
}

TEST(Ops, NonFiniteOutputIsOverflow) {
  Tape tape;
  const Var a = tape.constant(Array::matrix(1, 1, {1e200}));
  EXPECT_THROW(mul(a, a), OverflowError);
}

TEST(Backward, SquareAtThreeHasGradientSix) {
  Parameter x("x", Array::scalar(3.0));
  Tape tape;
  const Var v = tape.param(x);
  tape.backward(mul(v, v));
  EXPECT_EQ(x.gradient().item(), 6.0);
}

TEST(Backward, UnusedParameterGetsZero) {
  Parameter x("x", Array::scalar(2.0));
  Parameter p("p", Array::matrix(1, 2, {1.0, 1.0}));
  Tape tape;
  const Var v = tape.param(x);
  tape.param(p);
  tape.backward(mul(v, v));
  EXPECT_EQ(max_abs(p.gradient()), 0.0);
}

TEST(Backward, SumOfSoftmaxHasZeroGradient) {
  Parameter v("v", Array::matrix(1, 4, {0.3, -1.2, 2.0, 0.5}));
  Tape tape;
  tape.backward(sum(row_softmax(tape.param(v))));
  EXPECT_LT(max_abs(v.gradient()), 1e-15);
}

TEST(Backward, WithoutForwardTapeIsStateError) {
  Tape tape;
  EXPECT_THROW(tape.backward(Var()), StateError);
  Tape other;
  const Var loss = sum(other.constant(Array::scalar(1.0)));
  EXPECT_THROW(tape.backward(loss), StateError);
}

TEST(Backward, SecondBackwardIsStateError) {
  Parameter x("x", Array::scalar(1.0));
  Tape tape;
  const Var loss = sum(tape.param(x));
  tape.backward(loss);
  EXPECT_THROW(tape.backward(loss), StateError);
}

TEST(Backward, InferenceTapeRejectsBackward) {
  Tape tape(TapeMode::inference);
  const Var loss = sum(tape.constant(Array::scalar(1.0)));
  EXPECT_THROW(tape.backward(loss), StateError);
}

TEST(Backward, GradientsAccumulateUntilZeroed) {
  Parameter x("x", Array::scalar(1.5));
  auto run = [&] {
    Tape tape;
    const Var v = tape.param(x);
    tape.backward(mul(v, v));
  };
  run();
  const Array once = x.gradient();
  run();
  EXPECT_EQ(x.gradient().item(), 2.0 * once.item());
  x.zero_gradient();
  run();
  EXPECT_TRUE(x.gradient().bit_equal(once));
}

TEST(Backward, ChainRuleForPolynomials) {
  // g(f(x)) with f = x^2 + 1, g = u^3: d/dx = 3 (x^2 + 1)^2 2x.
  Parameter x("x", Array::scalar(0.7));
  Tape tape;
  const Var v = tape.param(x);
  const Var f = add(mul(v, v), tape.constant(Array::scalar(1.0)));
  tape.backward(mul(mul(f, f), f));
  const double xv = 0.7, fv = xv * xv + 1.0;
  EXPECT_NEAR(x.gradient().item(), 3.0 * fv * fv * 2.0 * xv, 1e-10);
}

TEST(Backward, IdenticalRunsAreBitIdentical) {
  auto run = [] {
    Parameter w("w", random_matrix(3, 4, 9));
    Tape tape;
    const Var x = tape.constant(random_matrix(5, 3, 10));
    tape.backward(mean(silu(matmul(x, tape.param(w)))));
    return w.gradient();
  };
  EXPECT_TRUE(run().bit_equal(run()));
}

TEST(Gradcheck, QuadraticFormIsExact) {
  Parameter x("x", random_matrix(1, 3, 3));
  const Array a = random_matrix(3, 3, 4);
  const ScalarFunction f = [&](Tape& tape) {
    const Var v = tape.param(x);
    return sum(mul(matmul(v, tape.constant(a)), v));
  };
  std::vector<Parameter*> params{&x};
  EXPECT_LT(gradcheck(f, params).max_relative_error, 1e-8);
}

TEST(Gradcheck, ConstantFunctionHasZeroError) {
  Parameter x("x", random_matrix(2, 2, 5));
  const ScalarFunction f = [&](Tape& tape) {
    tape.param(x);
    return sum(tape.constant(Array::scalar(4.0)));
  };
  std::vector<Parameter*> params{&x};
  EXPECT_EQ(gradcheck(f, params).max_relative_error, 0.0);
}

struct PrimitiveCase {
  const char* name;
  std::function<Var(Tape&, Var, Var)> op;
};

TEST(Gradcheck, EveryPrimitiveBelowTolerance) {
  const std::vector<double> frequencies = sinusoid_frequencies(4);
  const std::vector<PrimitiveCase> cases = {
      {"matmul", [](Tape&, Var a, Var b) { return matmul(a, transpose(b)); }},
      {"add", [](Tape&, Var a, Var b) { return add(a, b); }},
      {"sub", [](Tape&, Var a, Var b) { return sub(a, b); }},
      {"mul", [](Tape&, Var a, Var b) { return mul(a, b); }},
      {"scale", [](Tape&, Var a, Var) { return scale(a, -1.7); }},
      {"broadcast", [](Tape&, Var a, Var) { return broadcast_rows(gather_rows(a, std::vector<std::size_t>{1}), 4); }},
      {"softmax", [](Tape&, Var a, Var) { return row_softmax(a); }},
      {"dot", [](Tape&, Var a, Var b) { return dot(a, b); }},
      {"mean", [](Tape&, Var a, Var) { return mean(a); }},
      {"squared_norm", [](Tape&, Var a, Var) { return squared_norm(a); }},
      {"concat_cols", [](Tape&, Var a, Var b) { return concat_cols(std::vector<Var>{a, b}); }},
      {"concat_rows", [](Tape&, Var a, Var b) { return concat_rows(std::vector<Var>{a, b}); }},
      {"gather", [](Tape&, Var a, Var) { return gather_rows(a, std::vector<std::size_t>{2, 0, 2}); }},
      {"silu", [](Tape&, Var a, Var) { return silu(a); }},
      {"sinusoid", [frequencies](Tape&, Var a, Var) { return sinusoid(slice_cols(a, 0, 1), frequencies); }},
  };
  Parameter a("a", random_matrix(3, 2, 11));
  Parameter b("b", random_matrix(3, 2, 12));
  const Array weights = random_matrix(8, 8, 13);
  std::vector<Parameter*> params{&a, &b};
  for (const PrimitiveCase& c : cases) {
    const ScalarFunction f = [&](Tape& tape) {
      const Var out = c.op(tape, tape.param(a), tape.param(b));
      // A fixed random weighting so every output coordinate matters.
      Array w({out.rows(), out.cols()});
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = weights[i % weights.size()];
      return sum(mul(out, tape.constant(w)));
    };
    EXPECT_LT(gradcheck(f, params).max_relative_error, 1e-5) << c.name;
  }
}

TEST(AdamW, ZeroLearningRateLeavesParameters) {
  Parameter x("x", random_matrix(2, 2, 14));
  const Array before = x.value();
  AdamW opt({&x}, {.learning_rate = 0.0});
  Tape tape;
  tape.backward(squared_norm(tape.param(x)));
  opt.step();
  EXPECT_TRUE(x.value().bit_equal(before));
}

TEST(AdamW, MinimisesQuadratic) {
  Parameter x("x", Array::matrix(1, 2, {3.0, -2.0}));
  AdamW opt({&x}, {.learning_rate = 0.05});
  for (int i = 0; i < 500; ++i) {
    opt.zero_gradients();
    Tape tape;
    tape.backward(squared_norm(tape.param(x)));
    opt.step();
  }
  EXPECT_LT(max_abs(x.value()), 0.05);
}

TEST(AdamW, FrozenParametersAreNotUpdated) {
  Parameter x("x", Array::scalar(1.0));
  Parameter frozen("f", Array::scalar(1.0), false);
  AdamW opt({&x, &frozen}, {.learning_rate = 0.1});
  Tape tape;
  tape.backward(add(mul(tape.param(x), tape.param(frozen)), tape.constant(Array::scalar(0.0))));
  opt.step();
  EXPECT_NE(x.value().item(), 1.0);
  EXPECT_EQ(frozen.value().item(), 1.0);
}

}  // namespace
}  // namespace snoopi::ad
