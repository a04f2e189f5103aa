// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "snoopi/error.hpp"
#include "snoopi/metrics/metrics.hpp"
#include "snoopi/oracle/mixture.hpp"
#include "snoopi/rng.hpp"

namespace snoopi::metrics {
namespace {

using ad::Array;

Array gaussian(std::size_t n, double mx, double my, double scale, std::uint64_t seed) {
  Rng rng(seed);
  Array a({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    a(i, 0) = mx + scale * rng.normal();
    a(i, 1) = my + scale * rng.normal();
  }
  return a;
}

Array transform(const Array& a, double angle, double dx, double dy) {
  Array out(a.shape());
  const double c = std::cos(angle), s = std::sin(angle);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    out(i, 0) = c * a(i, 0) - s * a(i, 1) + dx;
    out(i, 1) = s * a(i, 0) + c * a(i, 1) + dy;
  }
  return out;
}

TEST(Frechet, IdenticalSetsAreZero) {
  const Array a = gaussian(500, 1, -2, 0.7, 1);
  EXPECT_LT(frechet_distance(a, a).distance, 1e-10);
}

TEST(Frechet, ExactMomentExamples) {
  const Array zero = Array::matrix(1, 2, {0, 0});
  const Array shift = Array::matrix(1, 2, {1, 0});
  const Array eye = Array::matrix(2, 2, {1, 0, 0, 1});
  const Array four = Array::matrix(2, 2, {4, 0, 0, 4});
  EXPECT_NEAR(frechet_from_moments(zero, eye, shift, eye).distance, 1.0, 1e-12);
  EXPECT_NEAR(frechet_from_moments(zero, eye, zero, four).distance, 2.0, 1e-12);
}

TEST(Frechet, NonDiagonalMatchesGeneralSquareRoot) {
  // Tr((S1 S2)^(1/2)) for S1 = diag(1, 4), S2 = [[2, 1], [1, 2]]: eigenvalues of S1 S2 are 5 +- sqrt(13).
  const Array zero = Array::matrix(1, 2, {0, 0});
  const Array s1 = Array::matrix(2, 2, {1, 0, 0, 4});
  const Array s2 = Array::matrix(2, 2, {2, 1, 1, 2});
  const double expected = 5.0 + 4.0 - 2.0 * (std::sqrt(5.0 + std::sqrt(13.0)) + std::sqrt(5.0 - std::sqrt(13.0)));
  EXPECT_NEAR(frechet_from_moments(zero, s1, zero, s2).distance, expected, 1e-12);
}

TEST(Frechet, SymmetricAndRegularisesDegenerateSets) {
  const Array a = gaussian(300, 0, 0, 1, 2), b = gaussian(400, 0.5, 0.2, 1.3, 3);
  EXPECT_NEAR(frechet_distance(a, b).distance, frechet_distance(b, a).distance, 1e-10);
  Array line({10, 2});
  for (std::size_t i = 0; i < 10; ++i) line(i, 0) = line(i, 1) = static_cast<double>(i);
  const FrechetResult r = frechet_distance(line, a);
  EXPECT_TRUE(r.regularized);
  EXPECT_TRUE(std::isfinite(r.distance));
  EXPECT_FALSE(frechet_distance(a, b).regularized);
}

TEST(Frechet, TooFewPointsIsContractViolation) {
  EXPECT_THROW(frechet_distance(Array({2, 2}), gaussian(10, 0, 0, 1, 4)), ContractViolation);
}

TEST(PrecisionRecall, IdenticalSetsAreFull) {
  const Array a = gaussian(400, 0, 0, 1, 5);
  const PrecisionRecall pr = precision_recall(a, a, 3);
  EXPECT_EQ(pr.precision, 1.0);
  EXPECT_EQ(pr.recall, 1.0);
}

TEST(PrecisionRecall, SeparatedClustersAreEmpty) {
  const PrecisionRecall pr = precision_recall(gaussian(200, 0, 0, 0.1, 6), gaussian(200, 100, 0, 0.1, 7), 3);
  EXPECT_EQ(pr.precision, 0.0);
  EXPECT_EQ(pr.recall, 0.0);
}

TEST(PrecisionRecall, SubsetOfDenseSetHasFullPrecision) {
  const Array real = gaussian(1000, 0, 0, 1, 8);
  Array subset({100, 2});
  for (std::size_t i = 0; i < 100; ++i)
    for (std::size_t c = 0; c < 2; ++c) subset(i, c) = real(i * 7, c);
  EXPECT_EQ(precision_recall(real, subset, 3).precision, 1.0);
}

TEST(PrecisionRecall, InvariantUnderRigidMotion) {
  const Array a = gaussian(300, 0, 0, 1, 9), b = gaussian(300, 0.4, 0, 1.2, 10);
  const PrecisionRecall base = precision_recall(a, b, 3);
  const PrecisionRecall moved = precision_recall(transform(a, 0.5, 3, -2), transform(b, 0.5, 3, -2), 3);
  EXPECT_NEAR(moved.precision, base.precision, 1.0 / 300);
  EXPECT_NEAR(moved.recall, base.recall, 1.0 / 300);
}

TEST(PrecisionRecall, InvalidArguments) {
  const Array a = gaussian(10, 0, 0, 1, 11);
  EXPECT_THROW(precision_recall(a, a, 0), ContractViolation);
  EXPECT_THROW(precision_recall(a, gaussian(3, 0, 0, 1, 12), 3), ContractViolation);
}

TEST(Alignment, Examples) {
  const oracle::GaussianMixture gm = oracle::GaussianMixture::two_class_2d();
  Array at_means({2, 2});
  at_means(0, 0) = -2, at_means(0, 1) = 2, at_means(1, 0) = -2, at_means(1, 1) = -2;
  EXPECT_GE(alignment(gm, at_means, 0), 0.999);
  EXPECT_NEAR(alignment(gm, gm.sample(10000, 13).points, 0), 0.5, 0.02);
  const oracle::GaussianMixture empty({{1.0, {0, 0}, {1, 0, 0, 1}, 0}, {0.0, {3, 3}, {1, 0, 0, 1}, 1}});
  EXPECT_EQ(alignment(empty, gaussian(50, 0, 0, 1, 14), 1), 0.0);
  EXPECT_THROW(alignment(gm, at_means, 2), ContractViolation);
}

TEST(RemovalRate, CountingExamples) {
  const oracle::GaussianMixture gm = oracle::GaussianMixture::two_class_2d();
  const Array a = gaussian(20, -2, 2, 0.1, 15), b = gaussian(20, 2, 2, 0.1, 16);
  EXPECT_EQ(removal_rate(gm, a, 0), 0.0);
  EXPECT_EQ(removal_rate(gm, b, 0), 1.0);
  Array half({40, 2});
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t c = 0; c < 2; ++c) half(i, c) = a(i, c), half(i + 20, c) = b(i, c);
  EXPECT_EQ(removal_rate(gm, half, 0), 0.5);
}

TEST(RemovalRate, ComplementsNegativeFraction) {
  const oracle::GaussianMixture gm = oracle::GaussianMixture::two_class_2d();
  const Array x = gaussian(777, 0.3, 0, 2.0, 17);
  std::size_t negative = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) negative += gm.bayes_classify(x.row(i).data()).label == 1;
  EXPECT_EQ(removal_rate(gm, x, 1) + static_cast<double>(negative) / 777.0, 1.0);
}

TEST(EvalReport, CsvLayout) {
  EvalReport r;
  r.fd = 0.5;
  r.precision = 1;
  r.removal_rate = 0.25;
  r.n_real = 3;
  r.n_fake = 4;
  r.seed = 9;
  EXPECT_EQ(EvalReport::csv_header(), "fd,precision,recall,alignment,removal_rate,n_real,n_fake,seed,fd_regularized");
  EXPECT_EQ(r.csv_row(), "0.5,1,0,0,0.25,3,4,9,0");
}

}  // namespace
}  // namespace snoopi::metrics
