// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "snoopi/ad/array.hpp"
#include "snoopi/oracle/mixture.hpp"

namespace snoopi::metrics {

struct FrechetResult {
  double distance = 0.0;
  /// True when a covariance was singular and had 1e-9 I added.
  bool regularized = false;
};

/// ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2)) over fitted sample moments
/// (unbiased covariance). Rows are points.
FrechetResult frechet_distance(const ad::Array& real, const ad::Array& fake);

/// Same formula from explicit moments; `mean` is 1 x D, `cov` D x D.
FrechetResult frechet_from_moments(const ad::Array& mean1, const ad::Array& cov1, const ad::Array& mean2,
                                   const ad::Array& cov2);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// k-NN manifold estimate: a point is on a set's manifold when it lies within
/// some member's distance to that member's k-th nearest neighbour.
PrecisionRecall precision_recall(const ad::Array& real, const ad::Array& fake, int k = 3);

/// Mean Bayes posterior mass on `prompted_class`.
double alignment(const oracle::GaussianMixture& mixture, const ad::Array& samples, int prompted_class);

/// Fraction of samples whose Bayes label differs from `negative_class`.
double removal_rate(const oracle::GaussianMixture& mixture, const ad::Array& samples, int negative_class);

struct EvalReport {
  double fd = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double alignment = 0.0;
  std::optional<double> removal_rate;
  std::size_t n_real = 0;
  std::size_t n_fake = 0;
  std::uint64_t seed = 0;
  bool fd_regularized = false;

  static std::string csv_header();
  std::string csv_row() const;
};

/// Worker threads used by the k-NN kernels (SNOOPI_LAB_THREADS, default 1).
int kernel_threads();

}  // namespace snoopi::metrics
