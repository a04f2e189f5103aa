// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/metrics/metrics.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <vector>

#include "snoopi/error.hpp"
#include "snoopi/parallel.hpp"
#include "snoopi/io/format.hpp"

namespace snoopi::metrics {

namespace {

using Matrix = Eigen::MatrixXd;

constexpr double kRegularizer = 1e-9;

struct Moments {
  Eigen::VectorXd mean;
  Matrix cov;
};

Moments fit(const ad::Array& points) {
  const auto n = static_cast<Eigen::Index>(points.rows());
  const auto d = static_cast<Eigen::Index>(points.cols());
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(points.data().data(), n,
                                                                                              d);
  Moments m;
  m.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - m.mean.transpose();
  m.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  m.cov = 0.5 * (m.cov + m.cov.transpose());
  return m;
}

bool singular(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() <= kRegularizer;
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

/// Tr((S1 S2)^(1/2)).
double trace_sqrt_product(const Matrix& s1, const Matrix& s2) {
  if (s1.rows() == 2) {
    // Eigenvalues of S1 S2 are real and non-negative; sqrt(l1) + sqrt(l2)
    // = sqrt(tr + 2 sqrt(det)).
    const Matrix p = s1 * s2;
    const double det = std::max(0.0, p.determinant());
    return std::sqrt(std::max(0.0, p.trace() + 2.0 * std::sqrt(det)));
  }
  const Matrix r = psd_sqrt(s1);
  return psd_sqrt(r * s2 * r).trace();
}

FrechetResult frechet(Moments a, Moments b) {
  FrechetResult result;
  const auto d = a.cov.rows();
  if (singular(a.cov)) {
    a.cov += kRegularizer * Matrix::Identity(d, d);
    result.regularized = true;
  }
  if (singular(b.cov)) {
    b.cov += kRegularizer * Matrix::Identity(d, d);
    result.regularized = true;
  }
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double trace_term =
      a.cov == b.cov ? 0.0 : a.cov.trace() + b.cov.trace() - 2.0 * trace_sqrt_product(a.cov, b.cov);
  result.distance = std::max(0.0, mean_term + trace_term);
  return result;
}

Moments to_moments(const ad::Array& mean, const ad::Array& cov) {
  const std::size_t d = mean.size();
  SNOOPI_REQUIRE(cov.rows() == d && cov.cols() == d, "frechet_from_moments: covariance must be D x D");
  Moments m{Eigen::VectorXd(static_cast<Eigen::Index>(d)), Matrix(d, d)};
  for (std::size_t i = 0; i < d; ++i) {
    m.mean(static_cast<Eigen::Index>(i)) = mean[i];
    for (std::size_t j = 0; j < d; ++j)
      m.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cov(i, j);
  }
  return m;
}

double squared_distance(const ad::Array& a, std::size_t i, const ad::Array& b, std::size_t j) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    const double diff = a(i, c) - b(j, c);
    s += diff * diff;
  }
  return s;
}

template <typename F>
void parallel_for(std::size_t n, F&& body) {
  snoopi::parallel_for(n, static_cast<std::size_t>(kernel_threads()), std::forward<F>(body));
}

/// Squared distance from each point to its k-th nearest other point.
std::vector<double> kth_radii(const ad::Array& set, int k) {
  const std::size_t n = set.rows();
  std::vector<double> radii(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> d;
    d.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) d.push_back(squared_distance(set, i, set, j));
    std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
    radii[i] = d[static_cast<std::size_t>(k - 1)];
  });
  return radii;
}

double coverage(const ad::Array& manifold, const std::vector<double>& radii, const ad::Array& queries) {
  const std::size_t n = queries.rows();
  std::vector<char> inside(n, 0);
  parallel_for(n, [&](std::size_t q) {
    for (std::size_t j = 0; j < manifold.rows(); ++j)
      if (squared_distance(queries, q, manifold, j) <= radii[j]) {
        inside[q] = 1;
        break;
      }
  });
  std::size_t count = 0;
  for (char c : inside) count += static_cast<std::size_t>(c);
  return static_cast<double>(count) / static_cast<double>(n);
}

}  // namespace

int kernel_threads() {
  const char* env = std::getenv("SNOOPI_LAB_THREADS");
  if (!env || !*env) return 1;
  const int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

FrechetResult frechet_distance(const ad::Array& real, const ad::Array& fake) {
  SNOOPI_REQUIRE(real.cols() == fake.cols(), "frechet_distance: dimension mismatch");
  const std::size_t need = real.cols() + 1;
  SNOOPI_REQUIRE(real.rows() >= need && fake.rows() >= need, "frechet_distance: each set needs at least D+1 points");
  return frechet(fit(real), fit(fake));
}

FrechetResult frechet_from_moments(const ad::Array& mean1, const ad::Array& cov1, const ad::Array& mean2,
                                   const ad::Array& cov2) {
  SNOOPI_REQUIRE(mean1.size() == mean2.size(), "frechet_from_moments: dimension mismatch");
  return frechet(to_moments(mean1, cov1), to_moments(mean2, cov2));
}

PrecisionRecall precision_recall(const ad::Array& real, const ad::Array& fake, int k) {
  SNOOPI_REQUIRE(k >= 1, "precision_recall: k must be >= 1");
  SNOOPI_REQUIRE(real.cols() == fake.cols(), "precision_recall: dimension mismatch");
  const auto need = static_cast<std::size_t>(k) + 1;
  SNOOPI_REQUIRE(real.rows() >= need && fake.rows() >= need, "precision_recall: each set needs at least k+1 points");
  const std::vector<double> real_radii = kth_radii(real, k);
  const std::vector<double> fake_radii = kth_radii(fake, k);
  return {coverage(real, real_radii, fake), coverage(fake, fake_radii, real)};
}

double alignment(const oracle::GaussianMixture& mixture, const ad::Array& samples, int prompted_class) {
  SNOOPI_REQUIRE(prompted_class >= 0 && prompted_class < mixture.class_count(), "alignment: unknown class");
  SNOOPI_REQUIRE(samples.rows() >= 1, "alignment: no samples");
  double total = 0.0;
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    const ad::Array row = samples.row(i);
    total += mixture.bayes_classify(row.data()).posterior[static_cast<std::size_t>(prompted_class)];
  }
  return total / static_cast<double>(samples.rows());
}

double removal_rate(const oracle::GaussianMixture& mixture, const ad::Array& samples, int negative_class) {
  SNOOPI_REQUIRE(negative_class >= 0 && negative_class < mixture.class_count(), "removal_rate: unknown class");
  SNOOPI_REQUIRE(samples.rows() >= 1, "removal_rate: no samples");
  std::size_t kept = 0;
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    const ad::Array row = samples.row(i);
    if (mixture.bayes_classify(row.data()).label != negative_class) ++kept;
  }
  return static_cast<double>(kept) / static_cast<double>(samples.rows());
}

std::string EvalReport::csv_header() {
  return "fd,precision,recall,alignment,removal_rate,n_real,n_fake,seed,fd_regularized";
}

std::string EvalReport::csv_row() const {
  return io::format_double(fd) + "," + io::format_double(precision) + "," + io::format_double(recall) + "," +
         io::format_double(alignment) + "," + (removal_rate ? io::format_double(*removal_rate) : std::string()) +
         "," + std::to_string(n_real) + "," + std::to_string(n_fake) + "," + std::to_string(seed) + "," +
         (fd_regularized ? "1" : "0");
}

}  // namespace snoopi::metrics
