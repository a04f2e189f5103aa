// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/oracle/mixture.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "snoopi/error.hpp"
#include "snoopi/rng.hpp"

namespace snoopi::oracle {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

Matrix covariance_matrix(const Component& c, std::size_t dim) {
  Matrix m(dim, dim);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t k = 0; k < dim; ++k) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
                                              c.covariance[r * dim + k];
  return m;
}

Vector mean_vector(const Component& c) {
  return Eigen::Map<const Vector>(c.mean.data(), static_cast<Eigen::Index>(c.mean.size()));
}

double log_sum_exp(std::span<const double> values) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : values) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  double total = 0.0;
  for (double v : values) total += std::exp(v - peak);
  return peak + std::log(total);
}

struct Gaussian {
  Vector mean;
  Eigen::LLT<Matrix> factor;
  double log_norm = 0.0;  // -0.5 log det - D/2 log 2pi
};

Gaussian make_gaussian(const Vector& mean, const Matrix& cov) {
  Gaussian g;
  g.mean = mean;
  g.factor.compute(cov);
  if (g.factor.info() != Eigen::Success) throw ContractViolation("covariance is not positive definite");
  const Matrix& l = g.factor.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  g.log_norm = -0.5 * log_det - 0.5 * static_cast<double>(mean.size()) * std::log(2.0 * std::numbers::pi);
  return g;
}

double log_pdf(const Gaussian& g, const Vector& x) {
  const Vector diff = x - g.mean;
  const Vector solved = g.factor.matrixL().solve(diff);
  return g.log_norm - 0.5 * solved.squaredNorm();
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<Component> components, std::map<int, int> class_tokens)
    : components_(std::move(components)), class_tokens_(std::move(class_tokens)) {
  SNOOPI_REQUIRE(!components_.empty(), "GaussianMixture: no components");
  dim_ = components_[0].mean.size();
  SNOOPI_REQUIRE(dim_ > 0, "GaussianMixture: zero-dimensional mean");
  double total = 0.0;
  for (Component& c : components_) {
    SNOOPI_REQUIRE(c.mean.size() == dim_, "GaussianMixture: mean dimension mismatch");
    SNOOPI_REQUIRE(c.covariance.size() == dim_ * dim_, "GaussianMixture: covariance must be D x D");
    SNOOPI_REQUIRE(c.weight >= 0.0 && std::isfinite(c.weight), "GaussianMixture: weights must be >= 0");
    SNOOPI_REQUIRE(c.label >= 0, "GaussianMixture: labels must be >= 0");
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t k = 0; k < r; ++k)
        SNOOPI_REQUIRE(std::abs(c.covariance[r * dim_ + k] - c.covariance[k * dim_ + r]) <= 1e-12,
                       "GaussianMixture: covariance must be symmetric");
    Matrix cov = covariance_matrix(c, dim_);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
    SNOOPI_REQUIRE(eig.eigenvalues().minCoeff() > -1e-9, "GaussianMixture: covariance has a negative eigenvalue");
    bool floor = eig.eigenvalues().minCoeff() < kCovarianceFloor;
    if (!floor) {
      Eigen::LLT<Matrix> llt(cov);
      floor = llt.info() != Eigen::Success;
    }
    if (floor)
      for (std::size_t r = 0; r < dim_; ++r) c.covariance[r * dim_ + r] += kCovarianceFloor;
    floored_.push_back(floor);
    total += c.weight;
    class_count_ = std::max(class_count_, c.label + 1);
  }
  SNOOPI_REQUIRE(std::abs(total - 1.0) <= 1e-12, "GaussianMixture: weights must sum to 1");
  for (const auto& [token, label] : class_tokens_)
    SNOOPI_REQUIRE(label >= 0 && label < class_count_, "GaussianMixture: token maps to unknown class");
}

GaussianMixture GaussianMixture::two_class_2d() {
  std::vector<Component> comps;
  const std::vector<double> cov = {0.25, 0.0, 0.0, 0.25};
  for (double x : {-2.0, 2.0})
    for (double y : {2.0, -2.0}) comps.push_back(Component{0.25, {x, y}, cov, x < 0 ? 0 : 1});
  return GaussianMixture(std::move(comps), {{TwoClassTokens::class_a, 0}, {TwoClassTokens::class_b, 1}});
}

double GaussianMixture::class_weight(int label) const {
  double w = 0.0;
  for (const Component& c : components_)
    if (c.label == label) w += c.weight;
  return w;
}

std::optional<int> GaussianMixture::class_for_token(int token) const {
  const auto it = class_tokens_.find(token);
  if (it == class_tokens_.end()) return std::nullopt;
  return it->second;
}

std::set<int> GaussianMixture::classes_for_prompt(const model::Prompt& prompt) const {
  std::set<int> out;
  for (int token : prompt.tokens)
    if (auto c = class_for_token(token)) out.insert(*c);
  return out;
}

LabeledPoints GaussianMixture::sample(std::size_t n, std::uint64_t seed) const { return sample_classes({}, n, seed); }

LabeledPoints GaussianMixture::sample_classes(const std::set<int>& classes, std::size_t n, std::uint64_t seed) const {
  SNOOPI_REQUIRE(n >= 1, "sample_mixture: n must be >= 1");
  std::vector<double> weights;
  for (const Component& c : components_)
    weights.push_back(classes.empty() || classes.contains(c.label) ? c.weight : 0.0);
  double total = 0.0;
  for (double w : weights) total += w;
  SNOOPI_REQUIRE(total > 0.0, "sample_mixture: selected classes have zero weight");
  std::vector<Matrix> factors;
  for (const Component& c : components_) {
    Eigen::LLT<Matrix> llt(covariance_matrix(c, dim_));
    factors.push_back(llt.matrixL());
  }
  LabeledPoints out{ad::Array({n, dim_}), std::vector<int>(n)};
  Vector z(static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, i));
    const double u = rng.uniform() * total;
    std::size_t pick = 0;
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (weights[k] == 0.0) continue;
      pick = k;
      acc += weights[k];
      if (u < acc) break;
    }
    for (Eigen::Index d = 0; d < z.size(); ++d) z(d) = rng.normal();
    const Vector x = mean_vector(components_[pick]) + factors[pick] * z;
    for (std::size_t d = 0; d < dim_; ++d) out.points(i, d) = x(static_cast<Eigen::Index>(d));
    out.labels[i] = components_[pick].label;
  }
  return out;
}

double GaussianMixture::log_marginal(std::span<const double> x, int t, const diffusion::NoiseSchedule& schedule,
                                     const std::set<int>& classes) const {
  SNOOPI_REQUIRE(x.size() == dim_, "log_marginal: dimension mismatch");
  const double a = schedule.alpha(t);
  const double s = schedule.sigma(t);
  const Vector xv = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(dim_));
  std::vector<double> terms;
  double total = 0.0;
  for (const Component& c : components_) {
    if (!classes.empty() && !classes.contains(c.label)) continue;
    total += c.weight;
  }
  for (const Component& c : components_) {
    if (!classes.empty() && !classes.contains(c.label)) continue;
    if (c.weight == 0.0) continue;
    const Matrix cov = a * a * covariance_matrix(c, dim_) + s * s * Matrix::Identity(dim_, dim_);
    const Gaussian g = make_gaussian(a * mean_vector(c), cov);
    terms.push_back(std::log(c.weight / total) + log_pdf(g, xv));
  }
  return log_sum_exp(terms);
}

ad::Array GaussianMixture::analytic_eps(const ad::Array& x_t, int t, const diffusion::NoiseSchedule& schedule,
                                        const std::set<int>& classes) const {
  SNOOPI_REQUIRE(x_t.cols() == dim_, "analytic_eps: expected " + std::to_string(dim_) + " columns");
  const double a = schedule.alpha(t);
  const double s = schedule.sigma(t);
  ad::Array out(x_t.shape());
  if (s == 0.0) return out;
  std::vector<Gaussian> gaussians;
  std::vector<double> log_weights;
  double total = 0.0;
  for (const Component& c : components_)
    if ((classes.empty() || classes.contains(c.label))) total += c.weight;
  SNOOPI_REQUIRE(total > 0.0, "analytic_eps: selected classes have zero weight");
  for (const Component& c : components_) {
    if (!classes.empty() && !classes.contains(c.label)) continue;
    if (c.weight == 0.0) continue;
    const Matrix cov = a * a * covariance_matrix(c, dim_) + s * s * Matrix::Identity(dim_, dim_);
    gaussians.push_back(make_gaussian(a * mean_vector(c), cov));
    log_weights.push_back(std::log(c.weight / total));
  }
  std::vector<double> logp(gaussians.size());
  for (std::size_t r = 0; r < x_t.rows(); ++r) {
    const Vector xv = Eigen::Map<const Vector>(x_t.data().data() + r * dim_, static_cast<Eigen::Index>(dim_));
    for (std::size_t k = 0; k < gaussians.size(); ++k) logp[k] = log_weights[k] + log_pdf(gaussians[k], xv);
    const double norm = log_sum_exp(logp);
    Vector eps = Vector::Zero(static_cast<Eigen::Index>(dim_));
    for (std::size_t k = 0; k < gaussians.size(); ++k) {
      const double w = std::exp(logp[k] - norm);
      if (w == 0.0) continue;
      eps += w * gaussians[k].factor.solve(xv - gaussians[k].mean);
    }
    eps *= s;
    for (std::size_t d = 0; d < dim_; ++d) out(r, d) = eps(static_cast<Eigen::Index>(d));
  }
  return out;
}

std::vector<double> GaussianMixture::class_log_density(std::span<const double> x) const {
  SNOOPI_REQUIRE(x.size() == dim_, "bayes_classify: dimension mismatch");
  const Vector xv = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(dim_));
  std::vector<std::vector<double>> per_class(static_cast<std::size_t>(class_count_));
  for (const Component& c : components_) {
    if (c.weight == 0.0) continue;
    const Gaussian g = make_gaussian(mean_vector(c), covariance_matrix(c, dim_));
    per_class[static_cast<std::size_t>(c.label)].push_back(std::log(c.weight) + log_pdf(g, xv));
  }
  std::vector<double> out;
  for (const auto& terms : per_class)
    out.push_back(terms.empty() ? -std::numeric_limits<double>::infinity() : log_sum_exp(terms));
  return out;
}

Classification GaussianMixture::bayes_classify(std::span<const double> x) const {
  const std::vector<double> logd = class_log_density(x);
  Classification result;
  result.posterior.assign(logd.size(), 0.0);
  const double norm = log_sum_exp(logd);
  for (std::size_t c = 0; c < logd.size(); ++c) {
    result.posterior[c] = std::isfinite(logd[c]) ? std::exp(logd[c] - norm) : 0.0;
    if (logd[c] > logd[static_cast<std::size_t>(result.label)]) result.label = static_cast<int>(c);
  }
  return result;
}

ad::Array MixtureOracle::predict(const ad::Array& x_t, int t, const model::Prompt& prompt) const {
  return mixture_.analytic_eps(x_t, t, schedule_, mixture_.classes_for_prompt(prompt));
}

}  // namespace snoopi::oracle
