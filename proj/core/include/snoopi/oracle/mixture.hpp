// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "snoopi/ad/array.hpp"
#include "snoopi/diffusion/predictor.hpp"
#include "snoopi/diffusion/schedule.hpp"

namespace snoopi::oracle {

struct Component {
  double weight = 1.0;
  std::vector<double> mean;
  /// Row-major D x D, symmetric positive (semi-)definite.
  std::vector<double> covariance;
  int label = 0;
};

struct LabeledPoints {
  ad::Array points;  // n x D
  std::vector<int> labels;
};

struct Classification {
  int label = 0;
  std::vector<double> posterior;  // one entry per class, sums to 1
};

/// Covariance jitter added when a supplied covariance is numerically singular.
inline constexpr double kCovarianceFloor = 1e-9;

/// Ground-truth data distribution with closed-form diffused marginals.
class GaussianMixture {
 public:
  GaussianMixture(std::vector<Component> components, std::map<int, int> class_tokens = {});

  /// Four components at (+-2, +-2), covariance 0.25 I, equal weights.
  /// Class 0 ("class-A") is the x < 0 pair, class 1 ("class-B") the x > 0 pair.
  static GaussianMixture two_class_2d();

  std::size_t dim() const { return dim_; }
  int class_count() const { return class_count_; }
  const std::vector<Component>& components() const { return components_; }
  /// True when the component's covariance needed the floor.
  bool floored(std::size_t component) const { return floored_[component]; }
  double class_weight(int label) const;

  /// Class named by a prompt token, if any.
  std::optional<int> class_for_token(int token) const;
  /// Classes named by any token of the prompt; empty means unconditional.
  std::set<int> classes_for_prompt(const model::Prompt& prompt) const;
  const std::map<int, int>& class_tokens() const { return class_tokens_; }

  /// n i.i.d. draws. Point i uses its own stream derived from (seed, i).
  LabeledPoints sample(std::size_t n, std::uint64_t seed) const;
  /// Draws restricted to the given classes (all classes when empty).
  LabeledPoints sample_classes(const std::set<int>& classes, std::size_t n, std::uint64_t seed) const;

  /// log q_t(x) of the diffused marginal sum_i pi_i N(alpha_t mu_i, alpha_t^2 Sigma_i + sigma_t^2 I),
  /// restricted to `classes` (renormalised) when non-empty.
  double log_marginal(std::span<const double> x, int t, const diffusion::NoiseSchedule& schedule,
                      const std::set<int>& classes = {}) const;

  /// Optimal eps-prediction eps*(x_t, t) = -sigma_t grad log q_t(x_t) for each row.
  ad::Array analytic_eps(const ad::Array& x_t, int t, const diffusion::NoiseSchedule& schedule,
                         const std::set<int>& classes = {}) const;

  /// argmax_c sum_{i in c} pi_i N(x; mu_i, Sigma_i); ties go to the lower class.
  Classification bayes_classify(std::span<const double> x) const;

 private:
  std::vector<double> class_log_density(std::span<const double> x) const;

  std::vector<Component> components_;
  std::vector<bool> floored_;
  std::map<int, int> class_tokens_;
  std::size_t dim_ = 0;
  int class_count_ = 0;
};

/// Token ids of the standard two-class task.
struct TwoClassTokens {
  static constexpr int agnostic = 1;
  static constexpr int class_a = 2;
  static constexpr int class_b = 3;
  static constexpr int upper = 4;
  static constexpr int lower = 5;
};

/// NoisePredictor backed by `analytic_eps`; prompts map to classes through
/// the mixture's token table.
class MixtureOracle final : public diffusion::NoisePredictor {
 public:
  MixtureOracle(const GaussianMixture& mixture, const diffusion::NoiseSchedule& schedule)
      : mixture_(mixture), schedule_(schedule) {}

  std::size_t data_dim() const override { return mixture_.dim(); }
  ad::Array predict(const ad::Array& x_t, int t, const model::Prompt& prompt) const override;

 private:
  const GaussianMixture& mixture_;
  const diffusion::NoiseSchedule& schedule_;
};

}  // namespace snoopi::oracle
