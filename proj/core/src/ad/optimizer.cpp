// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/ad/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace snoopi::ad {

AdamW::AdamW(std::vector<Parameter*> params, AdamWConfig config) : config_(config) {
  for (Parameter* p : params)
    if (p->trainable()) params_.push_back(p);
  for (Parameter* p : params_) {
    first_moment_.emplace_back(p->value().shape());
    second_moment_.emplace_back(p->value().shape());
  }
}

void AdamW::step() {
  ++steps_;
  const double lr = config_.learning_rate;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Array& value = params_[k]->value();
    const Array& grad = params_[k]->gradient();
    Array& m = first_moment_[k];
    Array& v = second_moment_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
      value[i] -= lr * (update + config_.weight_decay * value[i]);
    }
  }
}

void AdamW::zero_gradients() {
  for (Parameter* p : params_) p->zero_gradient();
}

double AdamW::gradient_norm() const {
  double total = 0.0;
  for (const Parameter* p : params_)
    for (double g : p->gradient().data()) total += g * g;
  return std::sqrt(total);
}

}  // namespace snoopi::ad
