// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "snoopi/ad/tape.hpp"

namespace snoopi::ad {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

/// Adam with decoupled weight decay. Only parameters flagged trainable at
/// construction are updated; the caller owns the parameters.
class AdamW {
 public:
  AdamW(std::vector<Parameter*> params, AdamWConfig config);

  void step();
  void zero_gradients();
  double gradient_norm() const;

  const AdamWConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  const std::vector<Parameter*>& parameters() const { return params_; }
  long steps_taken() const { return steps_; }

 private:
  std::vector<Parameter*> params_;
  AdamWConfig config_;
  std::vector<Array> first_moment_;
  std::vector<Array> second_moment_;
  long steps_ = 0;
};

}  // namespace snoopi::ad
