// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/ad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "snoopi/error.hpp"
#include "snoopi/rng.hpp"

namespace snoopi::ad {

namespace {

double evaluate(const ScalarFunction& f) {
  Tape tape(TapeMode::inference);
  return f(tape).value().item();
}

}  // namespace

GradcheckResult gradcheck(const ScalarFunction& f, std::span<Parameter* const> params,
                          const GradcheckOptions& options) {
  SNOOPI_REQUIRE(options.step > 0.0, "gradcheck: step must be positive");

  std::vector<bool> was_trainable;
  for (Parameter* p : params) {
    was_trainable.push_back(p->trainable());
    p->set_trainable(true);
    p->zero_gradient();
  }
  {
    Tape tape;
    Var loss = f(tape);
    tape.backward(loss);
  }
  std::vector<Array> analytic;
  for (Parameter* p : params) analytic.push_back(p->gradient());

  GradcheckResult result;
  Rng rng(options.seed);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    std::vector<std::size_t> coords(p.value().size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coordinates_per_parameter > 0 && coords.size() > options.max_coordinates_per_parameter) {
      for (std::size_t i = 0; i < options.max_coordinates_per_parameter; ++i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                                static_cast<std::int64_t>(coords.size() - 1)));
        std::swap(coords[i], coords[j]);
      }
      coords.resize(options.max_coordinates_per_parameter);
    }
    for (std::size_t c : coords) {
      double& slot = p.value()[c];
      const double saved = slot;
      slot = saved + options.step;
      const double plus = evaluate(f);
      slot = saved - options.step;
      const double minus = evaluate(f);
      slot = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      if (!std::isfinite(numeric)) throw OverflowError("gradcheck: non-finite central difference");
      const double err = std::abs(analytic[k][c] - numeric) / std::max(1.0, std::abs(numeric));
      ++result.coordinates;
      if (err > result.max_relative_error || result.worst_coordinate.empty()) {
        result.max_relative_error = err;
        result.worst_coordinate = p.name() + "[" + std::to_string(c) + "]";
      }
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    params[k]->set_trainable(was_trainable[k]);
    params[k]->zero_gradient();
  }
  return result;
}

}  // namespace snoopi::ad
