// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "snoopi/ad/tape.hpp"

namespace snoopi::ad {

// Differentiable primitives. All operands must live on the same tape and be
// rank-2; there is no implicit broadcasting (use `broadcast_rows`).

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// Repeats a 1xN row `rows` times.
Var broadcast_rows(Var row, std::size_t rows);
/// Softmax over each row, max-subtracted.
Var row_softmax(Var a);
Var sum(Var a);
Var mean(Var a);
Var squared_norm(Var a);
Var dot(Var a, Var b);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var concat_rows(std::span<const Var> parts);
/// Row i of the result is row `index[i]` of `a`. Adjoints scatter-add.
Var gather_rows(Var a, std::span<const std::size_t> index);
Var silu(Var a);
/// Maps an Nx1 column of positions to [sin(p*f_k) | cos(p*f_k)], Nx2F.
Var sinusoid(Var positions, std::span<const double> frequencies);

/// Geometric frequency ladder 1, base^(-1/(F-1)), ..., base^(-1).
std::vector<double> sinusoid_frequencies(std::size_t count, double base = 1000.0);

}  // namespace snoopi::ad
