// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/ad/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "snoopi/error.hpp"

namespace snoopi::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapConst = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;

MapConst as_matrix(const Array& a) {
  return MapConst(a.data().data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
}
Map as_matrix(Array& a) {
  return Map(a.data().data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
}

Tape& same_tape(Var a, Var b, const char* op) {
  if (!a.valid() || !b.valid()) throw StateError(std::string(op) + ": unbound operand");
  if (a.tape() != b.tape()) throw ContractViolation(std::string(op) + ": operands on different tapes");
  return *a.tape();
}

void require_matrix(const Array& a, const char* op) {
  SNOOPI_REQUIRE(a.rank() == 2, std::string(op) + ": expected rank-2 operand, got " + shape_string(a.shape()));
}

void require_same_shape(const Array& a, const Array& b, const char* op) {
  SNOOPI_REQUIRE(a.same_shape(b), std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                      shape_string(b.shape()));
}

Array product(const Array& a, const Array& b) {
  Array out({a.rows(), b.cols()});
  as_matrix(out).noalias() = as_matrix(a) * as_matrix(b);
  return out;
}

Array product_transposed_rhs(const Array& a, const Array& b) {  // a * b^T
  Array out({a.rows(), b.rows()});
  as_matrix(out).noalias() = as_matrix(a) * as_matrix(b).transpose();
  return out;
}

Array product_transposed_lhs(const Array& a, const Array& b) {  // a^T * b
  Array out({a.cols(), b.cols()});
  as_matrix(out).noalias() = as_matrix(a).transpose() * as_matrix(b);
  return out;
}

Array transposed(const Array& a) {
  Array out({a.cols(), a.rows()});
  as_matrix(out) = as_matrix(a).transpose();
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b, "matmul");
  const Array& av = a.value();
  const Array& bv = b.value();
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  SNOOPI_REQUIRE(av.cols() == bv.rows(),
                 "matmul: inner extents differ " + shape_string(av.shape()) + " * " + shape_string(bv.shape()));
  return tape.push("matmul", product(av, bv), [a, b](Tape& t, const Array& g) {
    t.accumulate(a, product_transposed_rhs(g, b.value()));
    t.accumulate(b, product_transposed_lhs(a.value(), g));
  });
}

Var transpose(Var a) {
  require_matrix(a.value(), "transpose");
  return a.tape()->push("transpose", transposed(a.value()),
                        [a](Tape& t, const Array& g) { t.accumulate(a, transposed(g)); });
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  Array out = a.value();
  out += b.value();
  return tape.push("add", std::move(out), [a, b](Tape& t, const Array& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  Array out = a.value();
  const Array& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return tape.push("sub", std::move(out), [a, b](Tape& t, const Array& g) {
    t.accumulate(a, g);
    Array& slot = t.adjoint_slot(b);
    for (std::size_t i = 0; i < g.size(); ++i) slot[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape(a, b, "mul");
  require_same_shape(a.value(), b.value(), "mul");
  Array out = a.value();
  const Array& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return tape.push("mul", std::move(out), [a, b](Tape& t, const Array& g) {
    const Array& av = a.value();
    const Array& bv = b.value();
    {
      Array& slot = t.adjoint_slot(a);
      for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * bv[i];
    }
    Array& slot = t.adjoint_slot(b);
    for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * av[i];
  });
}

Var scale(Var a, double factor) {
  Array out = a.value();
  for (double& x : out.data()) x *= factor;
  return a.tape()->push("scale", std::move(out), [a, factor](Tape& t, const Array& g) {
    Array& slot = t.adjoint_slot(a);
    for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * factor;
  });
}

Var broadcast_rows(Var row, std::size_t rows) {
  const Array& rv = row.value();
  require_matrix(rv, "broadcast_rows");
  SNOOPI_REQUIRE(rv.rows() == 1, "broadcast_rows: operand must be a single row, got " + shape_string(rv.shape()));
  const std::size_t cols = rv.cols();
  Array out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(rv.data().begin(), rv.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * cols));
  return row.tape()->push("broadcast_rows", std::move(out), [row, rows, cols](Tape& t, const Array& g) {
    Array& slot = t.adjoint_slot(row);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) slot[c] += g[r * cols + c];
  });
}

Var row_softmax(Var a) {
  const Array& av = a.value();
  require_matrix(av, "row_softmax");
  const std::size_t rows = av.rows();
  const std::size_t cols = av.cols();
  SNOOPI_REQUIRE(cols > 0, "row_softmax: empty rows");
  Array out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    double peak = av(r, 0);
    for (std::size_t c = 1; c < cols; ++c) peak = std::max(peak, av(r, c));
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      out(r, c) = std::exp(av(r, c) - peak);
      total += out(r, c);
    }
    for (std::size_t c = 0; c < cols; ++c) out(r, c) /= total;
  }
  Tape& tape = *a.tape();
  const Var self(&tape, static_cast<std::uint32_t>(tape.size()));
  return tape.push("row_softmax", std::move(out), [a, self, rows, cols](Tape& t, const Array& g) {
    const Array& y = self.value();
    Array& slot = t.adjoint_slot(a);
    for (std::size_t r = 0; r < rows; ++r) {
      double inner = 0.0;
      for (std::size_t c = 0; c < cols; ++c) inner += g[r * cols + c] * y(r, c);
      for (std::size_t c = 0; c < cols; ++c) slot[r * cols + c] += y(r, c) * (g[r * cols + c] - inner);
    }
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double x : a.value().data()) total += x;
  return a.tape()->push("sum", Array::scalar(total), [a](Tape& t, const Array& g) {
    Array& slot = t.adjoint_slot(a);
    for (double& s : slot.data()) s += g[0];
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  SNOOPI_REQUIRE(n > 0, "mean of empty array");
  double total = 0.0;
  for (double x : a.value().data()) total += x;
  return a.tape()->push("mean", Array::scalar(total / static_cast<double>(n)), [a, n](Tape& t, const Array& g) {
    Array& slot = t.adjoint_slot(a);
    const double share = g[0] / static_cast<double>(n);
    for (double& s : slot.data()) s += share;
  });
}

Var squared_norm(Var a) {
  double total = 0.0;
  for (double x : a.value().data()) total += x * x;
  return a.tape()->push("squared_norm", Array::scalar(total), [a](Tape& t, const Array& g) {
    const Array& av = a.value();
    Array& slot = t.adjoint_slot(a);
    for (std::size_t i = 0; i < av.size(); ++i) slot[i] += 2.0 * g[0] * av[i];
  });
}

Var dot(Var a, Var b) { return sum(mul(a, b)); }

Var concat_cols(std::span<const Var> parts) {
  SNOOPI_REQUIRE(!parts.empty(), "concat_cols: no operands");
  const std::size_t rows = parts[0].value().rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    require_matrix(p.value(), "concat_cols");
    SNOOPI_REQUIRE(p.tape() == parts[0].tape(), "concat_cols: operands on different tapes");
    SNOOPI_REQUIRE(p.value().rows() == rows, "concat_cols: row counts differ");
    cols += p.value().cols();
  }
  Array out({rows, cols});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Array& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) out(r, offset + c) = pv(r, c);
    offset += pv.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape()->push("concat_cols", std::move(out), [inputs, rows, cols](Tape& t, const Array& g) {
    std::size_t offset = 0;
    for (Var p : inputs) {
      Array& slot = t.adjoint_slot(p);
      const std::size_t pc = slot.cols();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < pc; ++c) slot(r, c) += g[r * cols + offset + c];
      offset += pc;
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Array& av = a.value();
  require_matrix(av, "slice_cols");
  SNOOPI_REQUIRE(begin < end && end <= av.cols(), "slice_cols: bad column range");
  const std::size_t rows = av.rows();
  const std::size_t width = end - begin;
  Array out({rows, width});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < width; ++c) out(r, c) = av(r, begin + c);
  return a.tape()->push("slice_cols", std::move(out), [a, begin, rows, width](Tape& t, const Array& g) {
    Array& slot = t.adjoint_slot(a);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < width; ++c) slot(r, begin + c) += g[r * width + c];
  });
}

Var concat_rows(std::span<const Var> parts) {
  SNOOPI_REQUIRE(!parts.empty(), "concat_rows: no operands");
  const std::size_t cols = parts[0].value().cols();
  std::size_t rows = 0;
  for (Var p : parts) {
    require_matrix(p.value(), "concat_rows");
    SNOOPI_REQUIRE(p.tape() == parts[0].tape(), "concat_rows: operands on different tapes");
    SNOOPI_REQUIRE(p.value().cols() == cols, "concat_rows: column counts differ");
    rows += p.value().rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (Var p : parts) data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape()->push("concat_rows", Array({rows, cols}, std::move(data)),
                               [inputs](Tape& t, const Array& g) {
                                 std::size_t offset = 0;
                                 for (Var p : inputs) {
                                   Array& slot = t.adjoint_slot(p);
                                   for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += g[offset + i];
                                   offset += slot.size();
                                 }
                               });
}

Var gather_rows(Var a, std::span<const std::size_t> index) {
  const Array& av = a.value();
  require_matrix(av, "gather_rows");
  const std::size_t cols = av.cols();
  Array out({index.size(), cols});
  for (std::size_t i = 0; i < index.size(); ++i) {
    SNOOPI_REQUIRE(index[i] < av.rows(), "gather_rows: index " + std::to_string(index[i]) + " out of range");
    for (std::size_t c = 0; c < cols; ++c) out(i, c) = av(index[i], c);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return a.tape()->push("gather_rows", std::move(out), [a, idx, cols](Tape& t, const Array& g) {
    Array& slot = t.adjoint_slot(a);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < cols; ++c) slot(idx[i], c) += g[i * cols + c];
  });
}

Var silu(Var a) {
  Array out = a.value();
  for (double& x : out.data()) x = x / (1.0 + std::exp(-x));
  return a.tape()->push("silu", std::move(out), [a](Tape& t, const Array& g) {
    const Array& av = a.value();
    Array& slot = t.adjoint_slot(a);
    for (std::size_t i = 0; i < av.size(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(-av[i]));
      slot[i] += g[i] * s * (1.0 + av[i] * (1.0 - s));
    }
  });
}

Var sinusoid(Var positions, std::span<const double> frequencies) {
  const Array& pv = positions.value();
  require_matrix(pv, "sinusoid");
  SNOOPI_REQUIRE(pv.cols() == 1, "sinusoid: positions must be a column");
  const std::size_t rows = pv.rows();
  const std::size_t count = frequencies.size();
  Array out({rows, 2 * count});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < count; ++k) {
      out(r, k) = std::sin(pv[r] * frequencies[k]);
      out(r, count + k) = std::cos(pv[r] * frequencies[k]);
    }
  std::vector<double> freqs(frequencies.begin(), frequencies.end());
  return positions.tape()->push("sinusoid", std::move(out), [positions, freqs](Tape& t, const Array& g) {
    const Array& pv = positions.value();
    Array& slot = t.adjoint_slot(positions);
    const std::size_t count = freqs.size();
    for (std::size_t r = 0; r < pv.rows(); ++r)
      for (std::size_t k = 0; k < count; ++k) {
        const double arg = pv[r] * freqs[k];
        slot[r] += freqs[k] * (g[r * 2 * count + k] * std::cos(arg) - g[r * 2 * count + count + k] * std::sin(arg));
      }
  });
}

std::vector<double> sinusoid_frequencies(std::size_t count, double base) {
  std::vector<double> out(count, 1.0);
  for (std::size_t k = 1; k < count; ++k)
    out[k] = std::pow(base, -static_cast<double>(k) / static_cast<double>(count - 1));
  return out;
}

}  // namespace snoopi::ad
