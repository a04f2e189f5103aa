// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace snoopi::ad {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. Most operations work on rank-2 arrays;
/// scalars are 1x1.
class Array {
 public:
  Array() = default;
  explicit Array(Shape shape, double fill = 0.0);
  Array(Shape shape, std::vector<double> data);

  static Array matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);
  static Array scalar(double value) { return Array({1, 1}, std::vector<double>{value}); }
  static Array zeros_like(const Array& other) { return Array(other.shape()); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  /// Rows/cols of a rank-2 array (rank-1 arrays are treated as one row).
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  /// Scalar value of a 1x1 array.
  double item() const;

  bool all_finite() const;
  bool same_shape(const Array& other) const { return shape_ == other.shape_; }

  /// Bitwise equality of shape and every value.
  bool bit_equal(const Array& other) const;

  Array row(std::size_t r) const;
  Array& operator+=(const Array& other);

 private:
  Shape shape_;
  std::vector<double> data_;
};

double max_abs(const Array& a);
double max_abs_diff(const Array& a, const Array& b);

}  // namespace snoopi::ad
