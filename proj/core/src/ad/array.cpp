// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/ad/array.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "snoopi/error.hpp"

namespace snoopi::ad {

std::string shape_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

namespace {
std::size_t extent_product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}
}  // namespace

Array::Array(Shape shape, double fill) : shape_(std::move(shape)), data_(extent_product(shape_), fill) {}

Array::Array(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  SNOOPI_REQUIRE(extent_product(shape_) == data_.size(),
                 "Array: shape " + shape_string(shape_) + " does not match " + std::to_string(data_.size()) +
                     " values");
}

Array Array::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Array({rows, cols}, std::vector<double>(values));
}

std::size_t Array::rows() const {
  if (shape_.size() == 2) return shape_[0];
  return shape_.empty() ? 0 : 1;
}

std::size_t Array::cols() const {
  if (shape_.size() == 2) return shape_[1];
  return shape_.empty() ? 0 : shape_.back();
}

double Array::item() const {
  SNOOPI_REQUIRE(data_.size() == 1, "Array::item on array of shape " + shape_string(shape_));
  return data_[0];
}

bool Array::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool Array::bit_equal(const Array& other) const {
  if (shape_ != other.shape_) return false;
  return data_.empty() || std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0;
}

Array Array::row(std::size_t r) const {
  const std::size_t c = cols();
  SNOOPI_REQUIRE(r < rows(), "Array::row out of range");
  return Array({1, c}, std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(r * c),
                                           data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * c)));
}

Array& Array::operator+=(const Array& other) {
  SNOOPI_REQUIRE(same_shape(other), "Array += shape mismatch " + shape_string(shape_) + " vs " +
                                        shape_string(other.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

double max_abs(const Array& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Array& a, const Array& b) {
  SNOOPI_REQUIRE(a.same_shape(b), "max_abs_diff shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace snoopi::ad
