// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "snoopi/ad/array.hpp"

namespace snoopi::ad {

/// A named trainable value with an accumulating gradient.
class Parameter {
 public:
  Parameter(std::string name, Array value, bool trainable = true);

  const std::string& name() const { return name_; }
  Array& value() { return value_; }
  const Array& value() const { return value_; }
  Array& gradient() { return gradient_; }
  const Array& gradient() const { return gradient_; }
  bool trainable() const { return trainable_; }
  void set_trainable(bool trainable) { trainable_ = trainable; }
  void zero_gradient();

 private:
  std::string name_;
  Array value_;
  Array gradient_;
  bool trainable_;
};

void zero_gradients(std::span<Parameter* const> params);

enum class TapeMode { record, inference };

/// In `single` mode every op output is rounded to float. Gradcheck tolerances
/// are only defined for `double_`.
enum class Precision { double_, single };

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Array& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Linear record of primitive ops for one scalar loss. Nodes are appended in
/// creation order, which is a topological order, and `backward` walks them in
/// reverse exactly once.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Array& out_adjoint)>;

  explicit Tape(TapeMode mode = TapeMode::record, Precision precision = Precision::double_);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Array value);
  /// References `value` without copying; it must outlive the tape.
  Var view(const Array& value);
  /// Leaf bound to a parameter. Inference tapes bind it as a view.
  Var param(Parameter& p);

  const Array& value(Var v) const;
  bool recording() const { return mode_ == TapeMode::record; }
  Precision precision() const { return precision_; }
  std::size_t size() const { return nodes_.size(); }

  /// Propagates d(loss)/d(node) to every node and adds the parameter leaves'
  /// adjoints into their `gradient()` when trainable.
  void backward(Var loss);
  bool backpropagated() const { return backpropagated_; }

  /// Adjoint of a node after `backward` (zeros if the node did not influence the loss).
  Array adjoint(Var v) const;

  std::set<const Parameter*> parameters_used() const;

  // Op construction interface.
  Var push(const char* op, Array value, BackwardFn backward);
  void accumulate(Var target, const Array& contribution);
  Array& adjoint_slot(Var target);

 private:
  struct Node {
    const char* op = "";
    Array value;
    const Array* external = nullptr;
    Array adjoint;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  void check_owner(Var v) const;

  TapeMode mode_;
  Precision precision_;
  std::vector<Node> nodes_;
  bool backpropagated_ = false;
};

}  // namespace snoopi::ad
