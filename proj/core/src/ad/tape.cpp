// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/ad/tape.hpp"

#include "snoopi/error.hpp"

namespace snoopi::ad {

Parameter::Parameter(std::string name, Array value, bool trainable)
    : name_(std::move(name)), value_(std::move(value)), gradient_(value_.shape()), trainable_(trainable) {}

void Parameter::zero_gradient() {
  for (double& g : gradient_.data()) g = 0.0;
}

void zero_gradients(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_gradient();
}

const Array& Var::value() const {
  if (!tape_) throw StateError("Var: unbound handle");
  return tape_->value(*this);
}

Tape::Tape(TapeMode mode, Precision precision) : mode_(mode), precision_(precision) { nodes_.reserve(256); }

void Tape::check_owner(Var v) const {
  if (v.tape() != this) throw StateError("Var belongs to a different tape");
  if (v.id() >= nodes_.size()) throw StateError("Var id out of range");
}

Var Tape::constant(Array value) { return push("constant", std::move(value), nullptr); }

Var Tape::view(const Array& value) {
  if (backpropagated_) throw StateError("tape already backpropagated");
  Node node;
  node.op = "view";
  node.external = &value;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::param(Parameter& p) {
  if (!recording()) return view(p.value());
  Var v = view(p.value());
  nodes_.back().op = "param";
  nodes_.back().param = &p;
  return v;
}

const Array& Tape::value(Var v) const {
  check_owner(v);
  const Node& node = nodes_[v.id()];
  return node.external ? *node.external : node.value;
}

Var Tape::push(const char* op, Array value, BackwardFn backward) {
  if (backpropagated_) throw StateError("tape already backpropagated");
  if (!value.all_finite()) throw OverflowError(std::string("non-finite output from op '") + op + "'");
  if (precision_ == Precision::single) {
    for (double& x : value.data()) x = static_cast<double>(static_cast<float>(x));
  }
  Node node;
  node.op = op;
  node.value = std::move(value);
  if (recording()) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Array& Tape::adjoint_slot(Var target) {
  check_owner(target);
  Node& node = nodes_[target.id()];
  if (node.adjoint.empty() && !value(target).empty()) node.adjoint = Array(value(target).shape());
  return node.adjoint;
}

void Tape::accumulate(Var target, const Array& contribution) { adjoint_slot(target) += contribution; }

void Tape::backward(Var loss) {
  if (!recording()) throw StateError("backward on an inference tape");
  if (backpropagated_) throw StateError("backward called twice on the same tape");
  if (loss.tape() != this || loss.id() >= nodes_.size()) throw StateError("backward without a forward tape");
  if (value(loss).size() != 1) throw ContractViolation("backward: loss must be a scalar");
  backpropagated_ = true;
  adjoint_slot(loss)[0] = 1.0;
  for (std::int64_t i = loss.id(); i >= 0; --i) {
    Node& node = nodes_[static_cast<std::size_t>(i)];
    if (node.adjoint.empty()) continue;
    if (node.backward) {
      // Closures only touch strictly earlier nodes, so the reference stays valid.
      node.backward(*this, node.adjoint);
    }
    if (node.param && node.param->trainable()) node.param->gradient() += node.adjoint;
  }
}

Array Tape::adjoint(Var v) const {
  check_owner(v);
  const Node& node = nodes_[v.id()];
  if (node.adjoint.empty()) return Array(value(v).shape());
  return node.adjoint;
}

std::set<const Parameter*> Tape::parameters_used() const {
  std::set<const Parameter*> out;
  for (const Node& node : nodes_)
    if (node.param) out.insert(node.param);
  return out;
}

}  // namespace snoopi::ad
