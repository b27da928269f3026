// Copyright 2026 The DSCL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "dscl/tensor.h"

namespace dscl {

class Node;
using NodePtr = std::shared_ptr<Node>;

// One value in a reverse-mode graph. Values are float64. Interior nodes own
// their parents, so the whole tape is released when the last handle to the
// root goes away.
class Node {
 public:
  Tensor value;
  // Same length as value once touched by backward; empty otherwise.
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  // Reads `grad` of this node and accumulates into the parents' grads.
  std::function<void(Node&)> backward_fn;
  const char* tag = "leaf";

  // Zero-initialised gradient buffer for accumulation.
  std::vector<double>& grad_buffer();
};

// Value handle. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  static Var constant(Tensor value);
  static Var parameter(Tensor value);

  const Tensor& value() const { return node_->value; }
  // Only meaningful on leaves (optimizer steps, finite differences).
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t axis) const { return node_->value.dim(axis); }
  double item() const { return node_->value.item(); }
  bool requires_grad() const { return node_->requires_grad; }
  Node* node() const { return node_.get(); }
  const NodePtr& ptr() const { return node_; }
  explicit operator bool() const { return node_ != nullptr; }

 private:
  NodePtr node_;
};

// Builds an interior node. When no parent requires a gradient the parents
// and the closure are dropped and the result is a constant.
Var make_var(Tensor value, std::vector<Var> parents, const char* tag,
             std::function<void(Node&)> backward_fn);

using GradMap = std::unordered_map<const Node*, Tensor>;

// Reverse accumulation from a scalar root. Every node is visited once, in
// reverse topological order; a node feeding several consumers receives the
// sum of their contributions. Returns gradients of the requires-grad leaves
// reachable from root. Throws ContractError on a non-scalar root.
GradMap backward(const Var& root);

}  // namespace dscl
