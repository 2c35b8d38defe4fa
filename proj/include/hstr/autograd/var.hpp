// Copyright 2026 The hstr Authors.
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

// Minimal reverse-mode differentiation over Tensor values. Nodes that do
// not depend on any parameter keep no inputs and no closure, so inference
// graphs release intermediates as soon as they go out of scope.

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hstr/core/tensor.hpp"

namespace hstr::ag {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  void accumulate(const Tensor<T>& g) {
    if (!requires_grad) return;
    if (grad.empty()) {
      grad = g;
    } else {
      grad += g;
    }
  }
  void accumulate(Tensor<T>&& g) {
    if (!requires_grad) return;
    if (grad.empty()) {
      grad = std::move(g);
    } else {
      grad += g;
    }
  }
};

template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false) : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  const Tensor<T>& value() const { return node_->value; }
  const Tensor<T>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }
  const std::shared_ptr<Node<T>>& node() const { return node_; }

  void zero_grad() { node_->grad = Tensor<T>(); }

  /// Builds an op result. The closure receives the result node, whose grad is set.
  static Var make(Tensor<T> value, std::vector<Var> inputs, std::function<void(Node<T>&)> backward) {
    Var out(std::move(value), false);
    for (const auto& in : inputs) out.node_->requires_grad |= in.requires_grad();
    if (out.node_->requires_grad) {
      for (auto& in : inputs) out.node_->inputs.push_back(in.node_);
      out.node_->backward = std::move(backward);
    }
    return out;
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <typename T>
Var<T> constant(Tensor<T> value) {
  return Var<T>(std::move(value), false);
}

template <typename T>
Var<T> parameter(Tensor<T> value) {
  return Var<T>(std::move(value), true);
}

/// Reverse sweep from `root` seeded with `seed` (ones for a scalar root by default).
template <typename T>
void backward(const Var<T>& root, Tensor<T> seed = {}) {
  if (!root.requires_grad()) return;
  if (seed.empty()) seed = Tensor<T>(root.value().shape(), T(1));
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root.node().get(), 0}};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.push_back({child, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root.node()->accumulate(std::move(seed));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (!node->backward) continue;
    if (!node->grad.empty()) node->backward(*node);
    node->grad = Tensor<T>();  // interior gradients are not kept
  }
}

}  // namespace hstr::ag
