/*
 * Copyright 2026 The Disent Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "disent/tensor.hpp"

namespace disent {

namespace detail {

struct Node;

// Propagates the gradient of a node's output into the gradients of its inputs.
// Entries of `input_grads` are null for inputs that do not require a gradient;
// non-null entries are pre-sized and must be accumulated into, not assigned.
using BackwardFn =
    std::function<void(const Node& self, const Tensor& output_grad, std::span<Tensor*> input_grads)>;

struct Node {
  Tensor value;
  bool requires_grad = false;
  std::vector<std::shared_ptr<const Node>> inputs;
  BackwardFn backward;
};

}  // namespace detail

// Handle to a value in a differentiation graph. Copies share the node.
//
// Leaves are created with constant() or parameter(). Every op below returns a
// new node recording its inputs, so a loss built from parameters can be fed to
// grad(). Graph nodes are immutable once built; parameters are the only leaves
// whose value is mutated (by the optimizer, between graph constructions).
class Var {
 public:
  Var() = default;

  const Tensor& value() const { return node_->value; }
  const std::vector<std::size_t>& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool valid() const { return node_ != nullptr; }

  // Mutable access for parameter updates. Must not be used while a graph that
  // reads this parameter is still being differentiated.
  Tensor& mutable_value() const;

  const detail::Node* node() const { return node_.get(); }

  friend Var constant(Tensor value);
  friend Var parameter(Tensor value);
  friend Var make_op(Tensor value, std::vector<Var> inputs, detail::BackwardFn backward);

 private:
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

Var constant(Tensor value);
Var parameter(Tensor value);

// Records an op whose output is `value`. Used by the primitives; exposed so the
// gradient machinery can be tested in isolation.
Var make_op(Tensor value, std::vector<Var> inputs, detail::BackwardFn backward);

// Reverse-mode gradient of a rank-0 `loss` with respect to each of `params`.
// A parameter that does not influence the loss gets an all-zero gradient.
std::vector<Tensor> grad(const Var& loss, std::span<const Var> params);

// ---------------------------------------------------------------------------
// Primitives. Shapes: `a` and `b` are same-shape, or `a` is a matrix and `b`
// a vector broadcast over its rows (add and mul only).

// [m,k] x [k,n] -> [m,n]; a vector on the left is treated as one row.
Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var relu(const Var& a);
Var sigmoid(const Var& a);
// ln(max(x, kLogFloor)); the gradient is zero below the floor.
Var log(const Var& a);
// Row-wise x / max(||x||, kNormFloor). A vector is a single row.
Var l2_normalize(const Var& a);
// max(0, x); used for hinge losses.
Var max_with_zero(const Var& a);
Var sum(const Var& a);
Var mean(const Var& a);
// Row-wise dot product: [n]·[n] -> scalar, [m,n]·[m,n] -> [m].
Var dot(const Var& a, const Var& b);

inline constexpr double kLogFloor = 1e-12;
inline constexpr double kNormFloor = 1e-12;

// ---------------------------------------------------------------------------
// Compositions of the primitives.

Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double offset);
Var sub(const Var& a, const Var& b);
// Row-wise cosine similarity with the guarded norm.
Var cosine(const Var& a, const Var& b);

}  // namespace disent
