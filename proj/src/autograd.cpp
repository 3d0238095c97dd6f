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

#include "disent/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/Dense>

#include "disent/errors.hpp"

namespace disent {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

ConstMatrixMap as_matrix(const Tensor& t) {
  return ConstMatrixMap(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

MatrixMap as_matrix(Tensor& t) {
  return MatrixMap(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

const Tensor& input_value(const detail::Node& self, std::size_t i) { return self.inputs[i]->value; }

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
  return a.rank() == 2 && b.rank() == 1 && a.cols() == b.size();
}

void check_binary_shapes(const char* op, const Tensor& a, const Tensor& b) {
  if (a.same_shape(b) || is_row_broadcast(a, b)) return;
  throw ContractViolation(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                          shape_string(b.shape()));
}

// Elementwise unary op with derivative expressed through input and output.
template <typename Forward, typename Derivative>
Var unary(const Var& a, Forward forward, Derivative derivative) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = forward(x[i]);
  return make_op(std::move(out), {a}, [derivative](const detail::Node& self, const Tensor& g, std::span<Tensor*> grads) {
    const Tensor& in = input_value(self, 0);
    Tensor& gx = *grads[0];
    for (std::size_t i = 0; i < in.size(); ++i) gx[i] += g[i] * derivative(in[i], self.value[i]);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor& Var::mutable_value() const { return node_->value; }

Var constant(Tensor value) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var parameter(Tensor value) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

Var make_op(Tensor value, std::vector<Var> inputs, detail::BackwardFn backward) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  for (auto& input : inputs) {
    if (!input.valid()) throw ContractViolation("op applied to an empty Var");
    node->requires_grad = node->requires_grad || input.requires_grad();
    node->inputs.push_back(input.node_);
  }
  if (node->requires_grad) node->backward = std::move(backward);
  return Var(std::move(node));
}

std::vector<Tensor> grad(const Var& loss, std::span<const Var> params) {
  if (!loss.valid() || loss.value().rank() != 0) {
    throw ContractViolation("grad() requires a scalar loss, got shape " +
                            (loss.valid() ? shape_string(loss.shape()) : std::string("<empty>")));
  }

  // Post-order over the nodes that lie on a path to a parameter.
  std::vector<const detail::Node*> order;
  std::unordered_set<const detail::Node*> visited;
  std::vector<std::pair<const detail::Node*, std::size_t>> stack;
  if (loss.requires_grad()) stack.emplace_back(loss.node(), 0);
  visited.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      const detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  std::unordered_map<const detail::Node*, Tensor> grads;
  grads.emplace(loss.node(), Tensor::scalar(1.0));
  std::vector<Tensor*> input_grads;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const detail::Node* node = *it;
    if (!node->backward) continue;
    auto found = grads.find(node);
    if (found == grads.end()) continue;
    // References into the map survive the insertions below.
    const Tensor& output_grad = found->second;
    input_grads.assign(node->inputs.size(), nullptr);
    for (std::size_t i = 0; i < node->inputs.size(); ++i) {
      const detail::Node* input = node->inputs[i].get();
      if (!input->requires_grad) continue;
      auto [slot, inserted] = grads.try_emplace(input, input->value.shape());
      input_grads[i] = &slot->second;
    }
    node->backward(*node, output_grad, input_grads);
  }

  std::vector<Tensor> result;
  result.reserve(params.size());
  for (const auto& p : params) {
    auto found = grads.find(p.node());
    result.push_back(found != grads.end() ? found->second : Tensor(p.shape()));
  }
  return result;
}

Var matmul(const Var& a, const Var& b) {
  const Tensor& x = a.value();
  const Tensor& w = b.value();
  if (x.rank() == 0 || w.rank() != 2 || x.cols() != w.rows()) {
    throw ContractViolation("matmul: incompatible shapes " + shape_string(x.shape()) + " and " +
                            shape_string(w.shape()));
  }
  Tensor out = x.rank() == 1 ? Tensor({w.cols()}) : Tensor({x.rows(), w.cols()});
  as_matrix(out).noalias() = as_matrix(x) * as_matrix(w);
  return make_op(std::move(out), {a, b}, [](const detail::Node& self, const Tensor& g, std::span<Tensor*> grads) {
    const Tensor& lhs = input_value(self, 0);
    const Tensor& rhs = input_value(self, 1);
    if (grads[0]) as_matrix(*grads[0]).noalias() += as_matrix(g) * as_matrix(rhs).transpose();
    if (grads[1]) as_matrix(*grads[1]).noalias() += as_matrix(lhs).transpose() * as_matrix(g);
  });
}

Var add(const Var& a, const Var& b) {
  check_binary_shapes("add", a.value(), b.value());
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out = x;
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i % n];
  return make_op(std::move(out), {a, b}, [](const detail::Node&, const Tensor& g, std::span<Tensor*> grads) {
    if (grads[0]) {
      for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i];
    }
    if (grads[1]) {
      Tensor& gy = *grads[1];
      const std::size_t n = gy.size();
      for (std::size_t i = 0; i < g.size(); ++i) gy[i % n] += g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_binary_shapes("mul", a.value(), b.value());
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out = x;
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i % n];
  return make_op(std::move(out), {a, b}, [](const detail::Node& self, const Tensor& g, std::span<Tensor*> grads) {
    const Tensor& x = input_value(self, 0);
    const Tensor& y = input_value(self, 1);
    const std::size_t n = y.size();
    if (grads[0]) {
      for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i] * y[i % n];
    }
    if (grads[1]) {
      for (std::size_t i = 0; i < g.size(); ++i) (*grads[1])[i % n] += g[i] * x[i];
    }
  });
}

Var relu(const Var& a) {
  return unary(a, [](double x) { return x < 0 ? 0.0 : x; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& a) {
  return unary(a, stable_sigmoid, [](double, double s) { return s * (1.0 - s); });
}

Var log(const Var& a) {
  return unary(
      a, [](double x) { return std::log(std::max(x, kLogFloor)); },
      [](double x, double) { return x > kLogFloor ? 1.0 / x : 0.0; });
}

Var max_with_zero(const Var& a) {
  return unary(a, [](double x) { return std::max(x, 0.0); }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var l2_normalize(const Var& a) {
  const Tensor& x = a.value();
  if (x.rank() == 0) throw ContractViolation("l2_normalize: scalar input");
  Tensor out = x;
  std::vector<double> norms(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = out.row(r);
    double sq = 0;
    for (double v : row) sq += v * v;
    norms[r] = std::max(std::sqrt(sq), kNormFloor);
    for (double& v : row) v /= norms[r];
  }
  return make_op(std::move(out), {a},
                 [norms = std::move(norms)](const detail::Node& self, const Tensor& g, std::span<Tensor*> grads) {
                   const Tensor& y = self.value;
                   const Tensor& x = input_value(self, 0);
                   Tensor& gx = *grads[0];
                   for (std::size_t r = 0; r < y.rows(); ++r) {
                     auto yr = y.row(r);
                     auto gr = g.row(r);
                     auto out = gx.row(r);
                     double sq = 0;
                     for (double v : x.row(r)) sq += v * v;
                     if (std::sqrt(sq) <= kNormFloor) {
                       // Below the floor the op is linear: x / kNormFloor.
                       for (std::size_t c = 0; c < out.size(); ++c) out[c] += gr[c] / kNormFloor;
                       continue;
                     }
                     double proj = 0;
                     for (std::size_t c = 0; c < yr.size(); ++c) proj += yr[c] * gr[c];
                     for (std::size_t c = 0; c < out.size(); ++c) out[c] += (gr[c] - yr[c] * proj) / norms[r];
                   }
                 });
}

Var sum(const Var& a) {
  double total = 0;
  for (double v : a.value().values()) total += v;
  return make_op(Tensor::scalar(total), {a}, [](const detail::Node&, const Tensor& g, std::span<Tensor*> grads) {
    const double scale = g.item();
    for (double& v : grads[0]->values()) v += scale;
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  double total = 0;
  for (double v : a.value().values()) total += v;
  return make_op(Tensor::scalar(total / n), {a}, [n](const detail::Node&, const Tensor& g, std::span<Tensor*> grads) {
    const double scale = g.item() / n;
    for (double& v : grads[0]->values()) v += scale;
  });
}

Var dot(const Var& a, const Var& b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (!x.same_shape(y) || x.rank() == 0) {
    throw ContractViolation("dot: incompatible shapes " + shape_string(x.shape()) + " and " + shape_string(y.shape()));
  }
  Tensor out = x.rank() == 1 ? Tensor::scalar(0.0) : Tensor({x.rows()});
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    auto yr = y.row(r);
    double acc = 0;
    for (std::size_t c = 0; c < xr.size(); ++c) acc += xr[c] * yr[c];
    out[r] = acc;
  }
  return make_op(std::move(out), {a, b}, [](const detail::Node& self, const Tensor& g, std::span<Tensor*> grads) {
    const Tensor& x = input_value(self, 0);
    const Tensor& y = input_value(self, 1);
    const std::size_t cols = x.cols();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double gr = g[i / cols];
      if (grads[0]) (*grads[0])[i] += gr * y[i];
      if (grads[1]) (*grads[1])[i] += gr * x[i];
    }
  });
}

Var scale(const Var& a, double factor) { return mul(a, constant(Tensor(a.shape(), factor))); }

Var add_scalar(const Var& a, double offset) { return add(a, constant(Tensor(a.shape(), offset))); }

Var sub(const Var& a, const Var& b) { return add(a, scale(b, -1.0)); }

Var cosine(const Var& a, const Var& b) { return dot(l2_normalize(a), l2_normalize(b)); }

}  // namespace disent
