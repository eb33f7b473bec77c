/*
 * Copyright (c) 2026, The MITP Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mitp/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

#include "mitp/numerics/error.hpp"

namespace mitp {

namespace {
thread_local bool g_finite_checks = false;
thread_local bool g_no_grad = false;

void check_positive(const Shape& shape) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError(fmt::format("tensor shape {} has a zero dimension", shape_str(shape)));
  }
}
}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Buffer& detail::Node::grad_buffer() {
  if (grad.empty()) grad.assign(values.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  check_positive(shape);
  auto node = std::make_shared<detail::Node>();
  node->values.assign(mitp::numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::span<const double> values, bool requires_grad) {
  check_positive(shape);
  if (mitp::numel(shape) != values.size()) {
    throw ShapeError(fmt::format("tensor shape {} needs {} values, got {}", shape_str(shape),
                                 mitp::numel(shape), values.size()));
  }
  auto node = std::make_shared<detail::Node>();
  node->values.assign(values.begin(), values.end());
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::initializer_list<double> values, bool requires_grad) {
  return from(std::move(shape), std::span<const double>(values.begin(), values.size()), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from(Shape{}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::numel() const { return node_->values.size(); }

std::size_t Tensor::rows() const {
  if (rank() != 2) throw ShapeError(fmt::format("rows() on non-matrix {}", shape_str(shape())));
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw ShapeError(fmt::format("cols() on non-matrix {}", shape_str(shape())));
  return node_->shape[1];
}

std::span<const double> Tensor::values() const { return {node_->values.data(), node_->values.size()}; }
std::span<double> Tensor::mutable_values() { return {node_->values.data(), node_->values.size()}; }

double Tensor::at(std::size_t r, std::size_t c) const { return node_->values[r * cols() + c]; }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError(fmt::format("item() on tensor of shape {}", shape_str(shape())));
  return node_->values[0];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
void Tensor::set_requires_grad(bool on) {
  node_->requires_grad = on;
  if (!on) node_->grad.clear();
}

bool Tensor::has_grad() const { return node_->has_grad(); }
std::span<const double> Tensor::grad() const { return {node_->grad.data(), node_->grad.size()}; }

void Tensor::zero_grad() {
  if (!node_->requires_grad) return;
  node_->grad.assign(node_->values.size(), 0.0);
}

void Tensor::clear_grad() {
  node_->grad.clear();
  node_->grad.shrink_to_fit();
}

const char* Tensor::op_name() const { return node_->op; }

Tensor Tensor::detach() const {
  auto node = std::make_shared<detail::Node>();
  node->shape = node_->shape;
  node->values = node_->values;
  return Tensor(std::move(node));
}

Tensor Tensor::clone() const {
  Tensor t = detach();
  t.node_->requires_grad = node_->requires_grad;
  return t;
}

Tensor Tensor::make_result(Shape shape, Buffer values, const char* op, std::vector<Tensor> inputs,
                           std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->op = op;
  if (g_finite_checks) {
    for (double v : node->values) {
      if (!std::isfinite(v)) throw NumericError(fmt::format("non-finite value produced by op '{}'", op));
    }
  }
  const bool track = !g_no_grad && std::any_of(inputs.begin(), inputs.end(),
                                 [](const Tensor& t) { return t.requires_grad(); });
  if (track) {
    node->requires_grad = true;
    node->backward = std::move(backward);
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) node->inputs.push_back(t.node_);
  }
  return Tensor(std::move(node));
}

void Tensor::backward() {
  if (numel() != 1) {
    throw ShapeError(fmt::format("backward() needs a scalar loss, got shape {}", shape_str(shape())));
  }
  if (node_->consumed) throw Error("backward() called on an already consumed graph");
  if (!node_->requires_grad) throw Error("backward() on a loss that depends on no trainable tensor");

  // Post-order DFS over interior nodes. `order` owns references so that
  // clearing a parent's inputs cannot free a child that is still pending.
  std::vector<std::shared_ptr<detail::Node>> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  std::vector<std::shared_ptr<detail::Node>> pending_owner;
  stack.emplace_back(node_.get(), 0);
  pending_owner.push_back(node_);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      const auto& child = n->inputs[next++];
      if (child->requires_grad && !child->inputs.empty() && seen.insert(child.get()).second) {
        pending_owner.push_back(child);
        stack.emplace_back(child.get(), 0);
      }
    } else {
      order.push_back(std::move(pending_owner.back()));
      pending_owner.pop_back();
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = it->get();
    if (n->has_grad() && n->backward) n->backward(*n);
    n->backward = nullptr;
    n->inputs.clear();
    n->consumed = true;
    if (n != node_.get()) {
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
    it->reset();
  }
}

FiniteCheckScope::FiniteCheckScope() : previous_(g_finite_checks) { g_finite_checks = true; }
FiniteCheckScope::~FiniteCheckScope() { g_finite_checks = previous_; }

NoGradScope::NoGradScope() : previous_(g_no_grad) { g_no_grad = true; }
NoGradScope::~NoGradScope() { g_no_grad = previous_; }

bool grad_recording_enabled() noexcept { return !g_no_grad; }
bool finite_checks_enabled() noexcept { return g_finite_checks; }

}  // namespace mitp
