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

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mitp/numerics/memory.hpp"

namespace mitp {

using Shape = std::vector<std::size_t>;
using Buffer = std::vector<double, memory::TrackingAllocator<double>>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

// One vertex of the computation graph. Leaves have no backward function.
// Interior nodes hold their inputs alive until backward() consumes them.
struct Node {
  Shape shape;
  Buffer values;
  Buffer grad;  // empty while absent
  bool requires_grad = false;
  bool consumed = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  bool has_grad() const noexcept { return !grad.empty(); }
  // Lazily materialises a zero gradient buffer.
  Buffer& grad_buffer();
};

}  // namespace detail

// Dense row-major array of doubles with optional reverse-mode gradient
// tracking. Tensor is a shared handle: copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::span<const double> values, bool requires_grad = false);
  static Tensor from(Shape shape, std::initializer_list<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  std::size_t rows() const;  // rank-2 only
  std::size_t cols() const;  // rank-2 only

  std::span<const double> values() const;
  // Direct write access for optimizers, loaders and tests. Never call this
  // on a tensor that is part of a live graph.
  std::span<double> mutable_values();
  double operator[](std::size_t i) const { return values()[i]; }
  double at(std::size_t r, std::size_t c) const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool on);

  bool has_grad() const;
  std::span<const double> grad() const;  // empty span if absent
  void zero_grad();                       // materialise zeros
  void clear_grad();                      // drop the buffer

  // Reverse-mode sweep from this scalar. Consumes the graph: interior nodes
  // release their inputs and a second call raises.
  void backward();

  // Same values, no history, no gradient tracking.
  Tensor detach() const;
  Tensor clone() const;

  const char* op_name() const;

  detail::Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const noexcept { return node_; }

  static Tensor make_result(Shape shape, Buffer values, const char* op,
                            std::vector<Tensor> inputs,
                            std::function<void(detail::Node&)> backward);

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

// While alive on this thread, every op output is scanned for NaN/Inf and a
// NumericError naming the op is raised.
class FiniteCheckScope {
 public:
  FiniteCheckScope();
  ~FiniteCheckScope();
  FiniteCheckScope(const FiniteCheckScope&) = delete;
  FiniteCheckScope& operator=(const FiniteCheckScope&) = delete;

 private:
  bool previous_;
};

bool finite_checks_enabled() noexcept;

// While alive on this thread, ops record no graph even when inputs require
// gradients. Used for evaluation.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  bool previous_;
};

bool grad_recording_enabled() noexcept;

}  // namespace mitp
