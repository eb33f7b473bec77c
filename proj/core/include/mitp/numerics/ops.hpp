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
#include <span>
#include <vector>

#include "mitp/numerics/tensor.hpp"

// Differentiable primitives. All operate on rank-1 or rank-2 tensors; shape
// violations raise ShapeError naming the op and the offending shapes.
namespace mitp::ops {

// [m,k]x[k,n] -> [m,n]; [m,k]x[k] -> [m]; [k]x[k,n] -> [n].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
// alpha * a + beta, elementwise.
Tensor affine(const Tensor& a, double alpha, double beta);
Tensor add_n(std::span<const Tensor> terms);

// [m,n] + [n] broadcast over rows.
Tensor add_bias(const Tensor& a, const Tensor& bias);
// [m,n] * [m] broadcast over the feature axis: row i scaled by s[i].
Tensor scale_rows(const Tensor& a, const Tensor& s);

// ReLU'(0) == 0.
Tensor relu(const Tensor& a);
// tanh approximation.
Tensor gelu(const Tensor& a);
Tensor exp(const Tensor& a);
// log(max(a, floor)); gradient is zero where the floor is active.
Tensor log(const Tensor& a, double floor = 1e-30);
Tensor sigmoid(const Tensor& a);

// Softmax along `axis` (0 or 1 for matrices, 0 for vectors).
Tensor softmax(const Tensor& a, std::size_t axis);

// Row-wise layer normalisation with affine gamma/beta of length cols.
// Vectors are treated as a single row.
Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// Same values, new shape with equal element count.
Tensor reshape(const Tensor& a, Shape shape);

Tensor concat_rows(const Tensor& top, const Tensor& bottom);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
// Row i of a matrix as a vector.
Tensor row(const Tensor& a, std::size_t i);
// Rows of `table` selected by `ids` (embedding lookup).
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);
// Element i of a vector as a scalar.
Tensor pick(const Tensor& a, std::size_t i);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Reductions along an axis of a matrix. variance uses divisor n - ddof.
Tensor mean_axis(const Tensor& a, std::size_t axis);
Tensor variance_axis(const Tensor& a, std::size_t axis, std::size_t ddof = 0);

// v / ||v||. A zero vector maps to zero with zero gradient.
Tensor normalize(const Tensor& v);

// Per-row similarity of two aligned [L,d] matrices -> [L].
// Degenerate rows (zero norm / zero variance) score 0 with zero gradient.
Tensor row_cosine(const Tensor& a, const Tensor& b);
Tensor row_covariance(const Tensor& a, const Tensor& b);
Tensor row_pearson(const Tensor& a, const Tensor& b);
// exp(-max(MMD^2, 0)) per row, where each row's d entries are treated as d
// scalar samples and MMD^2 is the unbiased RBF-kernel estimate. The kernel
// bandwidth is the median pairwise distance of the pooled 2d samples, held
// constant under differentiation (1.0 if the median is zero).
Tensor row_mmd_similarity(const Tensor& a, const Tensor& b);

// Pins the bandwidths row_mmd_similarity uses on this thread. The first
// pass after construction (or after rewind() while nothing is recorded)
// records each bandwidth in call order; every later pass started with
// rewind() replays them. Finite differences need this to see the same
// constant the analytic gradient assumes.
class MmdBandwidthPin {
 public:
  MmdBandwidthPin();
  ~MmdBandwidthPin();
  MmdBandwidthPin(const MmdBandwidthPin&) = delete;
  MmdBandwidthPin& operator=(const MmdBandwidthPin&) = delete;

  void rewind();
  std::size_t recorded() const noexcept { return values_.size(); }

 private:
  friend double pinned_bandwidth(std::span<const double> x, std::span<const double> y);
  MmdBandwidthPin* previous_;
  std::vector<double> values_;
  std::size_t cursor_ = 0;
  bool replaying_ = false;
};

// Bandwidth that row_mmd_similarity uses for one pair of sample rows.
double mmd_bandwidth(std::span<const double> x, std::span<const double> y);
// Unbiased MMD^2 with a fixed RBF bandwidth.
double mmd_squared(std::span<const double> x, std::span<const double> y, double bandwidth);

// Mean over classes of binary cross-entropy between sigmoid(logit) and
// target in {0,1}; computed in the stable log-sum-exp form.
Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets);

}  // namespace mitp::ops
