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
#include <span>
#include <string>

#include "mitp/numerics/tensor.hpp"

namespace mitp {

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  // Denominator floor for the relative error so that coordinates whose
  // true gradient is ~0 are judged on absolute error instead.
  double floor = 1e-7;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst_leaf;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  bool passed = false;
};

// `build_loss` must rebuild the scalar loss from the current values of
// `leaves` each time it is called. Every coordinate of every leaf is
// compared against the central difference (f(x+h) - f(x-h)) / 2h.
// Runs under FiniteCheckScope: a NaN/Inf anywhere raises NumericError.
GradCheckReport grad_check(const std::function<Tensor()>& build_loss, std::span<Tensor> leaves,
                           std::span<const std::string> names, const GradCheckOptions& options = {});

GradCheckReport grad_check(const std::function<Tensor()>& build_loss, std::span<Tensor> leaves,
                           const GradCheckOptions& options = {});

}  // namespace mitp
