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

#include <span>
#include <string>
#include <vector>

#include "mitp/numerics/rng.hpp"
#include "mitp/numerics/tensor.hpp"

namespace mitp {

// Named model weight. A frozen parameter never tracks gradients and is
// skipped by the optimizer.
struct Parameter {
  std::string name;
  Tensor tensor;
  bool frozen = false;

  static Parameter make(std::string name, Tensor tensor, bool frozen);
  static Parameter gaussian(std::string name, Shape shape, Rng& rng, double stddev, bool frozen);
  static Parameter constant(std::string name, Shape shape, double value, bool frozen);

  void set_frozen(bool on);
  std::size_t count() const { return tensor.numel(); }
};

using ParameterList = std::vector<Parameter*>;

std::size_t total_count(std::span<Parameter* const> params);

}  // namespace mitp
