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

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>

#include "mitp/numerics/parameter.hpp"

namespace mitp {

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamMoments {
  Buffer first;
  Buffer second;
};

struct AdamState {
  AdamOptions options;
  std::uint64_t step_count = 0;
  std::unordered_map<std::string, AdamMoments> moments;  // keyed by parameter name

  AdamState() = default;
  explicit AdamState(AdamOptions opts) : options(opts) {}
};

// One bias-corrected Adam update of every non-frozen parameter; gradients of
// all listed parameters are cleared afterwards. Throws if a non-frozen
// parameter has no gradient buffer.
void adam_step(std::span<Parameter* const> params, AdamState& state);

}  // namespace mitp
