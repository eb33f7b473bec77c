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
#include <string>
#include <vector>

#include "mitp/numerics/grad_check.hpp"

namespace mitp::harness {

struct SuiteResult {
  std::string suite;  // "primitives", "hub", "model"
  std::string name;   // case within the suite
  GradCheckReport report;
};

// Every differentiable primitive on random well-conditioned inputs.
std::vector<SuiteResult> primitive_gradchecks(double tolerance, std::uint64_t seed = 1);
// A full hub step (inputs and every hub weight) for each similarity type.
std::vector<SuiteResult> hub_gradchecks(double tolerance, std::uint64_t seed = 2);
// Loss of a small two-interaction-layer model over every trainable weight,
// once per similarity type.
std::vector<SuiteResult> model_gradchecks(double tolerance, std::uint64_t seed = 3);

std::vector<SuiteResult> all_gradchecks(double tolerance);

}  // namespace mitp::harness
