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

#include <array>
#include <cstddef>
#include <string>

#include "mitp/harness/config.hpp"
#include "mitp/harness/model.hpp"

namespace mitp::harness {

struct GroupCount {
  std::size_t trainable = 0;
  std::size_t frozen = 0;

  bool operator==(const GroupCount&) const = default;
};

struct Census {
  // Indexed by ParamGroup: backbone, prompt_bank, memory_hub, classifier.
  std::array<GroupCount, 4> groups{};
  std::size_t trainable_total = 0;
  std::size_t frozen_total = 0;

  std::size_t total() const { return trainable_total + frozen_total; }
  double trainable_fraction() const;
  const GroupCount& group(ParamGroup g) const { return groups[static_cast<std::size_t>(g)]; }

  bool operator==(const Census&) const = default;
};

// Per-parameter enumeration of a built model.
Census enumerate_census(Model& model);

// Expected counts from the configuration alone.
//   bank   L*d_t + d_t*d_v + d_v
//   hub    mlp(d_t,h,d_v) + mlp(d_v,h,d_t) + mlp(d_v,h,d_v) + mlp(d_t,h,d_t)
//   naive  mlp(d_t,h,d_v) + mlp(d_v,h,d_t) + mlp(2d_v,h,d_v) + mlp(2d_t,h,d_t)
//   deep   |layers| * L * (d_v + d_t)
// with mlp(i,h,o) = i*h + h + h*o + o.
Census closed_form_census(const RunConfig& config, bool full_finetune = false);

std::size_t backbone_parameter_count(const encoder::EncoderConfig& config);

// Enumerates and checks against the closed form; a mismatch raises Error
// naming the group.
Census param_census(Model& model);

// Fixed-width text table of a census.
std::string format_census(const Census& census);

}  // namespace mitp::harness
