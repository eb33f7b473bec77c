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
#include <vector>

#include "mitp/numerics/parameter.hpp"
#include "mitp/numerics/rng.hpp"

namespace mitp {

// The single trained seed prompt for the text branch and the affine map that
// derives the first vision prompt from it. Every later prompt is generated.
class PromptBank {
 public:
  // Seed prompt and map weight ~ N(0, 0.02^2); map bias zero.
  static PromptBank init(Rng& rng, std::size_t length, std::size_t d_t, std::size_t d_v, double stddev = 0.02);

  std::size_t length() const noexcept { return length_; }
  const Tensor& text_prompt() const noexcept { return text_prompt_.tensor; }

  // Row-wise p_t W + b: [L, d_t] -> [L, d_v].
  Tensor project_text_to_vision(const Tensor& text_prompt) const;

  std::vector<Parameter*> parameters();

  // L*d_t + d_t*d_v + d_v.
  static std::size_t parameter_count(std::size_t length, std::size_t d_t, std::size_t d_v);

 private:
  std::size_t length_ = 0;
  Parameter text_prompt_;
  Parameter weight_;
  Parameter bias_;
};

}  // namespace mitp
