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

#include "mitp/prompt_bank.hpp"

#include "mitp/numerics/error.hpp"
#include "mitp/numerics/ops.hpp"

namespace mitp {

PromptBank PromptBank::init(Rng& rng, std::size_t length, std::size_t d_t, std::size_t d_v, double stddev) {
  if (length == 0 || d_t == 0 || d_v == 0) throw ConfigError("prompt bank needs positive length and widths");
  PromptBank bank;
  bank.length_ = length;
  bank.text_prompt_ = Parameter::gaussian("prompt_bank.text_prompt", {length, d_t}, rng, stddev, false);
  bank.weight_ = Parameter::gaussian("prompt_bank.t2v.weight", {d_t, d_v}, rng, stddev, false);
  bank.bias_ = Parameter::constant("prompt_bank.t2v.bias", {d_v}, 0.0, false);
  return bank;
}

Tensor PromptBank::project_text_to_vision(const Tensor& text_prompt) const {
  return ops::add_bias(ops::matmul(text_prompt, weight_.tensor), bias_.tensor);
}

std::vector<Parameter*> PromptBank::parameters() { return {&text_prompt_, &weight_, &bias_}; }

std::size_t PromptBank::parameter_count(std::size_t length, std::size_t d_t, std::size_t d_v) {
  return length * d_t + d_t * d_v + d_v;
}

}  // namespace mitp
