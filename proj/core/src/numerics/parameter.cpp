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

#include "mitp/numerics/parameter.hpp"

namespace mitp {

Parameter Parameter::make(std::string name, Tensor tensor, bool frozen) {
  Parameter p{std::move(name), std::move(tensor), frozen};
  p.tensor.set_requires_grad(!frozen);
  return p;
}

Parameter Parameter::gaussian(std::string name, Shape shape, Rng& rng, double stddev, bool frozen) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.mutable_values()) v = rng.normal(0.0, stddev);
  return make(std::move(name), std::move(t), frozen);
}

Parameter Parameter::constant(std::string name, Shape shape, double value, bool frozen) {
  return make(std::move(name), Tensor::full(std::move(shape), value), frozen);
}

void Parameter::set_frozen(bool on) {
  frozen = on;
  tensor.set_requires_grad(!on);
}

std::size_t total_count(std::span<Parameter* const> params) {
  std::size_t n = 0;
  for (const auto* p : params) n += p->count();
  return n;
}

}  // namespace mitp
