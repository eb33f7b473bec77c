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

#include "mitp/numerics/adam.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mitp/numerics/error.hpp"

namespace mitp {

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  for (const auto* p : params) {
    if (!p->frozen && !p->tensor.has_grad()) {
      throw Error(fmt::format("adam_step: trainable parameter '{}' has no gradient", p->name));
    }
  }
  ++state.step_count;
  const auto& o = state.options;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (auto* p : params) {
    if (!p->frozen) {
      auto& mom = state.moments[p->name];
      const std::size_t n = p->tensor.numel();
      if (mom.first.size() != n) {
        mom.first.assign(n, 0.0);
        mom.second.assign(n, 0.0);
      }
      const auto g = p->tensor.grad();
      auto w = p->tensor.mutable_values();
      for (std::size_t i = 0; i < n; ++i) {
        mom.first[i] = o.beta1 * mom.first[i] + (1.0 - o.beta1) * g[i];
        mom.second[i] = o.beta2 * mom.second[i] + (1.0 - o.beta2) * g[i] * g[i];
        const double mhat = mom.first[i] / c1;
        const double vhat = mom.second[i] / c2;
        w[i] -= o.lr * mhat / (std::sqrt(vhat) + o.eps);
      }
    }
    p->tensor.clear_grad();
  }
}

}  // namespace mitp
