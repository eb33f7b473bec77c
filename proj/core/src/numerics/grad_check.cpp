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

#include "mitp/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "mitp/numerics/error.hpp"

namespace mitp {

GradCheckReport grad_check(const std::function<Tensor()>& build_loss, std::span<Tensor> leaves,
                           std::span<const std::string> names, const GradCheckOptions& options) {
  FiniteCheckScope finite;
  for (auto& leaf : leaves) {
    if (!leaf.requires_grad()) throw Error("grad_check: leaf does not require grad");
    leaf.clear_grad();
  }
  Tensor loss = build_loss();
  if (!std::isfinite(loss.item())) throw NumericError("grad_check: non-finite loss");
  loss.backward();

  std::vector<std::vector<double>> analytic;
  for (auto& leaf : leaves) {
    if (leaf.has_grad()) {
      analytic.emplace_back(leaf.grad().begin(), leaf.grad().end());
    } else {
      analytic.emplace_back(leaf.numel(), 0.0);
    }
    leaf.clear_grad();
  }

  GradCheckReport report;
  const double h = options.step;
  NoGradScope values_only;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto values = leaves[li].mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = build_loss().item();
      values[i] = saved - h;
      const double down = build_loss().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[li][i];
      const double abs_err = std::abs(a - numeric);
      const double rel_err = abs_err / std::max({std::abs(a), std::abs(numeric), options.floor});
      ++report.coordinates;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel_err > report.max_rel_error || report.worst_leaf.empty()) {
        report.max_rel_error = rel_err;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
        report.worst_leaf = li < names.size() ? names[li] : fmt::format("leaf{}", li);
      }
    }
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

GradCheckReport grad_check(const std::function<Tensor()>& build_loss, std::span<Tensor> leaves,
                           const GradCheckOptions& options) {
  return grad_check(build_loss, leaves, {}, options);
}

}  // namespace mitp
