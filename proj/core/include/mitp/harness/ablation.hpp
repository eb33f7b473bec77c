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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mitp/harness/config.hpp"
#include "mitp/harness/train.hpp"

namespace mitp::harness {

using Assignment = std::vector<std::pair<std::string, std::string>>;  // axis -> JSON value

struct CellResult {
  std::size_t index = 0;  // position in the Cartesian product, first axis slowest
  std::string key;        // "axis=value,axis=value"
  Assignment assignment;
  RunResult result;
};

// Runs every cell of the Cartesian product of `axes` over `base`. Cells are
// dispatched to `threads` workers (0 reads MITP_THREADS, default 1) and
// returned in product order whatever order they finish in. Setting the
// variant axis to baseline also clears interaction_layers for that cell.
std::vector<CellResult> ablation_matrix(const RunConfig& base, std::span<const AxisValues> axes,
                                        std::size_t threads = 0);

// Worker count from MITP_THREADS; 1 when unset or invalid.
std::size_t threads_from_env();

struct AggregateRow {
  std::string key;  // cell key without the seed axis
  Assignment assignment;
  std::size_t runs = 0;
  double accuracy_mean = 0.0, accuracy_std = 0.0;
  double f1_micro_mean = 0.0, f1_micro_std = 0.0;
  double f1_macro_mean = 0.0, f1_macro_std = 0.0;
  std::size_t trainable_params = 0;
};

// Groups cells that differ only in seed; std is the sample standard
// deviation (0 for a single run). Rows keep first-appearance order.
std::vector<AggregateRow> aggregate(std::span<const CellResult> cells);

std::string format_aggregate(std::span<const AggregateRow> rows);

}  // namespace mitp::harness
