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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mitp/harness/ablation.hpp"
#include "mitp/harness/train.hpp"

namespace mitp::harness {

enum class ExportFormat { csv, json };

ExportFormat parse_format(std::string_view name);

// Column order of the per-run CSV.
const std::vector<std::string>& csv_columns();

// Numbers use 6 significant digits with a '.' decimal point whatever the
// locale; counts are written as integers.
std::string format_number(double value);

std::string results_to_csv(std::span<const RunResult> results);
std::string results_to_json(std::span<const RunResult> results, int indent = 2);
std::vector<RunResult> results_from_json(std::string_view text);

// Long format for plotting the interaction-layer sweep: one row per run and
// metric with columns variant, similarity, interaction_layers, first_layer,
// interval, num_interaction_layers, prompt_length, train_fraction, seed,
// metric, value.
std::string sweep_long_csv(std::span<const RunResult> results);

std::string aggregate_to_csv(std::span<const AggregateRow> rows);

// Writes results in the requested format. Throws on empty input or an
// unwritable path.
void export_results(std::span<const RunResult> results, const std::filesystem::path& path, ExportFormat format);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

std::vector<RunResult> results_of(std::span<const CellResult> cells);

}  // namespace mitp::harness
