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
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mitp/datasets.hpp"
#include "mitp/encoder.hpp"
#include "mitp/memory_hub.hpp"

namespace mitp::harness {

enum class Variant { mitp_full, naive_mlp_interaction, prompts_only, baseline, deep_prompt_tuning };

Variant parse_variant(std::string_view name);
const char* to_string(Variant v);

// Which prompts of an interaction layer the hub consumes: the layer's
// output rows (post) or the rows that were fed in (pre).
enum class HubInput { post, pre };

HubInput parse_hub_input(std::string_view name);
const char* to_string(HubInput h);

// Complete description of one experiment. JSON keys match the field names;
// see README for the file layout.
struct RunConfig {
  encoder::EncoderConfig encoder;
  std::vector<std::size_t> interaction_layers{1, 2, 3};
  std::size_t prompt_length = 3;
  SimilarityType similarity = SimilarityType::cosine;
  Variant variant = Variant::mitp_full;
  std::size_t hub_hidden = 0;  // 0: MemoryHub::default_hidden
  HubInput hub_input = HubInput::post;
  double tau = 0.07;
  double lr = 2e-4;
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  std::size_t patience = 5;  // 0 disables early stopping
  std::uint64_t seed = 0;
  std::uint64_t backbone_seed = 0;
  double init_std = 0.02;
  data::SyntheticSpec data;
  std::string data_path;  // directory with train/val/test.jsonl; overrides `data`
  double train_fraction = 1.0;
  std::vector<std::vector<std::size_t>> class_prompts;  // empty: data::default_class_prompts
  std::string encoder_weights;                         // optional parameter file

  std::size_t effective_hub_hidden() const;
  std::size_t num_classes() const { return data.num_classes; }
  std::vector<std::vector<std::size_t>> effective_class_prompts() const;

  // Throws ConfigError describing the first violated constraint.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

// Strict parser: unknown keys and wrong types are errors. Syntax errors
// report "<source>:<line>:<column>".
RunConfig parse_run_config(std::string_view text, std::string_view source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);
std::string to_json_string(const RunConfig& config, int indent = 2);

// Sweep file: {"base": {...run config...}, "axes": {"seed": [1, 2], ...}}.
struct AxisValues {
  std::string name;
  std::vector<std::string> values;  // JSON text of each value
};

struct SweepSpec {
  RunConfig base;
  std::vector<AxisValues> axes;
};

SweepSpec parse_sweep(std::string_view text, std::string_view source = "<sweep>");
SweepSpec load_sweep(const std::filesystem::path& path);

// Applies one axis value (JSON text) to a config.
void apply_axis(RunConfig& config, std::string_view axis, std::string_view value_json);

}  // namespace mitp::harness
