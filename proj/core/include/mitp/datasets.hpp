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
#include <vector>

namespace mitp::data {

// Recipe for a synthetic paired image/text classification task.
//
// Classes factor into an image group and a text group:
//   image_groups = clamp(round(K^modality_split), 1, K)
//   text_groups  = ceil(K / image_groups)
//   class k -> (k mod image_groups, k div image_groups)
// Images carry only the image group (a Gaussian prototype patch grid per
// group plus N(0, noise^2) noise); texts carry only the text group (signal
// tokens of the group mixed with distractors, at least one signal token per
// text). With 0 < modality_split < 1 neither modality alone identifies the
// class.
struct SyntheticSpec {
  std::size_t num_classes = 4;
  std::size_t n_train = 256;
  std::size_t n_val = 64;
  std::size_t n_test = 128;
  std::size_t n_patches = 4;
  std::size_t raw_dim = 8;
  std::size_t n_text_tokens = 8;
  std::size_t vocab_size = 48;
  double noise = 0.5;
  double modality_split = 0.5;
  double signal_rate = 0.5;         // chance a text position carries a signal token
  std::size_t tokens_per_group = 4;  // signal tokens per text group
  bool multi_label = false;
  std::size_t max_labels = 2;  // multi-label: set size uniform in [1, max_labels]
  std::uint64_t seed = 7;

  std::size_t image_groups() const;
  std::size_t text_groups() const;
  // Validates the recipe, including that the vocabulary fits the layout.
  void validate() const;

  bool operator==(const SyntheticSpec&) const = default;
};

// Vocabulary layout: [0, 3) template words, [3, 3 + K) class names, then
// text_groups * tokens_per_group signal tokens, then distractors.
constexpr std::size_t kTemplateTokens = 3;
std::size_t class_name_token(std::size_t k);
std::size_t first_signal_token(std::size_t num_classes);

struct Example {
  std::vector<double> patches;      // n_patches * raw_dim, row-major
  std::vector<std::size_t> tokens;  // n_text_tokens ids
  std::vector<std::size_t> labels;  // one id (uni) or a non-empty set (multi)

  bool operator==(const Example&) const = default;
};

struct DatasetShape {
  std::size_t n_patches = 0;
  std::size_t raw_dim = 0;
  std::size_t n_text_tokens = 0;
  std::size_t vocab_size = 0;
  std::size_t num_classes = 0;

  bool operator==(const DatasetShape&) const = default;
};

struct Dataset {
  DatasetShape shape;
  bool multi_label = false;
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
  bool operator==(const Dataset&) const = default;
};

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Deterministic in (spec, seed). Every class appears equally often (up to
// one) in each split. Throws ConfigError if a split is smaller than K.
Splits generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);
inline Splits generate_synthetic(const SyntheticSpec& spec) { return generate_synthetic(spec, spec.seed); }

// Hand-crafted class templates: the three template words then the class
// name token.
std::vector<std::vector<std::size_t>> default_class_prompts(std::size_t num_classes);

// JSONL, one object per line: {"patches": [[...], ...], "tokens": [...],
// "labels": [...]}. Doubles are written with round-trip precision.
void export_jsonl(const Dataset& dataset, const std::filesystem::path& path);

// Strict reader. Shape is inferred from the first line unless `expected` is
// given; every line must agree. Errors name the line (1-based) and field.
Dataset load_jsonl(const std::filesystem::path& path, const DatasetShape* expected = nullptr);

// Uniform subset without replacement of round(fraction * n) examples, in
// original order. Throws if the result would be empty or fraction is
// outside (0, 1].
Dataset subsample(const Dataset& dataset, double fraction, std::uint64_t seed);

}  // namespace mitp::data
