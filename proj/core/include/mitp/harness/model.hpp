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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mitp/classifier.hpp"
#include "mitp/datasets.hpp"
#include "mitp/encoder.hpp"
#include "mitp/harness/config.hpp"
#include "mitp/memory_hub.hpp"
#include "mitp/prompt_bank.hpp"

namespace mitp::harness {

enum class ParamGroup { backbone, prompt_bank, memory_hub, classifier };

const char* to_string(ParamGroup g);

// An example with the frozen, prompt-free part of both towers already run.
struct PreparedExample {
  const data::Example* source = nullptr;
  Tensor vision;        // tokens entering layer `start_layer`
  Tensor text;          // undefined when the text tower is not needed
  std::size_t start_layer = 0;
};

// Frozen dual encoder plus the variant-specific trainable prompt machinery.
//
// The text tower only matters through the prompts it hands to the hub, so
// it is run up to the last interaction layer that feeds a hub step and
// skipped entirely by variants without cross-modal exchange.
class Model {
 public:
  explicit Model(const RunConfig& config);

  const RunConfig& config() const noexcept { return config_; }
  encoder::DualEncoder& backbone() noexcept { return backbone_; }
  const encoder::DualEncoder& backbone() const noexcept { return backbone_; }
  const classifier::ClassPromptSet& classes() const noexcept { return classes_; }
  const MemoryHub* hub() const noexcept { return hub_ ? &*hub_ : nullptr; }
  const PromptBank* bank() const noexcept { return bank_ ? &*bank_ : nullptr; }

  // Unfreezes the backbone and disables prefix caching; class embeddings
  // are then recomputed inside every graph.
  void set_full_finetune(bool on);
  bool full_finetune() const noexcept { return full_finetune_; }

  PreparedExample prepare(const data::Example& example) const;

  // Vision pooled output x (unit norm).
  Tensor embed(const PreparedExample& example) const;
  // cos(x, z_k) / tau.
  Tensor logits(const PreparedExample& example) const;
  // Uni-label cross-entropy or multi-label mean BCE, by dataset mode.
  Tensor loss(const PreparedExample& example, bool multi_label) const;

  std::vector<Parameter*> parameters(ParamGroup group);
  std::vector<Parameter*> all_parameters();
  // Every parameter updated by training (non-frozen).
  std::vector<Parameter*> trainable_parameters();

  bool uses_text_tower() const noexcept;

 private:
  struct NaiveInteraction {
    TwoLayerMlp cross_t2v, cross_v2t, fuse_v, fuse_t;
  };

  PromptPair initial_prompts() const;
  PromptPair next_prompts(std::size_t step, const PromptPair& fed, const PromptPair& produced) const;
  Tensor class_embeddings_in_graph() const;

  RunConfig config_;
  encoder::DualEncoder backbone_;
  classifier::ClassPromptSet classes_;
  std::optional<PromptBank> bank_;
  std::optional<MemoryHub> hub_;
  std::optional<NaiveInteraction> naive_;
  std::vector<Parameter> deep_vision_, deep_text_;
  bool full_finetune_ = false;
};

}  // namespace mitp::harness
