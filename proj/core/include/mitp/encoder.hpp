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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mitp/numerics/parameter.hpp"
#include "mitp/numerics/rng.hpp"
#include "mitp/numerics/tensor.hpp"

namespace mitp::encoder {

struct EncoderConfig {
  std::size_t num_layers = 4;
  std::size_t d_v = 96;
  std::size_t d_t = 48;
  std::size_t num_heads = 4;
  std::size_t n_patches = 4;
  std::size_t raw_dim = 8;
  std::size_t n_text_tokens = 8;
  std::size_t vocab_size = 48;
  std::size_t d_joint = 16;
  std::size_t mlp_ratio = 2;

  // Throws ConfigError on a zero field, a head count that does not divide a
  // width, or an interaction layer outside [0, num_layers).
  void validate(std::span<const std::size_t> interaction_layers = {}) const;

  bool operator==(const EncoderConfig&) const = default;
};

enum class Modality { vision, text };

const char* to_string(Modality m);

enum class LayerRole { interaction, extraction };

// Role of every layer. Interaction layers must be strictly increasing and,
// when there are several, equally spaced.
std::vector<LayerRole> layer_roles(std::size_t num_layers, std::span<const std::size_t> interaction_layers);

// Prompt block attached at an interaction layer, keyed by layer index.
using PromptSchedule = std::map<std::size_t, Tensor>;

struct BranchOutput {
  Tensor pooled;                                  // unit vector of length d_joint
  std::map<std::size_t, Tensor> prompt_outputs;   // p-hat per interaction layer
  Tensor features;                                // final-layer feature tokens
};

struct LayerWeights {
  Parameter ln1_gamma, ln1_beta;
  Parameter qkv_weight, qkv_bias;
  Parameter out_weight, out_bias;
  Parameter ln2_gamma, ln2_beta;
  Parameter fc1_weight, fc1_bias;
  Parameter fc2_weight, fc2_bias;
};

// One frozen transformer tower. Pre-norm blocks with bidirectional
// multi-head attention and a GELU MLP. The vision tower prepends a class
// token and pools it; the text tower pools its final position.
class Branch {
 public:
  Branch(Modality modality, const EncoderConfig& config, Rng rng, double init_std = 0.02);

  Modality modality() const noexcept { return modality_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t num_layers() const noexcept { return layers_.size(); }

  // patches: [n_patches, raw_dim] -> [n_patches + 1, d_v] (class token first).
  Tensor embed_image(const Tensor& patches) const;
  // 1..n_text_tokens ids -> [n, d_t].
  Tensor embed_text(std::span<const std::size_t> token_ids) const;

  // One transformer block over [rows, width].
  Tensor layer_forward(std::size_t layer_idx, const Tensor& seq) const;
  // Layers [begin, end) applied without prompts.
  Tensor run_layers(const Tensor& seq, std::size_t begin, std::size_t end) const;
  // Final norm + projection of the pooled token, normalised to unit length.
  Tensor pool(const Tensor& features) const;

  // Full tower. At every key of `schedule` the prompt rows are prefixed
  // before the layer and stripped after it, with the stripped rows recorded.
  // A key outside `interaction_layers` is an error.
  BranchOutput forward(const Tensor& tokens, const PromptSchedule& schedule,
                       std::span<const std::size_t> interaction_layers) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  Modality modality_;
  std::size_t width_;
  std::size_t heads_;
  std::size_t n_positions_;
  std::string prefix_;

  Parameter patch_weight_, patch_bias_, class_token_;  // vision only
  Parameter token_table_;                              // text only
  Parameter positions_;
  std::vector<LayerWeights> layers_;
  Parameter final_gamma_, final_beta_;
  Parameter pool_weight_;
};

// Both towers, seeded from one generator. Weights are "pre-trained" stand-ins
// and frozen on construction.
class DualEncoder {
 public:
  DualEncoder(const EncoderConfig& config, std::uint64_t seed);

  const EncoderConfig& config() const noexcept { return config_; }
  Branch& vision() noexcept { return vision_; }
  Branch& text() noexcept { return text_; }
  const Branch& vision() const noexcept { return vision_; }
  const Branch& text() const noexcept { return text_; }

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  void set_frozen(bool frozen);

  // Replace every weight from a parameter file. Names and shapes must match
  // exactly; nothing is modified if validation fails.
  void load_weights(const std::filesystem::path& path);
  void save_weights(const std::filesystem::path& path) const;

 private:
  EncoderConfig config_;
  Branch vision_;
  Branch text_;
};

}  // namespace mitp::encoder
