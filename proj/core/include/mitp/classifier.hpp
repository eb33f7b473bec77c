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
#include <vector>

#include "mitp/encoder.hpp"
#include "mitp/numerics/tensor.hpp"

namespace mitp::classifier {

using TokenSequence = std::vector<std::size_t>;

// Class text templates and their cached, unit-norm text embeddings. The
// text tower is frozen, so the cache is built once per model.
struct ClassPromptSet {
  std::vector<TokenSequence> prompts;
  Tensor embeddings;  // [K, d_joint], constant

  std::size_t num_classes() const { return prompts.size(); }
};

// Runs each template through the text branch without temporal prompts.
ClassPromptSet build_class_embeddings(std::vector<TokenSequence> prompts, const encoder::Branch& text_branch);

// cos(x, z_k) / tau for every class. x must be unit norm.
Tensor logits(const Tensor& x, const ClassPromptSet& classes, double tau);

// Temperature softmax over cosine similarities (tau in numerator and
// denominator alike).
Tensor predict(const Tensor& x, const ClassPromptSet& classes, double tau);

// -log(probs[label]), log input clamped at 1e-30.
Tensor loss_uni(const Tensor& probs, std::size_t label);
// Batch mean of loss_uni.
Tensor loss_uni(std::span<const Tensor> probs, std::span<const std::size_t> labels);

// Mean over classes of binary cross-entropy between sigmoid(logit) and
// membership in `label_set`.
Tensor loss_multi(const Tensor& logits, std::span<const std::size_t> label_set);

enum class Task { uni_label, multi_label };

struct Metrics {
  double accuracy = 0.0;
  double f1_micro = 0.0;
  double f1_macro = 0.0;
};

// `scores` holds one K-vector per sample: probabilities (or logits) for the
// uni-label task, logits for the multi-label task where a class is
// predicted when sigmoid(logit) >= 0.5. Accuracy is argmax agreement with
// the first label for uni-label and exact set match for multi-label.
// f1_macro gives 0 to a class with no positives and no predictions.
Metrics metrics(std::span<const std::vector<double>> scores, std::span<const std::vector<std::size_t>> truth,
                Task task);

}  // namespace mitp::classifier
