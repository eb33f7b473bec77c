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

#include "mitp/classifier.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "mitp/numerics/error.hpp"
#include "mitp/numerics/ops.hpp"

namespace mitp::classifier {

ClassPromptSet build_class_embeddings(std::vector<TokenSequence> prompts, const encoder::Branch& text_branch) {
  if (prompts.size() < 2) throw ConfigError(fmt::format("need at least 2 classes, got {}", prompts.size()));
  std::vector<double> rows;
  std::size_t width = 0;
  for (const auto& p : prompts) {
    const Tensor pooled = text_branch.forward(text_branch.embed_text(p), {}, {}).pooled;
    width = pooled.numel();
    rows.insert(rows.end(), pooled.values().begin(), pooled.values().end());
  }
  ClassPromptSet set;
  set.embeddings = Tensor::from({prompts.size(), width}, rows);
  set.prompts = std::move(prompts);
  return set;
}

Tensor logits(const Tensor& x, const ClassPromptSet& classes, double tau) {
  if (!(tau > 0.0)) throw ConfigError(fmt::format("temperature must be positive, got {}", tau));
  return ops::scale(ops::matmul(classes.embeddings, x), 1.0 / tau);
}

Tensor predict(const Tensor& x, const ClassPromptSet& classes, double tau) {
  return ops::softmax(logits(x, classes, tau), 0);
}

Tensor loss_uni(const Tensor& probs, std::size_t label) {
  return ops::scale(ops::log(ops::pick(probs, label), 1e-30), -1.0);
}

Tensor loss_uni(std::span<const Tensor> probs, std::span<const std::size_t> labels) {
  if (probs.empty() || probs.size() != labels.size()) throw Error("loss_uni: batch size mismatch");
  std::vector<Tensor> terms;
  terms.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) terms.push_back(loss_uni(probs[i], labels[i]));
  return ops::scale(ops::add_n(terms), 1.0 / static_cast<double>(terms.size()));
}

Tensor loss_multi(const Tensor& logits, std::span<const std::size_t> label_set) {
  if (logits.numel() == 0) throw ConfigError("loss_multi: empty class list");
  std::vector<double> targets(logits.numel(), 0.0);
  for (auto k : label_set) {
    if (k >= targets.size()) throw Error(fmt::format("loss_multi: label {} outside {} classes", k, targets.size()));
    targets[k] = 1.0;
  }
  return ops::bce_with_logits(logits, targets);
}

Metrics metrics(std::span<const std::vector<double>> scores, std::span<const std::vector<std::size_t>> truth,
                Task task) {
  if (scores.empty()) throw Error("metrics: empty evaluation set");
  if (scores.size() != truth.size()) throw Error("metrics: predictions and truth differ in length");
  const std::size_t K = scores[0].size();
  std::vector<std::size_t> tp(K, 0), fp(K, 0), fn(K, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    if (s.size() != K) throw Error("metrics: ragged score vectors");
    std::vector<bool> predicted(K, false), actual(K, false);
    for (auto k : truth[i]) {
      if (k >= K) throw Error(fmt::format("metrics: label {} outside {} classes", k, K));
      actual[k] = true;
    }
    if (task == Task::uni_label) {
      const auto best = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
      predicted[best] = true;
      if (!truth[i].empty() && best == truth[i][0]) ++correct;
    } else {
      for (std::size_t k = 0; k < K; ++k) predicted[k] = 1.0 / (1.0 + std::exp(-s[k])) >= 0.5;
      if (predicted == actual) ++correct;
    }
    for (std::size_t k = 0; k < K; ++k) {
      if (predicted[k] && actual[k]) ++tp[k];
      else if (predicted[k]) ++fp[k];
      else if (actual[k]) ++fn[k];
    }
  }
  auto f1 = [](std::size_t t, std::size_t p, std::size_t n) {
    const std::size_t denom = 2 * t + p + n;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(t) / static_cast<double>(denom);
  };
  Metrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());
  std::size_t TP = 0, FP = 0, FN = 0;
  double macro = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    TP += tp[k];
    FP += fp[k];
    FN += fn[k];
    macro += f1(tp[k], fp[k], fn[k]);
  }
  m.f1_micro = f1(TP, FP, FN);
  m.f1_macro = macro / static_cast<double>(K);
  return m;
}

}  // namespace mitp::classifier
