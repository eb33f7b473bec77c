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
#include <string>
#include <string_view>
#include <vector>

#include "mitp/encoder.hpp"
#include "mitp/numerics/parameter.hpp"
#include "mitp/numerics/rng.hpp"

namespace mitp {

enum class SimilarityType { cosine, mmd, cov_pearsonr };

// Config spellings: "cosine" | "mmd" | "cov-pearsonr".
SimilarityType parse_similarity(std::string_view name);
const char* to_string(SimilarityType type);

// Which correspondence a score measures. Only cov_pearsonr distinguishes
// them: covariance within a modality, Pearson's r across modalities.
enum class SimilarityRole { intra, inter };

// Linear -> ReLU -> linear, applied row-wise.
class TwoLayerMlp {
 public:
  TwoLayerMlp() = default;
  TwoLayerMlp(const std::string& name, std::size_t in, std::size_t hidden, std::size_t out, Rng& rng,
              double stddev = 0.02);

  std::size_t in_width() const noexcept { return in_; }
  std::size_t out_width() const noexcept { return out_; }
  Tensor forward(const Tensor& x) const;
  std::vector<Parameter*> parameters();

  static std::size_t parameter_count(std::size_t in, std::size_t hidden, std::size_t out) {
    return in * hidden + hidden + hidden * out + out;
  }

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  Parameter w1_, b1_, w2_, b2_;
};

enum class Direction { text_to_vision, vision_to_text };

struct Mapping {
  Tensor intra;  // [L], >= 0
  Tensor inter;  // [L], >= 0
};

struct Activation {
  Tensor z;  // softmax of intra mapping, sums to 1
  Tensor r;  // softmax of inter mapping, sums to 1
};

struct PromptPair {
  Tensor vision;
  Tensor text;
};

// Per-row similarity of aligned [L, d] blocks -> [L].
Tensor similarity_scores(const Tensor& a, const Tensor& b, SimilarityType type,
                         SimilarityRole role = SimilarityRole::inter);

Activation activation(const Mapping& map);

// Row i: z_i * p[i] + (1 - z_i) * r_i * p_tilde[i].
Tensor generate_next(const Tensor& p, const Tensor& p_tilde, const Tensor& z, const Tensor& r);

// Shared consolidation/activation unit. One instance serves every
// interaction layer, so its parameter count does not depend on how many
// layers interact.
class MemoryHub {
 public:
  MemoryHub(std::size_t d_v, std::size_t d_t, std::size_t hidden, SimilarityType similarity, Rng& rng,
            double stddev = 0.02);

  SimilarityType similarity() const noexcept { return similarity_; }
  std::size_t hidden() const noexcept { return hidden_; }

  Tensor cross_project(const Tensor& source, Direction direction) const;

  // map_intra = ReLU(sim(W p, p)), map_inter = ReLU(sim(p, p_tilde)) with W
  // the intra projection of `modality`.
  Mapping mapping(const Tensor& p, const Tensor& p_tilde, encoder::Modality modality) const;

  // Both outputs are computed from the same inputs.
  PromptPair step(const Tensor& p_v, const Tensor& p_t) const;

  std::vector<Parameter*> parameters();

  static std::size_t parameter_count(std::size_t d_v, std::size_t d_t, std::size_t hidden);

  // min(d_v, d_t) / 2, at least 1.
  static std::size_t default_hidden(std::size_t d_v, std::size_t d_t);

 private:
  std::size_t d_v_;
  std::size_t d_t_;
  std::size_t hidden_;
  SimilarityType similarity_;
  TwoLayerMlp cross_t2v_;
  TwoLayerMlp cross_v2t_;
  TwoLayerMlp intra_v_;
  TwoLayerMlp intra_t_;
};

}  // namespace mitp
