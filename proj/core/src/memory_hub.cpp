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

#include "mitp/memory_hub.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "mitp/numerics/error.hpp"
#include "mitp/numerics/ops.hpp"

namespace mitp {

SimilarityType parse_similarity(std::string_view name) {
  if (name == "cosine") return SimilarityType::cosine;
  if (name == "mmd") return SimilarityType::mmd;
  if (name == "cov-pearsonr") return SimilarityType::cov_pearsonr;
  throw ConfigError(fmt::format("unknown similarity '{}' (expected cosine, mmd or cov-pearsonr)", name));
}

const char* to_string(SimilarityType type) {
  switch (type) {
    case SimilarityType::cosine: return "cosine";
    case SimilarityType::mmd: return "mmd";
    case SimilarityType::cov_pearsonr: return "cov-pearsonr";
  }
  return "?";
}

TwoLayerMlp::TwoLayerMlp(const std::string& name, std::size_t in, std::size_t hidden, std::size_t out, Rng& rng,
                         double stddev)
    : in_(in), out_(out) {
  w1_ = Parameter::gaussian(name + ".fc1.weight", {in, hidden}, rng, stddev, false);
  b1_ = Parameter::constant(name + ".fc1.bias", {hidden}, 0.0, false);
  w2_ = Parameter::gaussian(name + ".fc2.weight", {hidden, out}, rng, stddev, false);
  b2_ = Parameter::constant(name + ".fc2.bias", {out}, 0.0, false);
}

Tensor TwoLayerMlp::forward(const Tensor& x) const {
  if (x.rank() != 2 || x.cols() != in_) {
    throw ShapeError(fmt::format("mlp: expected [L x {}], got {}", in_, shape_str(x.shape())));
  }
  Tensor h = ops::relu(ops::add_bias(ops::matmul(x, w1_.tensor), b1_.tensor));
  return ops::add_bias(ops::matmul(h, w2_.tensor), b2_.tensor);
}

std::vector<Parameter*> TwoLayerMlp::parameters() { return {&w1_, &b1_, &w2_, &b2_}; }

Tensor similarity_scores(const Tensor& a, const Tensor& b, SimilarityType type, SimilarityRole role) {
  switch (type) {
    case SimilarityType::cosine: return ops::row_cosine(a, b);
    case SimilarityType::mmd: return ops::row_mmd_similarity(a, b);
    case SimilarityType::cov_pearsonr:
      return role == SimilarityRole::intra ? ops::row_covariance(a, b) : ops::row_pearson(a, b);
  }
  throw Error("unreachable similarity type");
}

Activation activation(const Mapping& map) { return {ops::softmax(map.intra, 0), ops::softmax(map.inter, 0)}; }

Tensor generate_next(const Tensor& p, const Tensor& p_tilde, const Tensor& z, const Tensor& r) {
  if (p.shape() != p_tilde.shape()) {
    throw ShapeError(fmt::format("generate_next: prompt {} vs projected {}", shape_str(p.shape()),
                                 shape_str(p_tilde.shape())));
  }
  Tensor cross_gate = ops::mul(ops::affine(z, -1.0, 1.0), r);
  return ops::add(ops::scale_rows(p, z), ops::scale_rows(p_tilde, cross_gate));
}

MemoryHub::MemoryHub(std::size_t d_v, std::size_t d_t, std::size_t hidden, SimilarityType similarity, Rng& rng,
                     double stddev)
    : d_v_(d_v), d_t_(d_t), hidden_(hidden), similarity_(similarity) {
  if (hidden == 0) throw ConfigError("memory hub hidden width must be positive");
  cross_t2v_ = TwoLayerMlp("memory_hub.cross_t2v", d_t, hidden, d_v, rng, stddev);
  cross_v2t_ = TwoLayerMlp("memory_hub.cross_v2t", d_v, hidden, d_t, rng, stddev);
  intra_v_ = TwoLayerMlp("memory_hub.intra_v", d_v, hidden, d_v, rng, stddev);
  intra_t_ = TwoLayerMlp("memory_hub.intra_t", d_t, hidden, d_t, rng, stddev);
}

Tensor MemoryHub::cross_project(const Tensor& source, Direction direction) const {
  return direction == Direction::text_to_vision ? cross_t2v_.forward(source) : cross_v2t_.forward(source);
}

Mapping MemoryHub::mapping(const Tensor& p, const Tensor& p_tilde, encoder::Modality modality) const {
  const TwoLayerMlp& intra = modality == encoder::Modality::vision ? intra_v_ : intra_t_;
  Tensor self_scores = similarity_scores(intra.forward(p), p, similarity_, SimilarityRole::intra);
  Tensor cross_scores = similarity_scores(p, p_tilde, similarity_, SimilarityRole::inter);
  return {ops::relu(self_scores), ops::relu(cross_scores)};
}

PromptPair MemoryHub::step(const Tensor& p_v, const Tensor& p_t) const {
  if (p_v.rank() != 2 || p_t.rank() != 2 || p_v.rows() != p_t.rows() || p_v.cols() != d_v_ ||
      p_t.cols() != d_t_) {
    throw ShapeError(fmt::format("hub_step: prompts {} and {} do not match widths ({}, {})", shape_str(p_v.shape()),
                                 shape_str(p_t.shape()), d_v_, d_t_));
  }
  Tensor t_in_v = cross_project(p_t, Direction::text_to_vision);
  Tensor v_in_t = cross_project(p_v, Direction::vision_to_text);
  const Activation act_v = activation(mapping(p_v, t_in_v, encoder::Modality::vision));
  const Activation act_t = activation(mapping(p_t, v_in_t, encoder::Modality::text));
  return {generate_next(p_v, t_in_v, act_v.z, act_v.r), generate_next(p_t, v_in_t, act_t.z, act_t.r)};
}

std::vector<Parameter*> MemoryHub::parameters() {
  std::vector<Parameter*> out;
  for (TwoLayerMlp* m : {&cross_t2v_, &cross_v2t_, &intra_v_, &intra_t_}) {
    auto p = m->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::size_t MemoryHub::parameter_count(std::size_t d_v, std::size_t d_t, std::size_t hidden) {
  return TwoLayerMlp::parameter_count(d_t, hidden, d_v) + TwoLayerMlp::parameter_count(d_v, hidden, d_t) +
         TwoLayerMlp::parameter_count(d_v, hidden, d_v) + TwoLayerMlp::parameter_count(d_t, hidden, d_t);
}

std::size_t MemoryHub::default_hidden(std::size_t d_v, std::size_t d_t) {
  return std::max<std::size_t>(1, std::min(d_v, d_t) / 2);
}

}  // namespace mitp
