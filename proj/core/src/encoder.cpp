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

#include "mitp/encoder.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mitp/numerics/error.hpp"
#include "mitp/numerics/ops.hpp"
#include "mitp/numerics/param_io.hpp"

namespace mitp::encoder {

namespace {

constexpr bool kFrozen = true;

Tensor linear(const Tensor& x, const Parameter& w, const Parameter& b) {
  return ops::add_bias(ops::matmul(x, w.tensor), b.tensor);
}

}  // namespace

void EncoderConfig::validate(std::span<const std::size_t> interaction_layers) const {
  const std::pair<const char*, std::size_t> fields[] = {
      {"num_layers", num_layers}, {"d_v", d_v},         {"d_t", d_t},
      {"num_heads", num_heads},   {"n_patches", n_patches}, {"raw_dim", raw_dim},
      {"n_text_tokens", n_text_tokens}, {"vocab_size", vocab_size}, {"d_joint", d_joint},
      {"mlp_ratio", mlp_ratio}};
  for (const auto& [name, value] : fields) {
    if (value == 0) throw ConfigError(fmt::format("encoder.{} must be positive", name));
  }
  if (d_v % num_heads != 0 || d_t % num_heads != 0) {
    throw ConfigError(fmt::format("num_heads {} must divide d_v {} and d_t {}", num_heads, d_v, d_t));
  }
  layer_roles(num_layers, interaction_layers);
}

const char* to_string(Modality m) { return m == Modality::vision ? "vision" : "text"; }

std::vector<LayerRole> layer_roles(std::size_t num_layers, std::span<const std::size_t> interaction_layers) {
  std::vector<LayerRole> roles(num_layers, LayerRole::extraction);
  for (std::size_t i = 0; i < interaction_layers.size(); ++i) {
    const auto l = interaction_layers[i];
    if (l >= num_layers) {
      throw ConfigError(fmt::format("interaction layer {} outside [0, {})", l, num_layers));
    }
    if (i > 0 && l <= interaction_layers[i - 1]) {
      throw ConfigError("interaction layers must be strictly increasing");
    }
    if (i > 1 && l - interaction_layers[i - 1] != interaction_layers[1] - interaction_layers[0]) {
      throw ConfigError("interaction layers must be equally spaced");
    }
    roles[l] = LayerRole::interaction;
  }
  return roles;
}

Branch::Branch(Modality modality, const EncoderConfig& config, Rng rng, double init_std)
    : modality_(modality),
      width_(modality == Modality::vision ? config.d_v : config.d_t),
      heads_(config.num_heads),
      n_positions_(modality == Modality::vision ? config.n_patches + 1 : config.n_text_tokens),
      prefix_(to_string(modality)) {
  const std::size_t d = width_;
  const std::size_t hidden = config.mlp_ratio * d;
  auto name = [&](const std::string& s) { return prefix_ + "." + s; };
  if (modality == Modality::vision) {
    patch_weight_ = Parameter::gaussian(name("patch_embed.weight"), {config.raw_dim, d}, rng, init_std, kFrozen);
    patch_bias_ = Parameter::constant(name("patch_embed.bias"), {d}, 0.0, kFrozen);
    class_token_ = Parameter::gaussian(name("class_token"), {d}, rng, init_std, kFrozen);
  } else {
    token_table_ = Parameter::gaussian(name("token_embed"), {config.vocab_size, d}, rng, init_std, kFrozen);
  }
  positions_ = Parameter::gaussian(name("positions"), {n_positions_, d}, rng, init_std, kFrozen);
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    auto lname = [&](const char* s) { return name(fmt::format("layers.{}.{}", l, s)); };
    LayerWeights w;
    w.ln1_gamma = Parameter::constant(lname("ln1.gamma"), {d}, 1.0, kFrozen);
    w.ln1_beta = Parameter::constant(lname("ln1.beta"), {d}, 0.0, kFrozen);
    w.qkv_weight = Parameter::gaussian(lname("attn.qkv.weight"), {d, 3 * d}, rng, init_std, kFrozen);
    w.qkv_bias = Parameter::constant(lname("attn.qkv.bias"), {3 * d}, 0.0, kFrozen);
    w.out_weight = Parameter::gaussian(lname("attn.out.weight"), {d, d}, rng, init_std, kFrozen);
    w.out_bias = Parameter::constant(lname("attn.out.bias"), {d}, 0.0, kFrozen);
    w.ln2_gamma = Parameter::constant(lname("ln2.gamma"), {d}, 1.0, kFrozen);
    w.ln2_beta = Parameter::constant(lname("ln2.beta"), {d}, 0.0, kFrozen);
    w.fc1_weight = Parameter::gaussian(lname("mlp.fc1.weight"), {d, hidden}, rng, init_std, kFrozen);
    w.fc1_bias = Parameter::constant(lname("mlp.fc1.bias"), {hidden}, 0.0, kFrozen);
    w.fc2_weight = Parameter::gaussian(lname("mlp.fc2.weight"), {hidden, d}, rng, init_std, kFrozen);
    w.fc2_bias = Parameter::constant(lname("mlp.fc2.bias"), {d}, 0.0, kFrozen);
    layers_.push_back(std::move(w));
  }
  final_gamma_ = Parameter::constant(name("final_ln.gamma"), {d}, 1.0, kFrozen);
  final_beta_ = Parameter::constant(name("final_ln.beta"), {d}, 0.0, kFrozen);
  pool_weight_ = Parameter::gaussian(name("pool.weight"), {d, config.d_joint}, rng, init_std, kFrozen);
}

Tensor Branch::embed_image(const Tensor& patches) const {
  if (modality_ != Modality::vision) throw Error("embed_image called on the text branch");
  const std::size_t raw_dim = patch_weight_.tensor.rows();
  if (patches.rank() != 2 || patches.rows() != n_positions_ - 1 || patches.cols() != raw_dim) {
    throw ShapeError(fmt::format("embed_image: expected patches [{}x{}], got {}", n_positions_ - 1, raw_dim,
                                 shape_str(patches.shape())));
  }
  Tensor tokens = linear(patches, patch_weight_, patch_bias_);
  Tensor cls = ops::reshape(class_token_.tensor, {1, width_});
  return ops::add(ops::concat_rows(cls, tokens), positions_.tensor);
}

Tensor Branch::embed_text(std::span<const std::size_t> token_ids) const {
  if (modality_ != Modality::text) throw Error("embed_text called on the vision branch");
  const std::size_t vocab = token_table_.tensor.rows();
  if (token_ids.empty() || token_ids.size() > n_positions_) {
    throw ShapeError(fmt::format("embed_text: expected 1..{} tokens, got {}", n_positions_, token_ids.size()));
  }
  for (std::size_t i = 0; i < token_ids.size(); ++i) {
    if (token_ids[i] >= vocab) {
      throw ShapeError(fmt::format("embed_text: token id {} at index {} outside vocabulary of {}", token_ids[i], i,
                                   vocab));
    }
  }
  Tensor tokens = ops::gather_rows(token_table_.tensor, token_ids);
  Tensor pos = token_ids.size() == n_positions_ ? positions_.tensor
                                                : ops::slice_rows(positions_.tensor, 0, token_ids.size());
  return ops::add(tokens, pos);
}

Tensor Branch::layer_forward(std::size_t layer_idx, const Tensor& seq) const {
  if (layer_idx >= layers_.size()) throw Error(fmt::format("layer index {} out of range", layer_idx));
  if (seq.rank() != 2 || seq.cols() != width_) {
    throw ShapeError(fmt::format("layer_forward: {} branch expects width {}, got {}", prefix_, width_,
                                 shape_str(seq.shape())));
  }
  const auto& w = layers_[layer_idx];
  const std::size_t d = width_;
  const std::size_t hd = d / heads_;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));

  Tensor h = ops::layer_norm(seq, w.ln1_gamma.tensor, w.ln1_beta.tensor);
  Tensor qkv = linear(h, w.qkv_weight, w.qkv_bias);
  std::vector<Tensor> heads;
  heads.reserve(heads_);
  for (std::size_t i = 0; i < heads_; ++i) {
    Tensor q = ops::slice_cols(qkv, i * hd, (i + 1) * hd);
    Tensor k = ops::slice_cols(qkv, d + i * hd, d + (i + 1) * hd);
    Tensor v = ops::slice_cols(qkv, 2 * d + i * hd, 2 * d + (i + 1) * hd);
    Tensor scores = ops::scale(ops::matmul(q, ops::transpose(k)), inv_sqrt);
    heads.push_back(ops::matmul(ops::softmax(scores, 1), v));
  }
  Tensor attn = linear(ops::concat_cols(heads), w.out_weight, w.out_bias);
  Tensor x = ops::add(seq, attn);
  Tensor m = ops::layer_norm(x, w.ln2_gamma.tensor, w.ln2_beta.tensor);
  m = linear(ops::gelu(linear(m, w.fc1_weight, w.fc1_bias)), w.fc2_weight, w.fc2_bias);
  return ops::add(x, m);
}

Tensor Branch::run_layers(const Tensor& seq, std::size_t begin, std::size_t end) const {
  Tensor x = seq;
  for (std::size_t l = begin; l < end; ++l) x = layer_forward(l, x);
  return x;
}

Tensor Branch::pool(const Tensor& features) const {
  const std::size_t slot = modality_ == Modality::vision ? 0 : features.rows() - 1;
  Tensor token = ops::layer_norm(ops::row(features, slot), final_gamma_.tensor, final_beta_.tensor);
  return ops::normalize(ops::matmul(token, pool_weight_.tensor));
}

BranchOutput Branch::forward(const Tensor& tokens, const PromptSchedule& schedule,
                             std::span<const std::size_t> interaction_layers) const {
  const auto roles = layer_roles(layers_.size(), interaction_layers);
  for (const auto& [layer, prompt] : schedule) {
    if (layer >= roles.size() || roles[layer] != LayerRole::interaction) {
      throw Error(fmt::format("prompt scheduled at extraction layer {}", layer));
    }
    if (prompt.rank() != 2 || prompt.cols() != width_) {
      throw ShapeError(fmt::format("prompt at layer {} has shape {}, branch width is {}", layer,
                                   shape_str(prompt.shape()), width_));
    }
  }
  BranchOutput out;
  Tensor x = tokens;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto it = schedule.find(l);
    if (it == schedule.end()) {
      x = layer_forward(l, x);
      continue;
    }
    const std::size_t L = it->second.rows();
    const std::size_t n = x.rows();
    Tensor y = layer_forward(l, ops::concat_rows(it->second, x));
    out.prompt_outputs.emplace(l, ops::slice_rows(y, 0, L));
    x = ops::slice_rows(y, L, L + n);
  }
  out.pooled = pool(x);
  out.features = x;
  return out;
}

std::vector<Parameter*> Branch::parameters() {
  std::vector<Parameter*> out;
  for (Parameter* p : {&patch_weight_, &patch_bias_, &class_token_, &token_table_, &positions_}) {
    if (p->tensor.defined()) out.push_back(p);
  }
  for (auto& w : layers_) {
    for (Parameter* p : {&w.ln1_gamma, &w.ln1_beta, &w.qkv_weight, &w.qkv_bias, &w.out_weight, &w.out_bias,
                         &w.ln2_gamma, &w.ln2_beta, &w.fc1_weight, &w.fc1_bias, &w.fc2_weight, &w.fc2_bias}) {
      out.push_back(p);
    }
  }
  out.push_back(&final_gamma_);
  out.push_back(&final_beta_);
  out.push_back(&pool_weight_);
  return out;
}

std::vector<const Parameter*> Branch::parameters() const {
  auto mut = const_cast<Branch*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

DualEncoder::DualEncoder(const EncoderConfig& config, std::uint64_t seed)
    : config_(config),
      vision_(Modality::vision, config, Rng(seed).fork(1)),
      text_(Modality::text, config, Rng(seed).fork(2)) {
  config_.validate();
}

std::vector<Parameter*> DualEncoder::parameters() {
  auto out = vision_.parameters();
  auto t = text_.parameters();
  out.insert(out.end(), t.begin(), t.end());
  return out;
}

std::vector<const Parameter*> DualEncoder::parameters() const {
  auto mut = const_cast<DualEncoder*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

void DualEncoder::set_frozen(bool frozen) {
  for (auto* p : parameters()) p->set_frozen(frozen);
}

void DualEncoder::load_weights(const std::filesystem::path& path) {
  const ParamMap entries = read_param_file(path);
  auto params = parameters();
  if (entries.size() != params.size()) {
    throw IoError(fmt::format("{}: expected {} encoder parameters, found {}", path.string(), params.size(),
                              entries.size()));
  }
  for (const auto* p : params) {
    auto it = entries.find(p->name);
    if (it == entries.end()) throw IoError(fmt::format("{}: missing parameter '{}'", path.string(), p->name));
    if (it->second.shape != p->tensor.shape()) {
      throw ShapeError(fmt::format("{}: parameter '{}' has shape {}, expected {}", path.string(), p->name,
                                   shape_str(it->second.shape), shape_str(p->tensor.shape())));
    }
  }
  for (auto* p : params) {
    const auto& src = entries.at(p->name).values;
    std::copy(src.begin(), src.end(), p->tensor.mutable_values().begin());
  }
}

void DualEncoder::save_weights(const std::filesystem::path& path) const {
  ParamMap entries;
  for (const auto* p : parameters()) {
    entries[p->name] = NamedArray{p->tensor.shape(), {p->tensor.values().begin(), p->tensor.values().end()}};
  }
  write_param_file(path, entries);
}

}  // namespace mitp::encoder
