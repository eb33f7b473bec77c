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

#include "mitp/harness/model.hpp"

#include <fmt/format.h>

#include "mitp/numerics/error.hpp"
#include "mitp/numerics/ops.hpp"

namespace mitp::harness {

const char* to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::backbone: return "backbone";
    case ParamGroup::prompt_bank: return "prompt_bank";
    case ParamGroup::memory_hub: return "memory_hub";
    case ParamGroup::classifier: return "classifier";
  }
  return "?";
}

namespace {

encoder::DualEncoder make_backbone(const RunConfig& config) {
  config.validate();
  encoder::DualEncoder enc(config.encoder, config.backbone_seed);
  if (!config.encoder_weights.empty()) enc.load_weights(config.encoder_weights);
  return enc;
}

}  // namespace

Model::Model(const RunConfig& config)
    : config_(config),
      backbone_(make_backbone(config)),
      classes_(classifier::build_class_embeddings(config.effective_class_prompts(), backbone_.text())) {
  const auto& e = config_.encoder;
  const std::size_t L = config_.prompt_length;
  const std::size_t h = config_.effective_hub_hidden();
  const double sd = config_.init_std;
  const Rng root(config_.seed);
  switch (config_.variant) {
    case Variant::baseline:
      break;
    case Variant::mitp_full: {
      Rng rb = root.fork(10), rh = root.fork(11);
      bank_ = PromptBank::init(rb, L, e.d_t, e.d_v, sd);
      hub_.emplace(e.d_v, e.d_t, h, config_.similarity, rh, sd);
      break;
    }
    case Variant::naive_mlp_interaction: {
      Rng rb = root.fork(10), rn = root.fork(12);
      bank_ = PromptBank::init(rb, L, e.d_t, e.d_v, sd);
      naive_ = NaiveInteraction{TwoLayerMlp("naive.cross_t2v", e.d_t, h, e.d_v, rn, sd),
                                TwoLayerMlp("naive.cross_v2t", e.d_v, h, e.d_t, rn, sd),
                                TwoLayerMlp("naive.fuse_v", 2 * e.d_v, h, e.d_v, rn, sd),
                                TwoLayerMlp("naive.fuse_t", 2 * e.d_t, h, e.d_t, rn, sd)};
      break;
    }
    case Variant::prompts_only: {
      Rng rb = root.fork(10);
      bank_ = PromptBank::init(rb, L, e.d_t, e.d_v, sd);
      break;
    }
    case Variant::deep_prompt_tuning: {
      Rng rd = root.fork(13);
      for (std::size_t i = 0; i < config_.interaction_layers.size(); ++i) {
        const std::size_t l = config_.interaction_layers[i];
        deep_vision_.push_back(Parameter::gaussian(fmt::format("deep_prompt.vision.{}", l), {L, e.d_v}, rd, sd, false));
        deep_text_.push_back(Parameter::gaussian(fmt::format("deep_prompt.text.{}", l), {L, e.d_t}, rd, sd, false));
      }
      break;
    }
  }
}

void Model::set_full_finetune(bool on) {
  full_finetune_ = on;
  backbone_.set_frozen(!on);
}

bool Model::uses_text_tower() const noexcept {
  const bool exchanges = config_.variant == Variant::mitp_full || config_.variant == Variant::naive_mlp_interaction;
  return exchanges && config_.hub_input == HubInput::post && config_.interaction_layers.size() > 1;
}

PreparedExample Model::prepare(const data::Example& example) const {
  PreparedExample out;
  out.source = &example;
  if (full_finetune_) return out;
  const auto& e = config_.encoder;
  const std::size_t first = config_.interaction_layers.empty() ? e.num_layers : config_.interaction_layers.front();
  const auto& vis = backbone_.vision();
  out.vision = vis.run_layers(vis.embed_image(Tensor::from({e.n_patches, e.raw_dim}, example.patches)), 0, first)
                   .detach();
  if (uses_text_tower()) {
    const auto& txt = backbone_.text();
    out.text = txt.run_layers(txt.embed_text(example.tokens), 0, first).detach();
  }
  out.start_layer = first;
  return out;
}

PromptPair Model::initial_prompts() const {
  if (config_.variant == Variant::deep_prompt_tuning) return {deep_vision_.front().tensor, deep_text_.front().tensor};
  const Tensor& pt = bank_->text_prompt();
  return {bank_->project_text_to_vision(pt), pt};
}

PromptPair Model::next_prompts(std::size_t step, const PromptPair& fed, const PromptPair& produced) const {
  const PromptPair& src = config_.hub_input == HubInput::post ? produced : fed;
  switch (config_.variant) {
    case Variant::mitp_full:
      return hub_->step(src.vision, src.text);
    case Variant::naive_mlp_interaction: {
      const Tensor v_parts[] = {src.vision, naive_->cross_t2v.forward(src.text)};
      const Tensor t_parts[] = {src.text, naive_->cross_v2t.forward(src.vision)};
      return {naive_->fuse_v.forward(ops::concat_cols(v_parts)), naive_->fuse_t.forward(ops::concat_cols(t_parts))};
    }
    case Variant::prompts_only:
      return {produced.vision, Tensor()};
    case Variant::deep_prompt_tuning:
      return {deep_vision_[step + 1].tensor, deep_text_[step + 1].tensor};
    case Variant::baseline:
      break;
  }
  throw Error("baseline has no prompt transitions");
}

Tensor Model::embed(const PreparedExample& example) const {
  const auto& e = config_.encoder;
  const auto& layers = config_.interaction_layers;
  const auto& vis = backbone_.vision();
  const auto& txt = backbone_.text();
  const bool text = uses_text_tower();

  Tensor v = example.vision;
  Tensor t = example.text;
  if (!v.defined()) {
    v = vis.embed_image(Tensor::from({e.n_patches, e.raw_dim}, example.source->patches));
    if (text) t = txt.embed_text(example.source->tokens);
  }
  std::size_t cur = example.start_layer;
  if (layers.empty()) return vis.pool(vis.run_layers(v, cur, e.num_layers));

  const std::size_t L = config_.prompt_length;
  PromptPair fed = initial_prompts();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::size_t l = layers[i];
    const bool last = i + 1 == layers.size();
    v = vis.run_layers(v, cur, l);
    const Tensor yv = vis.layer_forward(l, ops::concat_rows(fed.vision, v));
    PromptPair produced{ops::slice_rows(yv, 0, L), Tensor()};
    v = ops::slice_rows(yv, L, yv.rows());
    if (text && !last) {
      t = txt.run_layers(t, cur, l);
      const Tensor yt = txt.layer_forward(l, ops::concat_rows(fed.text, t));
      produced.text = ops::slice_rows(yt, 0, L);
      t = ops::slice_rows(yt, L, yt.rows());
    }
    if (!last) fed = next_prompts(i, fed, produced);
    cur = l + 1;
  }
  return vis.pool(vis.run_layers(v, cur, e.num_layers));
}

Tensor Model::class_embeddings_in_graph() const {
  const auto& txt = backbone_.text();
  Tensor out;
  for (const auto& prompt : classes_.prompts) {
    const Tensor z = txt.pool(txt.run_layers(txt.embed_text(prompt), 0, config_.encoder.num_layers));
    const Tensor row = ops::reshape(z, {1, z.numel()});
    out = out.defined() ? ops::concat_rows(out, row) : row;
  }
  return out;
}

Tensor Model::logits(const PreparedExample& example) const {
  const Tensor x = embed(example);
  if (!full_finetune_) return classifier::logits(x, classes_, config_.tau);
  classifier::ClassPromptSet live{classes_.prompts, class_embeddings_in_graph()};
  return classifier::logits(x, live, config_.tau);
}

Tensor Model::loss(const PreparedExample& example, bool multi_label) const {
  const Tensor z = logits(example);
  const auto& labels = example.source->labels;
  if (multi_label) return classifier::loss_multi(z, labels);
  return classifier::loss_uni(ops::softmax(z, 0), labels.front());
}

std::vector<Parameter*> Model::parameters(ParamGroup group) {
  std::vector<Parameter*> out;
  auto append = [&out](std::vector<Parameter*> more) { out.insert(out.end(), more.begin(), more.end()); };
  switch (group) {
    case ParamGroup::backbone:
      append(backbone_.parameters());
      break;
    case ParamGroup::prompt_bank:
      if (bank_) append(bank_->parameters());
      for (auto& p : deep_vision_) out.push_back(&p);
      for (auto& p : deep_text_) out.push_back(&p);
      break;
    case ParamGroup::memory_hub:
      if (hub_) append(hub_->parameters());
      if (naive_) {
        append(naive_->cross_t2v.parameters());
        append(naive_->cross_v2t.parameters());
        append(naive_->fuse_v.parameters());
        append(naive_->fuse_t.parameters());
      }
      break;
    case ParamGroup::classifier:
      break;  // class embeddings are constants; tau is fixed
  }
  return out;
}

std::vector<Parameter*> Model::all_parameters() {
  std::vector<Parameter*> out;
  for (auto g : {ParamGroup::backbone, ParamGroup::prompt_bank, ParamGroup::memory_hub, ParamGroup::classifier}) {
    auto part = parameters(g);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<Parameter*> Model::trainable_parameters() {
  std::vector<Parameter*> out;
  for (Parameter* p : all_parameters()) {
    if (!p->frozen) out.push_back(p);
  }
  return out;
}

}  // namespace mitp::harness
