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

#include "mitp/harness/census.hpp"

#include <fmt/format.h>

#include "mitp/numerics/error.hpp"

namespace mitp::harness {

namespace {

constexpr ParamGroup kGroups[] = {ParamGroup::backbone, ParamGroup::prompt_bank, ParamGroup::memory_hub,
                                  ParamGroup::classifier};

std::size_t mlp(std::size_t in, std::size_t h, std::size_t out) { return TwoLayerMlp::parameter_count(in, h, out); }

std::size_t block_count(std::size_t d, std::size_t ratio) {
  const std::size_t m = d * ratio;
  return 4 * d                  // two layer norms
         + d * 3 * d + 3 * d    // qkv
         + d * d + d            // attention output
         + d * m + m + m * d + d;  // MLP
}

void total_up(Census& c) {
  c.trainable_total = c.frozen_total = 0;
  for (const auto& g : c.groups) {
    c.trainable_total += g.trainable;
    c.frozen_total += g.frozen;
  }
}

}  // namespace

double Census::trainable_fraction() const {
  return total() == 0 ? 0.0 : static_cast<double>(trainable_total) / static_cast<double>(total());
}

std::size_t backbone_parameter_count(const encoder::EncoderConfig& e) {
  const std::size_t vision = e.raw_dim * e.d_v + e.d_v   // patch embedding
                             + e.d_v                     // class token
                             + (e.n_patches + 1) * e.d_v  // positions
                             + e.num_layers * block_count(e.d_v, e.mlp_ratio) + 2 * e.d_v + e.d_v * e.d_joint;
  const std::size_t text = e.vocab_size * e.d_t + e.n_text_tokens * e.d_t +
                           e.num_layers * block_count(e.d_t, e.mlp_ratio) + 2 * e.d_t + e.d_t * e.d_joint;
  return vision + text;
}

Census enumerate_census(Model& model) {
  Census c;
  for (auto g : kGroups) {
    auto& slot = c.groups[static_cast<std::size_t>(g)];
    for (const Parameter* p : model.parameters(g)) (p->frozen ? slot.frozen : slot.trainable) += p->count();
  }
  total_up(c);
  return c;
}

Census closed_form_census(const RunConfig& config, bool full_finetune) {
  const auto& e = config.encoder;
  const std::size_t L = config.prompt_length;
  const std::size_t h = config.effective_hub_hidden();
  Census c;
  auto& backbone = c.groups[static_cast<std::size_t>(ParamGroup::backbone)];
  (full_finetune ? backbone.trainable : backbone.frozen) = backbone_parameter_count(e);
  auto& bank = c.groups[static_cast<std::size_t>(ParamGroup::prompt_bank)];
  auto& hub = c.groups[static_cast<std::size_t>(ParamGroup::memory_hub)];
  const std::size_t bank_count = L * e.d_t + e.d_t * e.d_v + e.d_v;
  switch (config.variant) {
    case Variant::baseline:
      break;
    case Variant::mitp_full:
      bank.trainable = bank_count;
      hub.trainable = mlp(e.d_t, h, e.d_v) + mlp(e.d_v, h, e.d_t) + mlp(e.d_v, h, e.d_v) + mlp(e.d_t, h, e.d_t);
      break;
    case Variant::naive_mlp_interaction:
      bank.trainable = bank_count;
      hub.trainable =
          mlp(e.d_t, h, e.d_v) + mlp(e.d_v, h, e.d_t) + mlp(2 * e.d_v, h, e.d_v) + mlp(2 * e.d_t, h, e.d_t);
      break;
    case Variant::prompts_only:
      bank.trainable = bank_count;
      break;
    case Variant::deep_prompt_tuning:
      bank.trainable = config.interaction_layers.size() * L * (e.d_v + e.d_t);
      break;
  }
  total_up(c);
  return c;
}

Census param_census(Model& model) {
  const Census counted = enumerate_census(model);
  const Census expected = closed_form_census(model.config(), model.full_finetune());
  for (auto g : kGroups) {
    const auto& a = counted.group(g);
    const auto& b = expected.group(g);
    if (!(a == b)) {
      throw Error(fmt::format("census mismatch in group {}: enumerated {} trainable / {} frozen, closed form {} / {}",
                              to_string(g), a.trainable, a.frozen, b.trainable, b.frozen));
    }
  }
  return counted;
}

std::string format_census(const Census& c) {
  std::string out = fmt::format("{:<12} {:>12} {:>12}\n", "group", "trainable", "frozen");
  for (auto g : kGroups) {
    out += fmt::format("{:<12} {:>12} {:>12}\n", to_string(g), c.group(g).trainable, c.group(g).frozen);
  }
  out += fmt::format("{:<12} {:>12} {:>12}\n", "total", c.trainable_total, c.frozen_total);
  out += fmt::format("trainable fraction: {:.4f}%\n", 100.0 * c.trainable_fraction());
  return out;
}

}  // namespace mitp::harness
