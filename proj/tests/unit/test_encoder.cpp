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

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mitp/encoder.hpp"
#include "mitp/numerics/error.hpp"
#include "mitp/numerics/ops.hpp"

using namespace mitp;
using namespace mitp::encoder;

namespace {

EncoderConfig small() {
  EncoderConfig c;
  c.num_layers = 3;
  c.d_v = 8;
  c.d_t = 6;
  c.num_heads = 2;
  c.n_patches = 4;
  c.raw_dim = 3;
  c.n_text_tokens = 5;
  c.vocab_size = 12;
  c.d_joint = 4;
  c.mlp_ratio = 2;
  return c;
}

Parameter* find(std::vector<Parameter*> params, const std::string& name) {
  for (auto* p : params) {
    if (p->name == name) return p;
  }
  return nullptr;
}

Tensor patches(const EncoderConfig& c, Rng& rng) {
  std::vector<double> v(c.n_patches * c.raw_dim);
  for (auto& x : v) x = rng.normal();
  return Tensor::from({c.n_patches, c.raw_dim}, v);
}

std::vector<double> vec(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TEST(EncoderConfig, Validation) {
  EncoderConfig c = small();
  EXPECT_NO_THROW(c.validate());
  c.num_heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small();
  c.d_joint = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small();
  const std::size_t beyond[] = {1, 3};
  EXPECT_THROW(c.validate(beyond), ConfigError);
  const std::size_t uneven[] = {0, 1, 3};
  c.num_layers = 4;
  EXPECT_THROW(c.validate(uneven), ConfigError);
  const std::size_t backwards[] = {2, 1};
  EXPECT_THROW(c.validate(backwards), ConfigError);
}

TEST(LayerRoles, InteractionAndExtraction) {
  const std::size_t layers[] = {1, 3};
  const auto roles = layer_roles(5, layers);
  const std::vector<LayerRole> want{LayerRole::extraction, LayerRole::interaction, LayerRole::extraction,
                                    LayerRole::interaction, LayerRole::extraction};
  EXPECT_EQ(roles, want);
}

TEST(Encoder, EmbedImageZeroPatchesIsolatesAdditiveTerms) {
  const EncoderConfig c = small();
  DualEncoder enc(c, 1);
  auto params = enc.vision().parameters();
  const Tensor out = enc.vision().embed_image(Tensor::zeros({c.n_patches, c.raw_dim}));
  const auto pos = vec(find(params, "vision.positions")->tensor);
  const auto cls = vec(find(params, "vision.class_token")->tensor);
  ASSERT_EQ(out.shape(), (Shape{c.n_patches + 1, c.d_v}));
  for (std::size_t r = 0; r <= c.n_patches; ++r)
    for (std::size_t k = 0; k < c.d_v; ++k) {
      const double want = pos[r * c.d_v + k] + (r == 0 ? cls[k] : 0.0);
      EXPECT_DOUBLE_EQ(out.at(r, k), want);
    }
}

TEST(Encoder, EmbedImageShapeAndDeterminism) {
  EncoderConfig c = small();
  c.n_patches = 16;
  c.d_v = 32;
  c.num_heads = 2;
  DualEncoder enc(c, 3);
  Rng rng(1);
  const Tensor p = patches(c, rng);
  const Tensor a = enc.vision().embed_image(p), b = enc.vision().embed_image(p);
  EXPECT_EQ(a.shape(), (Shape{17, 32}));
  EXPECT_EQ(vec(a), vec(b));
  EXPECT_THROW(enc.vision().embed_image(Tensor::zeros({15, c.raw_dim})), ShapeError);
}

TEST(Encoder, EmbedTextRepeatedTokenDiffersByPosition) {
  EncoderConfig c = small();
  c.n_text_tokens = 12;
  c.d_t = 24;
  DualEncoder enc(c, 2);
  const std::vector<std::size_t> ids{4, 7, 4, 1, 1, 2, 3, 5, 6, 8, 9, 10};
  const Tensor out = enc.text().embed_text(ids);
  EXPECT_EQ(out.shape(), (Shape{12, 24}));
  const auto pos = vec(find(enc.text().parameters(), "text.positions")->tensor);
  for (std::size_t k = 0; k < c.d_t; ++k) {
    EXPECT_NEAR(out.at(0, k) - out.at(2, k), pos[k] - pos[2 * c.d_t + k], 1e-15);
  }
  const std::vector<std::size_t> bad{1, 2, 99};
  try {
    enc.text().embed_text(bad);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("index 2"), std::string::npos) << e.what();
  }
}

TEST(Encoder, LayerForwardPermutationEquivariantWithoutPositions) {
  const EncoderConfig c = small();
  DualEncoder enc(c, 4);
  Rng rng(5);
  std::vector<double> v(5 * c.d_v);
  for (auto& x : v) x = rng.normal();
  const Tensor seq = Tensor::from({5, c.d_v}, v);
  const std::size_t perm[] = {3, 0, 4, 1, 2};
  const Tensor permuted = ops::gather_rows(seq, perm);
  for (std::size_t layer = 0; layer < c.num_layers; ++layer) {
    const Tensor y = enc.vision().layer_forward(layer, seq);
    const Tensor yp = enc.vision().layer_forward(layer, permuted);
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t k = 0; k < c.d_v; ++k) EXPECT_NEAR(yp.at(r, k), y.at(perm[r], k), 1e-10);
  }
  EXPECT_THROW(enc.vision().layer_forward(0, Tensor::zeros({5, c.d_t})), ShapeError);
}

TEST(Encoder, EmptyScheduleMatchesPlainForward) {
  const EncoderConfig c = small();
  DualEncoder enc(c, 6);
  Rng rng(7);
  const Tensor tokens = enc.vision().embed_image(patches(c, rng));
  const BranchOutput out = enc.vision().forward(tokens, {}, {});
  const Tensor ref = enc.vision().pool(enc.vision().run_layers(tokens, 0, c.num_layers));
  EXPECT_EQ(vec(out.pooled), vec(ref));
  double norm = 0.0;
  for (double x : out.pooled.values()) norm += x * x;
  EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-12);
  EXPECT_EQ(out.pooled.numel(), c.d_joint);
}

TEST(Encoder, PromptsPrefixedAndStripped) {
  const EncoderConfig c = small();
  DualEncoder enc(c, 8);
  Rng rng(9);
  const Tensor tokens = enc.vision().embed_image(patches(c, rng));
  const std::size_t layers[] = {1};
  PromptSchedule schedule{{1, Tensor::from({3, c.d_v}, std::vector<double>(3 * c.d_v, 0.1))}};
  const BranchOutput out = enc.vision().forward(tokens, schedule, layers);
  ASSERT_EQ(out.prompt_outputs.count(1), 1u);
  EXPECT_EQ(out.prompt_outputs.at(1).shape(), (Shape{3, c.d_v}));
  EXPECT_EQ(out.features.rows(), c.n_patches + 1);

  // same computation by hand
  Tensor u = enc.vision().run_layers(tokens, 0, 1);
  const Tensor y = enc.vision().layer_forward(1, ops::concat_rows(schedule.at(1), u));
  u = enc.vision().run_layers(ops::slice_rows(y, 3, y.rows()), 2, c.num_layers);
  EXPECT_EQ(vec(out.pooled), vec(enc.vision().pool(u)));
  EXPECT_EQ(vec(out.prompt_outputs.at(1)), vec(ops::slice_rows(y, 0, 3)));

  PromptSchedule at_extraction{{2, schedule.at(1)}};
  EXPECT_THROW(enc.vision().forward(tokens, at_extraction, layers), Error);
  PromptSchedule wrong_width{{1, Tensor::zeros({3, c.d_t})}};
  EXPECT_THROW(enc.vision().forward(tokens, wrong_width, layers), ShapeError);
}

TEST(Encoder, WeightsFrozenAndNoGradient) {
  const EncoderConfig c = small();
  DualEncoder enc(c, 10);
  for (auto* p : enc.parameters()) EXPECT_TRUE(p->frozen) << p->name;
  Rng rng(11);
  Tensor prompt = Tensor::from({2, c.d_v}, std::vector<double>(2 * c.d_v, 0.3), true);
  const std::size_t layers[] = {1};
  const Tensor tokens = enc.vision().embed_image(patches(c, rng));
  const BranchOutput out = enc.vision().forward(tokens, {{1, prompt}}, layers);
  ops::sum(out.pooled).backward();
  EXPECT_TRUE(prompt.has_grad());
  for (auto* p : enc.parameters()) EXPECT_FALSE(p->tensor.has_grad()) << p->name;
}

TEST(Encoder, ReproducibleFromSeedAndWeightFileRoundTrip) {
  const EncoderConfig c = small();
  DualEncoder a(c, 12), b(c, 12), other(c, 13);
  const auto pa = a.parameters(), pb = b.parameters(), po = other.parameters();
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(vec(pa[i]->tensor), vec(pb[i]->tensor)) << pa[i]->name;
    any_diff = any_diff || vec(pa[i]->tensor) != vec(po[i]->tensor);
  }
  EXPECT_TRUE(any_diff);

  const auto path = std::filesystem::temp_directory_path() / "mitp_encoder_weights.bin";
  a.save_weights(path);
  other.load_weights(path);
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(vec(pa[i]->tensor), vec(po[i]->tensor));
  EXPECT_TRUE(po.front()->frozen);

  EncoderConfig wider = c;
  wider.d_joint = 5;
  DualEncoder mismatch(wider, 12);
  const auto before = vec(mismatch.parameters().front()->tensor);
  EXPECT_THROW(mismatch.load_weights(path), Error);
  EXPECT_EQ(vec(mismatch.parameters().front()->tensor), before);
  std::filesystem::remove(path);
}
