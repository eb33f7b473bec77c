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
#include <vector>

#include <gtest/gtest.h>

#include "mitp/memory_hub.hpp"
#include "mitp/numerics/error.hpp"
#include "mitp/numerics/ops.hpp"
#include "mitp/prompt_bank.hpp"
#include "oracles.hpp"

using namespace mitp;

namespace {

std::vector<double> vec(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

Tensor gaussian(Shape shape, Rng& rng, double sd = 1.0) {
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = rng.normal(0.0, sd);
  return Tensor::from(std::move(shape), v);
}

void randomise(std::vector<Parameter*> params, Rng& rng) {
  for (auto* p : params)
    for (auto& v : p->tensor.mutable_values()) v = rng.normal(0.0, 0.5);
}

}  // namespace

TEST(PromptBank, ShapesAndDeterminism) {
  Rng a(1), b(1);
  PromptBank x = PromptBank::init(a, 3, 16, 20), y = PromptBank::init(b, 3, 16, 20);
  EXPECT_EQ(x.text_prompt().shape(), (Shape{3, 16}));
  const auto px = x.parameters(), py = y.parameters();
  ASSERT_EQ(px.size(), 3u);
  for (std::size_t i = 0; i < px.size(); ++i) {
    EXPECT_FALSE(px[i]->frozen);
    EXPECT_EQ(vec(px[i]->tensor), vec(py[i]->tensor));
  }
  for (double v : px[2]->tensor.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(total_count(px), PromptBank::parameter_count(3, 16, 20));
  EXPECT_EQ(PromptBank::parameter_count(3, 16, 20), 3u * 16 + 16 * 20 + 20);
}

TEST(PromptBank, InitStdWithinBand) {
  Rng rng(2);
  PromptBank bank = PromptBank::init(rng, 100, 100, 1);
  double s = 0, s2 = 0;
  const auto v = bank.text_prompt().values();
  for (double x : v) {
    s += x;
    s2 += x * x;
  }
  const double n = static_cast<double>(v.size());
  const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
  EXPECT_GE(sd, 0.018);
  EXPECT_LE(sd, 0.022);
}

TEST(PromptBank, ProjectionMatchesAffineOracle) {
  Rng rng(3);
  PromptBank bank = PromptBank::init(rng, 2, 3, 4);
  randomise(bank.parameters(), rng);
  const auto params = bank.parameters();
  const Tensor prompt = gaussian({2, 3}, rng);
  const auto got = vec(bank.project_text_to_vision(prompt));
  auto want = oracle::matmul(vec(prompt), vec(params[1]->tensor), 2, 3, 4);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 4; ++c) want[r * 4 + c] += params[2]->tensor[c];
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(PromptBank, ZeroAndIdentityCases) {
  Rng rng(4);
  PromptBank bank = PromptBank::init(rng, 2, 3, 3);
  EXPECT_EQ(vec(bank.project_text_to_vision(Tensor::zeros({2, 3}))), std::vector<double>(6, 0.0));
  auto w = bank.parameters()[1]->tensor.mutable_values();
  for (std::size_t i = 0; i < 9; ++i) w[i] = i % 4 == 0 ? 1.0 : 0.0;
  const Tensor x = gaussian({2, 3}, rng);
  EXPECT_EQ(vec(bank.project_text_to_vision(x)), vec(x));
}

TEST(Similarity, HandComputedCosine) {
  const Tensor a = Tensor::from({2, 2}, {1, 0, 0, 1});
  const Tensor b = Tensor::from({2, 2}, {0, 1, 0, 1});
  EXPECT_EQ(vec(similarity_scores(a, b, SimilarityType::cosine)), (std::vector<double>{0.0, 1.0}));
}

TEST(Similarity, SelfAndAffineIdentities) {
  Rng rng(5);
  const Tensor a = gaussian({4, 6}, rng);
  for (double v : vec(similarity_scores(a, a, SimilarityType::cosine))) EXPECT_NEAR(v, 1.0, 1e-12);
  for (double v : vec(similarity_scores(a, a, SimilarityType::mmd))) EXPECT_EQ(v, 1.0);
  const Tensor b = ops::affine(a, 2.0, 3.0);
  for (double v : vec(similarity_scores(a, b, SimilarityType::cov_pearsonr))) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Similarity, CovPearsonrRoles) {
  Rng rng(6);
  const Tensor a = gaussian({3, 5}, rng), b = gaussian({3, 5}, rng);
  const auto intra = vec(similarity_scores(a, b, SimilarityType::cov_pearsonr, SimilarityRole::intra));
  const auto inter = vec(similarity_scores(a, b, SimilarityType::cov_pearsonr, SimilarityRole::inter));
  const auto av = vec(a), bv = vec(b);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(intra[i], oracle::covariance(av.data() + 5 * i, bv.data() + 5 * i, 5), 1e-12);
    EXPECT_NEAR(inter[i], oracle::pearson(av.data() + 5 * i, bv.data() + 5 * i, 5), 1e-12);
  }
}

TEST(Similarity, DegenerateRowsScoreZero) {
  const Tensor a = Tensor::from({2, 3}, {0, 0, 0, 1, 2, 3});
  const Tensor b = Tensor::from({2, 3}, {1, 1, 1, 3, 2, 1});
  const auto cos = vec(similarity_scores(a, b, SimilarityType::cosine));
  EXPECT_EQ(cos[0], 0.0);
  const Tensor c = Tensor::from({2, 3}, {2, 2, 2, 1, 2, 3});
  const auto r = vec(similarity_scores(c, b, SimilarityType::cov_pearsonr));
  EXPECT_EQ(r[0], 0.0);
  EXPECT_NEAR(r[1], -1.0, 1e-12);
  EXPECT_THROW(similarity_scores(Tensor::zeros({2, 1}), Tensor::zeros({2, 1}), SimilarityType::mmd), ShapeError);
}

TEST(Activation, SingletonUniformAndHandValue) {
  Activation one = activation({Tensor::from({1}, {3.7}), Tensor::from({1}, {0.0})});
  EXPECT_EQ(one.z[0], 1.0);
  EXPECT_EQ(one.r[0], 1.0);
  Activation flat = activation({Tensor::full({4}, 0.3), Tensor::full({4}, 0.0)});
  for (double v : flat.z.values()) EXPECT_DOUBLE_EQ(v, 0.25);
  Activation hand = activation({Tensor::from({2}, {std::log(2.0), 0.0}), Tensor::full({2}, 1.0)});
  EXPECT_NEAR(hand.z[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(hand.z[1], 1.0 / 3.0, 1e-15);
}

TEST(GenerateNext, HandExpansion) {
  const Tensor p = Tensor::from({2, 2}, {1, 2, 3, 4});      // rows a, b
  const Tensor pt = Tensor::from({2, 2}, {10, 20, 30, 40});  // rows c, d
  const Tensor half = Tensor::full({2}, 0.5);
  const auto got = vec(generate_next(p, pt, half, half));
  const std::vector<double> want{0.5 * 1 + 0.25 * 10, 0.5 * 2 + 0.25 * 20, 0.5 * 3 + 0.25 * 30, 0.5 * 4 + 0.25 * 40};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(got[i], want[i]);
  const Tensor ones = Tensor::full({2}, 1.0);
  EXPECT_EQ(vec(generate_next(p, pt, ones, half)), vec(p));
  EXPECT_THROW(generate_next(p, Tensor::zeros({2, 3}), half, half), ShapeError);
}

TEST(MemoryHub, CrossProjectionMatchesMlpOracle) {
  Rng rng(7);
  MemoryHub hub(6, 4, 3, SimilarityType::cosine, rng);
  randomise(hub.parameters(), rng);
  const auto ps = hub.parameters();  // cross_t2v first: w1, b1, w2, b2
  const Tensor src = gaussian({3, 4}, rng);
  const auto got = vec(hub.cross_project(src, Direction::text_to_vision));
  const auto want = oracle::mlp(vec(src), 3, 4, 3, 6, vec(ps[0]->tensor), vec(ps[1]->tensor), vec(ps[2]->tensor),
                                vec(ps[3]->tensor));
  ASSERT_EQ(got.size(), 18u);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  EXPECT_THROW(hub.cross_project(src, Direction::vision_to_text), ShapeError);
}

TEST(MemoryHub, ZeroInputZeroBiasGivesZero) {
  Rng rng(8);
  MemoryHub hub(5, 4, 2, SimilarityType::cosine, rng);
  EXPECT_EQ(vec(hub.cross_project(Tensor::zeros({3, 4}), Direction::text_to_vision)), std::vector<double>(15, 0.0));
}

TEST(MemoryHub, MappingComposesPublicOps) {
  Rng rng(9);
  MemoryHub hub(5, 4, 3, SimilarityType::cosine, rng);
  randomise(hub.parameters(), rng);
  const auto ps = hub.parameters();  // intra_v is the third MLP
  const Tensor p = gaussian({4, 5}, rng), pt = gaussian({4, 5}, rng);
  const Mapping m = hub.mapping(p, pt, encoder::Modality::vision);
  const auto wp = oracle::mlp(vec(p), 4, 5, 3, 5, vec(ps[8]->tensor), vec(ps[9]->tensor), vec(ps[10]->tensor),
                              vec(ps[11]->tensor));
  const auto pv = vec(p), ptv = vec(pt);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(m.intra[i], std::max(0.0, oracle::cosine(wp.data() + 5 * i, pv.data() + 5 * i, 5)), 1e-12);
    EXPECT_NEAR(m.inter[i], std::max(0.0, oracle::cosine(pv.data() + 5 * i, ptv.data() + 5 * i, 5)), 1e-12);
  }
}

TEST(MemoryHub, NegativeScoresAreKilled) {
  Rng rng(10);
  MemoryHub hub(4, 4, 2, SimilarityType::cosine, rng);
  const Tensor p = gaussian({3, 4}, rng);
  const Mapping m = hub.mapping(p, ops::scale(p, -1.0), encoder::Modality::vision);
  for (double v : m.inter.values()) EXPECT_EQ(v, 0.0);
}

TEST(MemoryHub, StepIsSymmetricAndUsesSameInputs) {
  Rng rng(11);
  MemoryHub hub(6, 4, 3, SimilarityType::cov_pearsonr, rng);
  randomise(hub.parameters(), rng);
  const Tensor pv = gaussian({3, 6}, rng), pt = gaussian({3, 4}, rng);
  const PromptPair next = hub.step(pv, pt);
  EXPECT_EQ(next.vision.shape(), (Shape{3, 6}));
  EXPECT_EQ(next.text.shape(), (Shape{3, 4}));
  // text output from the ORIGINAL vision prompt, not the updated one
  const Tensor v_in_t = hub.cross_project(pv, Direction::vision_to_text);
  const Activation act = activation(hub.mapping(pt, v_in_t, encoder::Modality::text));
  EXPECT_EQ(vec(next.text), vec(generate_next(pt, v_in_t, act.z, act.r)));
}

TEST(MemoryHub, SingleTokenIsIdentity) {
  Rng rng(12);
  for (auto type : {SimilarityType::cosine, SimilarityType::mmd, SimilarityType::cov_pearsonr}) {
    MemoryHub hub(5, 3, 2, type, rng);
    randomise(hub.parameters(), rng);
    const Tensor pv = gaussian({1, 5}, rng), pt = gaussian({1, 3}, rng);
    const PromptPair next = hub.step(pv, pt);
    EXPECT_EQ(vec(next.vision), vec(pv));
    EXPECT_EQ(vec(next.text), vec(pt));
  }
}

TEST(MemoryHub, GradientReachesBothPrompts) {
  Rng rng(13);
  MemoryHub hub(5, 4, 3, SimilarityType::cosine, rng);
  randomise(hub.parameters(), rng);
  Tensor pv = gaussian({3, 5}, rng), pt = gaussian({3, 4}, rng);
  pv.set_requires_grad(true);
  pt.set_requires_grad(true);
  const PromptPair next = hub.step(pv, pt);
  ops::add(ops::sum(next.vision), ops::sum(ops::mul(next.text, next.text))).backward();
  auto nonzero = [](std::span<const double> g) {
    for (double v : g)
      if (v != 0.0) return true;
    return false;
  };
  EXPECT_TRUE(nonzero(pv.grad()));
  EXPECT_TRUE(nonzero(pt.grad()));
}

TEST(MemoryHub, ParameterCountIndependentOfLayers) {
  Rng rng(14);
  MemoryHub hub(32, 24, 12, SimilarityType::mmd, rng);
  EXPECT_EQ(total_count(hub.parameters()), MemoryHub::parameter_count(32, 24, 12));
  for (auto* p : hub.parameters()) EXPECT_FALSE(p->frozen);
  EXPECT_EQ(MemoryHub::default_hidden(32, 24), 12u);
  EXPECT_EQ(MemoryHub::default_hidden(1, 1), 1u);
  EXPECT_THROW(MemoryHub(4, 4, 0, SimilarityType::cosine, rng), ConfigError);
}

TEST(SimilarityNames, ExactSpellings) {
  EXPECT_EQ(parse_similarity("cosine"), SimilarityType::cosine);
  EXPECT_EQ(parse_similarity("mmd"), SimilarityType::mmd);
  EXPECT_EQ(parse_similarity("cov-pearsonr"), SimilarityType::cov_pearsonr);
  EXPECT_THROW(parse_similarity("cov_pearsonr"), ConfigError);
  EXPECT_STREQ(to_string(SimilarityType::cov_pearsonr), "cov-pearsonr");
}
