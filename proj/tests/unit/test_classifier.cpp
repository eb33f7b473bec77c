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

#include "mitp/classifier.hpp"
#include "mitp/datasets.hpp"
#include "mitp/numerics/error.hpp"
#include "mitp/numerics/ops.hpp"

using namespace mitp;
using namespace mitp::classifier;

namespace {

ClassPromptSet fixed_classes(std::vector<std::vector<double>> rows) {
  ClassPromptSet set;
  std::vector<double> flat;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    set.prompts.push_back({k});
    flat.insert(flat.end(), rows[k].begin(), rows[k].end());
  }
  set.embeddings = Tensor::from({rows.size(), rows[0].size()}, flat);
  return set;
}

encoder::EncoderConfig text_config() {
  encoder::EncoderConfig c;
  c.num_layers = 2;
  c.d_v = 8;
  c.d_t = 8;
  c.num_heads = 2;
  c.n_text_tokens = 4;
  c.vocab_size = 10;
  c.d_joint = 5;
  return c;
}

}  // namespace

TEST(ClassEmbeddings, UnitNormDeterministicAndEqualForEqualText) {
  const auto cfg = text_config();
  encoder::DualEncoder a(cfg, 3), b(cfg, 3);
  const std::vector<TokenSequence> prompts{{0, 1, 2, 3}, {0, 1, 2, 4}, {0, 1, 2, 3}};
  const auto set = build_class_embeddings(prompts, a.text());
  const auto again = build_class_embeddings(prompts, b.text());
  ASSERT_EQ(set.embeddings.shape(), (Shape{3, 5}));
  for (std::size_t k = 0; k < 3; ++k) {
    double n = 0;
    for (std::size_t j = 0; j < 5; ++j) n += set.embeddings.at(k, j) * set.embeddings.at(k, j);
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-12);
  }
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(set.embeddings.at(0, j), set.embeddings.at(2, j));
  EXPECT_EQ(std::vector<double>(set.embeddings.values().begin(), set.embeddings.values().end()),
            std::vector<double>(again.embeddings.values().begin(), again.embeddings.values().end()));
  EXPECT_THROW(build_class_embeddings({{1, 2}}, a.text()), ConfigError);
}

TEST(Predict, IdenticalClassesGiveUniform) {
  const auto set = fixed_classes({{0.6, 0.8}, {0.6, 0.8}, {0.6, 0.8}});
  const Tensor p = predict(Tensor::from({2}, {1, 0}), set, 0.07);
  for (double v : p.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Predict, HandValueAtUnitTemperature) {
  const auto set = fixed_classes({{1, 0}, {0, 1}});
  const Tensor p = predict(Tensor::from({2}, {1, 0}), set, 1.0);
  const double e = std::exp(1.0);
  EXPECT_NEAR(p[0], e / (e + 1), 1e-15);
  EXPECT_NEAR(p[1], 1 / (e + 1), 1e-15);
  EXPECT_NEAR(p[0], 0.7311, 1e-4);
}

TEST(Predict, SmallTemperatureSaturates) {
  const double c = 0.8, s = std::sqrt(1 - c * c);
  const auto set = fixed_classes({{1, 0}, {c + 0.1, std::sqrt(1 - (c + 0.1) * (c + 0.1))}, {c, s}});
  const Tensor p = predict(Tensor::from({2}, {1, 0}), set, 0.01);
  EXPECT_GT(p[0], 0.999);
  EXPECT_THROW(predict(Tensor::from({2}, {1, 0}), set, 0.0), ConfigError);
}

TEST(LossUni, AnalyticValues) {
  EXPECT_NEAR(loss_uni(Tensor::full({101}, 1.0 / 101), 7).item(), std::log(101.0), 1e-12);
  EXPECT_NEAR(std::log(101.0), 4.615, 1e-3);
  EXPECT_NEAR(loss_uni(Tensor::from({2}, {1.0, 0.0}), 0).item(), 0.0, 1e-15);
  const Tensor a = Tensor::from({2}, {0.25, 0.75}), b = Tensor::from({2}, {0.5, 0.5});
  const Tensor batch[] = {a, b};
  const std::size_t labels[] = {1, 0};
  EXPECT_NEAR(loss_uni(batch, labels).item(), 0.5 * (-std::log(0.75) - std::log(0.5)), 1e-15);
  EXPECT_TRUE(std::isfinite(loss_uni(Tensor::from({2}, {1.0, 0.0}), 1).item()));
}

TEST(LossMulti, AnalyticValues) {
  const std::size_t pos[] = {0};
  EXPECT_NEAR(loss_multi(Tensor::from({2}, {0.0, 0.0}), pos).item(), std::log(2.0), 1e-15);
  EXPECT_LT(loss_multi(Tensor::from({1}, {50.0}), pos).item(), 1e-20);
  EXPECT_NEAR(loss_multi(Tensor::from({3}, {0.0, 0.0, 0.0}), std::span<const std::size_t>{}).item(), std::log(2.0), 1e-15);
  // an empty logit vector cannot even be built
  EXPECT_THROW(Tensor::zeros({0}), ShapeError);
}

TEST(Metrics, PerfectAndAllWrong) {
  const std::vector<std::vector<double>> scores{{0.9, 0.1}, {0.2, 0.8}, {0.7, 0.3}};
  const std::vector<std::vector<std::size_t>> right{{0}, {1}, {0}}, wrong{{1}, {0}, {1}};
  const auto m = metrics(scores, right, Task::uni_label);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.f1_micro, 1.0);
  EXPECT_EQ(m.f1_macro, 1.0);
  EXPECT_EQ(metrics(scores, wrong, Task::uni_label).accuracy, 0.0);
  EXPECT_THROW(metrics({}, {}, Task::uni_label), Error);
}

TEST(Metrics, HandConfusionMicroF1) {
  // TP on sample 0, FN on sample 1, FP on sample 2
  const std::vector<std::vector<double>> logits{{3.0, -3.0}, {-3.0, -3.0}, {3.0, -3.0}};
  const std::vector<std::vector<std::size_t>> truth{{0}, {1}, {}};
  const auto m = metrics(logits, truth, Task::multi_label);
  EXPECT_DOUBLE_EQ(m.f1_micro, 0.5);
  // class 0: tp 1 fp 1 -> 2/3; class 1: fn 1 -> 0
  EXPECT_DOUBLE_EQ(m.f1_macro, (2.0 / 3.0) / 2.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0 / 3.0);
}

TEST(Metrics, ThresholdIsInclusiveAtHalf) {
  const std::vector<std::vector<double>> logits{{0.0, -1.0}};
  const std::vector<std::vector<std::size_t>> truth{{0}};
  EXPECT_EQ(metrics(logits, truth, Task::multi_label).accuracy, 1.0);
}

TEST(Metrics, MacroGivesZeroToAbsentClass) {
  const std::vector<std::vector<double>> scores{{0.9, 0.1, 0.0}, {0.2, 0.8, 0.0}};
  const std::vector<std::vector<std::size_t>> truth{{0}, {1}};
  const auto m = metrics(scores, truth, Task::uni_label);
  EXPECT_DOUBLE_EQ(m.f1_macro, 2.0 / 3.0);
}

TEST(DefaultClassPrompts, TemplateThenName) {
  const auto prompts = data::default_class_prompts(3);
  ASSERT_EQ(prompts.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(prompts[k], (TokenSequence{0, 1, 2, data::class_name_token(k)}));
  }
}
