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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "mitp/datasets.hpp"
#include "mitp/numerics/error.hpp"
#include "oracles.hpp"

using namespace mitp;
using namespace mitp::data;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mitp_test_" + name);
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

enum class View { image, text, both };

std::vector<double> features(const Example& ex, const SyntheticSpec& spec, View view) {
  std::vector<double> out;
  if (view != View::text) out = ex.patches;
  if (view != View::image) {
    std::vector<double> counts(spec.vocab_size, 0.0);
    for (auto t : ex.tokens) counts[t] += 1.0;
    out.insert(out.end(), counts.begin(), counts.end());
  }
  return out;
}

// Fits on s.train, scores on `eval` (s.test unless given).
double probe(const Splits& s, const SyntheticSpec& spec, View view, int iterations = 400,
             const Dataset* eval = nullptr) {
  std::vector<std::vector<double>> tx, ex;
  std::vector<std::size_t> ty, ey;
  for (const auto& e : s.train.examples) {
    tx.push_back(features(e, spec, view));
    ty.push_back(e.labels[0]);
  }
  for (const auto& e : (eval ? *eval : s.test).examples) {
    ex.push_back(features(e, spec, view));
    ey.push_back(e.labels[0]);
  }
  return oracle::linear_probe_accuracy(tx, ty, ex, ey, spec.num_classes, iterations);
}

}  // namespace

bool same_splits(const Splits& a, const Splits& b) { return a.train == b.train && a.val == b.val && a.test == b.test; }

TEST(Synthetic, Deterministic) {
  SyntheticSpec spec;
  EXPECT_TRUE(same_splits(generate_synthetic(spec, 5), generate_synthetic(spec, 5)));
  EXPECT_FALSE(same_splits(generate_synthetic(spec, 5), generate_synthetic(spec, 6)));
}

TEST(Synthetic, ShapesRangesAndFiniteness) {
  SyntheticSpec spec;
  spec.multi_label = true;
  spec.max_labels = 3;
  const Splits s = generate_synthetic(spec);
  for (const Dataset* d : {&s.train, &s.val, &s.test}) {
    EXPECT_TRUE(d->multi_label);
    for (const auto& ex : d->examples) {
      EXPECT_EQ(ex.patches.size(), spec.n_patches * spec.raw_dim);
      for (double v : ex.patches) EXPECT_TRUE(std::isfinite(v));
      EXPECT_EQ(ex.tokens.size(), spec.n_text_tokens);
      for (auto t : ex.tokens) EXPECT_LT(t, spec.vocab_size);
      EXPECT_FALSE(ex.labels.empty());
      EXPECT_LE(ex.labels.size(), 3u);
      EXPECT_EQ(std::set<std::size_t>(ex.labels.begin(), ex.labels.end()).size(), ex.labels.size());
      for (auto l : ex.labels) EXPECT_LT(l, spec.num_classes);
    }
  }
  EXPECT_EQ(s.train.size(), spec.n_train);
  EXPECT_EQ(s.val.size(), spec.n_val);
  EXPECT_EQ(s.test.size(), spec.n_test);
}

TEST(Synthetic, BalancedClassHistogram) {
  SyntheticSpec spec;
  spec.num_classes = 5;
  spec.n_train = 500;
  const Splits s = generate_synthetic(spec);
  std::vector<std::size_t> hist(5, 0);
  for (const auto& ex : s.train.examples) ++hist[ex.labels[0]];
  for (auto h : hist) EXPECT_LT(std::abs(static_cast<double>(h) - 100.0) / 100.0, 0.05);
}

TEST(Synthetic, SizesBelowClassCountRejected) {
  SyntheticSpec spec;
  spec.n_val = spec.num_classes - 1;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.num_classes = 1;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.modality_split = 1.5;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.vocab_size = 8;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
}

TEST(Synthetic, FusionBeatsEitherModality) {
  SyntheticSpec spec;
  spec.noise = 0.0;
  spec.modality_split = 0.5;
  spec.n_train = 200;
  spec.n_test = 200;
  const Splits s = generate_synthetic(spec);
  // separable: a linear classifier on both views fits every example
  EXPECT_EQ(probe(s, spec, View::both, 4000, &s.train), 1.0);
  const double both = probe(s, spec, View::both, 4000);
  const double image = probe(s, spec, View::image);
  const double text = probe(s, spec, View::text);
  EXPECT_GE(both, 0.99);
  EXPECT_LT(probe(s, spec, View::image, 4000, &s.train), 1.0);
  EXPECT_LT(probe(s, spec, View::text, 4000, &s.train), 1.0);
  EXPECT_LT(image, 1.0);
  EXPECT_LT(text, 1.0);
  EXPECT_LT(image, 0.6);
  EXPECT_LT(text, 0.6);
}

TEST(Synthetic, AllSignalInImageLeavesTextAtChance) {
  SyntheticSpec spec;
  spec.modality_split = 1.0;
  spec.n_train = 400;
  spec.n_test = 800;
  const Splits s = generate_synthetic(spec);
  EXPECT_EQ(spec.text_groups(), 1u);
  const double text = probe(s, spec, View::text);
  EXPECT_NEAR(text, 1.0 / spec.num_classes, 0.05);
  EXPECT_GT(probe(s, spec, View::image), 0.9);
}

TEST(Jsonl, RoundTripBitIdentical) {
  SyntheticSpec spec;
  spec.n_train = 20;
  spec.multi_label = true;
  const Splits s = generate_synthetic(spec);
  const auto path = temp_file("roundtrip.jsonl");
  export_jsonl(s.train, path);
  EXPECT_EQ(load_jsonl(path), s.train);
  const DatasetShape shape = s.train.shape;
  EXPECT_EQ(load_jsonl(path, &shape), s.train);
  DatasetShape other = shape;
  other.raw_dim += 1;
  EXPECT_THROW(load_jsonl(path, &other), IoError);
  std::filesystem::remove(path);
}

TEST(Jsonl, EmptyFileAndMissingField) {
  const auto empty = temp_file("empty.jsonl");
  write(empty, "");
  EXPECT_THROW(load_jsonl(empty), IoError);

  const auto bad = temp_file("bad.jsonl");
  write(bad,
        "{\"patches\": [[0.5, 1.0]], \"tokens\": [1, 2], \"labels\": [0]}\n"
        "{\"patches\": [[0.5, 1.0]], \"tokens\": [1, 2]}\n");
  const std::string what = error_of([&] { load_jsonl(bad); });
  EXPECT_NE(what.find(":2"), std::string::npos) << what;
  EXPECT_NE(what.find("labels"), std::string::npos) << what;

  write(bad, "{\"patches\": [[0.5, 1.0]], \"tokens\": [1, 2], \"labels\": [0]}\nnot json\n");
  EXPECT_NE(error_of([&] { load_jsonl(bad); }).find(":2"), std::string::npos);
  EXPECT_THROW(load_jsonl(temp_file("does_not_exist.jsonl")), IoError);
  std::filesystem::remove(empty);
  std::filesystem::remove(bad);
}

TEST(Subsample, SizesAndDeterminism) {
  SyntheticSpec spec;
  spec.n_train = 1000;
  const Dataset d = generate_synthetic(spec).train;
  EXPECT_EQ(subsample(d, 0.1, 3).size(), 100u);
  EXPECT_EQ(subsample(d, 0.1, 3), subsample(d, 0.1, 3));
  EXPECT_FALSE(subsample(d, 0.1, 3) == subsample(d, 0.1, 4));
  EXPECT_EQ(subsample(d, 1.0, 9), d);
  EXPECT_THROW(subsample(d, 0.0, 1), ConfigError);
  EXPECT_THROW(subsample(d, 1.5, 1), ConfigError);
  EXPECT_THROW(subsample(d, 0.0001, 1), ConfigError);
}

TEST(Subsample, SubsetWithoutReplacement) {
  SyntheticSpec spec;
  spec.n_train = 200;
  const Dataset d = generate_synthetic(spec).train;
  const Dataset sub = subsample(d, 0.3, 2);
  EXPECT_EQ(sub.size(), 60u);
  std::size_t cursor = 0;
  for (const auto& ex : sub.examples) {
    // original order preserved, so a forward scan finds every element
    while (cursor < d.size() && !(d.examples[cursor] == ex)) ++cursor;
    ASSERT_LT(cursor, d.size());
    ++cursor;
  }
}
