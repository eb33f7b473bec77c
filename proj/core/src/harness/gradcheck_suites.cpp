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

#include "mitp/harness/gradcheck_suites.hpp"

#include <functional>

#include <fmt/format.h>

#include "mitp/harness/model.hpp"
#include "mitp/harness/train.hpp"
#include "mitp/memory_hub.hpp"
#include "mitp/numerics/ops.hpp"
#include "mitp/numerics/rng.hpp"

namespace mitp::harness {

namespace {

using Fn = std::function<Tensor(std::span<const Tensor>)>;

Tensor leaf(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return Tensor::from(std::move(shape), v, true);
}

Tensor gauss_leaf(Shape shape, Rng& rng) {
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = rng.normal();
  return Tensor::from(std::move(shape), v, true);
}

SuiteResult run_case(const char* suite, std::string name, std::vector<Tensor> leaves, std::vector<std::string> names,
                     const Fn& f, Rng& rng, double tolerance) {
  ops::MmdBandwidthPin pin;
  Tensor probe;
  {
    NoGradScope no_grad;
    const Tensor out = f(leaves);
    std::vector<double> w(out.numel());
    for (auto& x : w) x = rng.normal();
    probe = Tensor::from(out.shape(), w);
  }
  auto build = [&]() {
    pin.rewind();
    return ops::sum(ops::mul(f(leaves), probe));
  };
  if (names.empty()) {
    for (std::size_t i = 0; i < leaves.size(); ++i) names.push_back(fmt::format("arg{}", i));
  }
  GradCheckOptions opts;
  opts.tolerance = tolerance;
  return {suite, std::move(name), grad_check(build, leaves, names, opts)};
}

}  // namespace

std::vector<SuiteResult> primitive_gradchecks(double tolerance, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SuiteResult> out;
  auto add = [&](std::string name, std::vector<Tensor> leaves, const Fn& f) {
    out.push_back(run_case("primitives", std::move(name), std::move(leaves), {}, f, rng, tolerance));
  };
  using S = std::span<const Tensor>;
  add("matmul[m,k]x[k,n]", {leaf({3, 4}, rng), leaf({4, 2}, rng)}, [](S a) { return ops::matmul(a[0], a[1]); });
  add("matmul[m,k]x[k]", {leaf({3, 4}, rng), leaf({4}, rng)}, [](S a) { return ops::matmul(a[0], a[1]); });
  add("matmul[k]x[k,n]", {leaf({3}, rng), leaf({3, 2}, rng)}, [](S a) { return ops::matmul(a[0], a[1]); });
  add("transpose", {leaf({3, 4}, rng)}, [](S a) { return ops::transpose(a[0]); });
  add("add", {leaf({3, 4}, rng), leaf({3, 4}, rng)}, [](S a) { return ops::add(a[0], a[1]); });
  add("sub", {leaf({3, 4}, rng), leaf({3, 4}, rng)}, [](S a) { return ops::sub(a[0], a[1]); });
  add("mul", {leaf({3, 4}, rng), leaf({3, 4}, rng)}, [](S a) { return ops::mul(a[0], a[1]); });
  add("scale", {leaf({3, 4}, rng)}, [](S a) { return ops::scale(a[0], 1.7); });
  add("affine", {leaf({3, 4}, rng)}, [](S a) { return ops::affine(a[0], -0.8, 0.3); });
  add("add_n", {leaf({2, 3}, rng), leaf({2, 3}, rng), leaf({2, 3}, rng)}, [](S a) { return ops::add_n(a); });
  add("add_bias", {leaf({3, 4}, rng), leaf({4}, rng)}, [](S a) { return ops::add_bias(a[0], a[1]); });
  add("scale_rows", {leaf({3, 4}, rng), leaf({3}, rng)}, [](S a) { return ops::scale_rows(a[0], a[1]); });
  add("relu", {leaf({4, 5}, rng)}, [](S a) { return ops::relu(a[0]); });
  add("gelu", {leaf({4, 5}, rng, -3.0, 3.0)}, [](S a) { return ops::gelu(a[0]); });
  add("exp", {leaf({3, 4}, rng)}, [](S a) { return ops::exp(a[0]); });
  add("log", {leaf({3, 4}, rng, 0.5, 2.0)}, [](S a) { return ops::log(a[0]); });
  add("sigmoid", {leaf({3, 4}, rng, -3.0, 3.0)}, [](S a) { return ops::sigmoid(a[0]); });
  add("softmax(axis=0)", {leaf({4, 3}, rng, -2.0, 2.0)}, [](S a) { return ops::softmax(a[0], 0); });
  add("softmax(axis=1)", {leaf({4, 3}, rng, -2.0, 2.0)}, [](S a) { return ops::softmax(a[0], 1); });
  add("softmax(vector)", {leaf({5}, rng, -2.0, 2.0)}, [](S a) { return ops::softmax(a[0], 0); });
  add("layer_norm", {gauss_leaf({3, 5}, rng), gauss_leaf({5}, rng), gauss_leaf({5}, rng)},
      [](S a) { return ops::layer_norm(a[0], a[1], a[2]); });
  add("reshape", {leaf({3, 4}, rng)}, [](S a) { return ops::reshape(a[0], {2, 6}); });
  add("concat_rows", {leaf({2, 4}, rng), leaf({3, 4}, rng)}, [](S a) { return ops::concat_rows(a[0], a[1]); });
  add("slice_rows", {leaf({5, 3}, rng)}, [](S a) { return ops::slice_rows(a[0], 1, 4); });
  add("concat_cols", {leaf({3, 2}, rng), leaf({3, 3}, rng)}, [](S a) { return ops::concat_cols(a); });
  add("slice_cols", {leaf({3, 5}, rng)}, [](S a) { return ops::slice_cols(a[0], 1, 4); });
  add("row", {leaf({3, 4}, rng)}, [](S a) { return ops::row(a[0], 1); });
  add("gather_rows", {leaf({6, 3}, rng)}, [](S a) {
    const std::size_t ids[] = {4, 0, 4, 2};
    return ops::gather_rows(a[0], ids);
  });
  add("pick", {leaf({5}, rng)}, [](S a) { return ops::pick(a[0], 3); });
  add("sum", {leaf({3, 4}, rng)}, [](S a) { return ops::sum(a[0]); });
  add("mean", {leaf({3, 4}, rng)}, [](S a) { return ops::mean(a[0]); });
  add("mean_axis(0)", {leaf({3, 4}, rng)}, [](S a) { return ops::mean_axis(a[0], 0); });
  add("mean_axis(1)", {leaf({3, 4}, rng)}, [](S a) { return ops::mean_axis(a[0], 1); });
  add("variance_axis(0)", {leaf({4, 3}, rng)}, [](S a) { return ops::variance_axis(a[0], 0, 0); });
  add("variance_axis(1,ddof=1)", {leaf({3, 4}, rng)}, [](S a) { return ops::variance_axis(a[0], 1, 1); });
  add("normalize", {leaf({5}, rng)}, [](S a) { return ops::normalize(a[0]); });
  add("row_cosine", {leaf({3, 6}, rng), leaf({3, 6}, rng)}, [](S a) { return ops::row_cosine(a[0], a[1]); });
  add("row_covariance", {leaf({3, 6}, rng), leaf({3, 6}, rng)},
      [](S a) { return ops::row_covariance(a[0], a[1]); });
  add("row_pearson", {leaf({3, 6}, rng), leaf({3, 6}, rng)}, [](S a) { return ops::row_pearson(a[0], a[1]); });
  add("row_mmd_similarity", {gauss_leaf({3, 6}, rng), gauss_leaf({3, 6}, rng)},
      [](S a) { return ops::row_mmd_similarity(a[0], a[1]); });
  add("bce_with_logits", {leaf({5}, rng, -3.0, 3.0)}, [](S a) {
    const double targets[] = {1.0, 0.0, 0.0, 1.0, 0.0};
    return ops::bce_with_logits(a[0], targets);
  });
  return out;
}

std::vector<SuiteResult> hub_gradchecks(double tolerance, std::uint64_t seed) {
  std::vector<SuiteResult> out;
  const std::size_t d_v = 6, d_t = 5, hidden = 4, L = 4;
  for (auto type : {SimilarityType::cosine, SimilarityType::mmd, SimilarityType::cov_pearsonr}) {
    Rng rng = Rng(seed).fork(static_cast<std::uint64_t>(type));
    MemoryHub hub(d_v, d_t, hidden, type, rng, 0.5);
    std::vector<Tensor> leaves{gauss_leaf({L, d_v}, rng), gauss_leaf({L, d_t}, rng)};
    std::vector<std::string> names{"p_v", "p_t"};
    for (auto* p : hub.parameters()) {
      // random biases too: zero biases make dead rows constant, which puts
      // similarity scores exactly on the ReLU kink
      for (auto& v : p->tensor.mutable_values()) v = 0.5 * rng.normal();
      leaves.push_back(p->tensor);
      names.push_back(p->name);
    }
    const Fn f = [&hub](std::span<const Tensor> a) {
      const PromptPair next = hub.step(a[0], a[1]);
      const Tensor parts[] = {ops::reshape(next.vision, {1, next.vision.numel()}),
                              ops::reshape(next.text, {1, next.text.numel()})};
      return ops::concat_cols(parts);
    };
    out.push_back(run_case("hub", to_string(type), leaves, names, f, rng, tolerance));
  }
  return out;
}

namespace {

RunConfig gradcheck_model_config(SimilarityType type, std::uint64_t seed) {
  RunConfig c;
  c.encoder = {.num_layers = 3, .d_v = 8, .d_t = 6, .num_heads = 2, .n_patches = 3, .raw_dim = 4,
               .n_text_tokens = 4, .vocab_size = 20, .d_joint = 4, .mlp_ratio = 2};
  c.interaction_layers = {1, 2};
  c.prompt_length = 3;
  c.similarity = type;
  c.variant = Variant::mitp_full;
  c.hub_hidden = 4;
  c.init_std = 0.5;
  c.seed = seed;
  c.tau = 0.5;
  c.data.num_classes = 3;
  c.data.n_train = 3;
  c.data.n_val = 3;
  c.data.n_test = 3;
  c.data.n_patches = 3;
  c.data.raw_dim = 4;
  c.data.n_text_tokens = 4;
  c.data.vocab_size = 20;
  c.data.tokens_per_group = 2;
  return c;
}

}  // namespace

std::vector<SuiteResult> model_gradchecks(double tolerance, std::uint64_t seed) {
  std::vector<SuiteResult> out;
  for (auto type : {SimilarityType::cosine, SimilarityType::mmd, SimilarityType::cov_pearsonr}) {
    const RunConfig cfg = gradcheck_model_config(type, seed);
    const data::Splits splits = load_splits(cfg);
    Model model(cfg);
    std::vector<PreparedExample> batch{model.prepare(splits.train.examples[0]),
                                       model.prepare(splits.train.examples[1])};
    std::vector<Tensor> leaves;
    std::vector<std::string> names;
    for (auto* p : model.trainable_parameters()) {
      leaves.push_back(p->tensor);
      names.push_back(p->name);
    }
    const Fn f = [&](std::span<const Tensor>) {
      return ops::scale(ops::add(model.loss(batch[0], false), model.loss(batch[1], false)), 0.5);
    };
    Rng rng(seed);
    out.push_back(run_case("model", fmt::format("two-layer mitp_full/{}", to_string(type)), leaves, names, f, rng,
                           tolerance));
  }
  return out;
}

std::vector<SuiteResult> all_gradchecks(double tolerance) {
  auto out = primitive_gradchecks(tolerance);
  for (auto part : {hub_gradchecks(tolerance), model_gradchecks(tolerance)}) {
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace mitp::harness
