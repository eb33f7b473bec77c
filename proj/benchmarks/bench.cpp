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

#include <vector>

#include <benchmark/benchmark.h>

#include "mitp/datasets.hpp"
#include "mitp/encoder.hpp"
#include "mitp/harness/config.hpp"
#include "mitp/harness/model.hpp"
#include "mitp/memory_hub.hpp"
#include "mitp/numerics/ops.hpp"
#include "mitp/numerics/rng.hpp"

using namespace mitp;

namespace {

Tensor random(Rng& rng, std::size_t rows, std::size_t cols, bool grad = false) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.normal();
  return Tensor::from({rows, cols}, v, grad);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random(rng, n, n), b = random(rng, n, n);
  for (auto _ : state) benchmark::DoNotOptimize(ops::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(128);

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  for (auto _ : state) {
    Tensor a = random(rng, n, n, true), b = random(rng, n, n, true);
    ops::sum(ops::matmul(a, b)).backward();
    benchmark::DoNotOptimize(a.grad().data());
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(16)->Arg(64);

void BM_LayerForward(benchmark::State& state) {
  encoder::EncoderConfig cfg;
  encoder::DualEncoder enc(cfg, 0);
  Rng rng(3);
  const Tensor seq = random(rng, cfg.n_patches + 1 + 3, cfg.d_v);
  NoGradScope no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(enc.vision().layer_forward(0, seq));
}
BENCHMARK(BM_LayerForward);

void BM_HubStep(benchmark::State& state) {
  const auto type = static_cast<SimilarityType>(state.range(0));
  encoder::EncoderConfig cfg;
  Rng rng(4);
  const MemoryHub hub(cfg.d_v, cfg.d_t, MemoryHub::default_hidden(cfg.d_v, cfg.d_t), type, rng);
  const Tensor p_v = random(rng, 3, cfg.d_v), p_t = random(rng, 3, cfg.d_t);
  for (auto _ : state) benchmark::DoNotOptimize(hub.step(p_v, p_t));
  state.SetLabel(to_string(type));
}
BENCHMARK(BM_HubStep)->DenseRange(0, 2);

void BM_TrainingExample(benchmark::State& state) {
  harness::RunConfig cfg;
  cfg.data.n_train = 8;
  const harness::Model model(cfg);
  const auto splits = data::generate_synthetic(cfg.data);
  const auto prepared = model.prepare(splits.train.examples.front());
  for (auto _ : state) model.loss(prepared, false).backward();
}
BENCHMARK(BM_TrainingExample);

}  // namespace
BENCHMARK_MAIN();
