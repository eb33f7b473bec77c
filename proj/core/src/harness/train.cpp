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

#include "mitp/harness/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mitp/harness/census.hpp"
#include "mitp/numerics/adam.hpp"
#include "mitp/numerics/error.hpp"
#include "mitp/numerics/memory.hpp"
#include "mitp/numerics/ops.hpp"
#include "mitp/numerics/param_io.hpp"

namespace mitp::harness {

namespace {

data::DatasetShape expected_shape(const RunConfig& c) {
  const auto& e = c.encoder;
  return {e.n_patches, e.raw_dim, e.n_text_tokens, e.vocab_size, c.data.num_classes};
}

std::vector<PreparedExample> prepare_all(const Model& model, const data::Dataset& ds) {
  std::vector<PreparedExample> out;
  out.reserve(ds.size());
  for (const auto& ex : ds.examples) out.push_back(model.prepare(ex));
  return out;
}

std::vector<std::vector<double>> snapshot(std::span<Parameter* const> params) {
  std::vector<std::vector<double>> out;
  for (const auto* p : params) out.emplace_back(p->tensor.values().begin(), p->tensor.values().end());
  return out;
}

void restore(std::span<Parameter* const> params, const std::vector<std::vector<double>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i]->tensor.mutable_values();
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

Tensor batch_loss(const Model& model, std::span<const PreparedExample> examples,
                  std::span<const std::size_t> indices, bool multi_label) {
  std::vector<Tensor> terms;
  terms.reserve(indices.size());
  for (auto i : indices) terms.push_back(model.loss(examples[i], multi_label));
  return ops::scale(ops::add_n(terms), 1.0 / static_cast<double>(terms.size()));
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

data::Splits load_splits(const RunConfig& config) {
  data::Splits splits;
  if (config.data_path.empty()) {
    splits = data::generate_synthetic(config.data);
  } else {
    const auto shape = expected_shape(config);
    const std::filesystem::path dir(config.data_path);
    splits.train = data::load_jsonl(dir / "train.jsonl", &shape);
    splits.val = data::load_jsonl(dir / "val.jsonl", &shape);
    splits.test = data::load_jsonl(dir / "test.jsonl", &shape);
    const bool multi = config.data.multi_label || splits.train.multi_label;
    splits.train.multi_label = splits.val.multi_label = splits.test.multi_label = multi;
  }
  if (config.train_fraction < 1.0) splits.train = data::subsample(splits.train, config.train_fraction, config.seed);
  return splits;
}

EvalMetrics evaluate(const Model& model, std::span<const PreparedExample> examples, bool multi_label) {
  NoGradScope no_grad;
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<std::size_t>> truth;
  scores.reserve(examples.size());
  truth.reserve(examples.size());
  double loss = 0.0;
  for (const auto& ex : examples) {
    const Tensor z = model.logits(ex);
    const auto& labels = ex.source->labels;
    loss += multi_label ? classifier::loss_multi(z, labels).item()
                        : classifier::loss_uni(ops::softmax(z, 0), labels.front()).item();
    scores.emplace_back(z.values().begin(), z.values().end());
    truth.push_back(labels);
  }
  const auto m = classifier::metrics(scores, truth, multi_label ? classifier::Task::multi_label
                                                                  : classifier::Task::uni_label);
  return {m.accuracy, m.f1_micro, m.f1_macro, loss / static_cast<double>(examples.size())};
}

RunResult train(Model& model, const data::Splits& splits) {
  const auto start = std::chrono::steady_clock::now();
  memory::Region region;
  const RunConfig& cfg = model.config();
  const bool multi = splits.train.multi_label;

  RunResult result;
  result.config = cfg;
  result.seed = cfg.seed;
  const Census census = param_census(model);
  result.trainable_param_count = census.trainable_total;
  result.total_param_count = census.total();

  const auto train_set = prepare_all(model, splits.train);
  const auto val_set = prepare_all(model, splits.val);
  const auto params = model.trainable_parameters();

  {
    NoGradScope no_grad;
    EvalMetrics init_train = evaluate(model, train_set, multi);
    EvalMetrics init_val = evaluate(model, val_set, multi);
    result.curves.push_back({0, init_train.loss, init_val.loss, init_val.accuracy});
    result.val = init_val;
  }

  if (!params.empty() && cfg.epochs > 0) {
    AdamState adam(AdamOptions{.lr = cfg.lr});
    Rng order_rng = Rng(cfg.seed).fork(20);
    double best_val = result.curves.front().val_loss;
    auto best_values = snapshot(params);
    std::size_t since_best = 0;
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      order_rng.shuffle(order);
      double loss_sum = 0.0;
      std::size_t batches = 0;
      for (std::size_t b = 0; b * cfg.batch_size < order.size(); ++b) {
        const std::size_t lo = b * cfg.batch_size;
        const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
        const std::span<const std::size_t> idx(order.data() + lo, hi - lo);
        Tensor loss = batch_loss(model, train_set, idx, multi);
        const double value = loss.item();
        if (!std::isfinite(value)) {
          throw NumericError(fmt::format("non-finite training loss {} at epoch {} batch {} (train examples {})", value,
                                         epoch, b, fmt::join(idx, ",")));
        }
        // a parameter the loss does not reach still gets a (zero) update
        for (auto* p : params) p->tensor.zero_grad();
        loss.backward();
        adam_step(params, adam);
        ++result.optimizer_steps;
        loss_sum += value;
        ++batches;
      }
      const EvalMetrics val = evaluate(model, val_set, multi);
      result.curves.push_back({epoch, loss_sum / static_cast<double>(batches), val.loss, val.accuracy});
      result.epochs_run = epoch;
      if (val.loss < best_val) {
        best_val = val.loss;
        best_values = snapshot(params);
        result.best_epoch = epoch;
        result.val = val;
        since_best = 0;
      } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
        break;
      }
    }
    restore(params, best_values);
  }

  const auto test_set = prepare_all(model, splits.test);
  result.test = evaluate(model, test_set, multi);
  result.peak_memory_bytes = region.peak_bytes();
  result.wall_time_s = seconds_since(start);
  return result;
}

RunResult train_run(const RunConfig& config) {
  config.validate();
  const data::Splits splits = load_splits(config);
  Model model(config);
  return train(model, splits);
}

void save_checkpoint(Model& model, const std::filesystem::path& path) {
  ParamMap entries;
  for (const auto* p : model.trainable_parameters()) {
    entries[p->name] = NamedArray{p->tensor.shape(), {p->tensor.values().begin(), p->tensor.values().end()}};
  }
  write_param_file(path, entries);
}

void load_checkpoint(Model& model, const std::filesystem::path& path) {
  const ParamMap entries = read_param_file(path);
  const auto params = model.trainable_parameters();
  if (entries.size() != params.size()) {
    throw IoError(fmt::format("{}: checkpoint holds {} tensors, model expects {}", path.string(), entries.size(),
                              params.size()));
  }
  for (const auto* p : params) {
    auto it = entries.find(p->name);
    if (it == entries.end()) throw IoError(fmt::format("{}: missing tensor '{}'", path.string(), p->name));
    if (it->second.shape != p->tensor.shape()) {
      throw IoError(fmt::format("{}: tensor '{}' has shape {}, expected {}", path.string(), p->name,
                                shape_str(it->second.shape), shape_str(p->tensor.shape())));
    }
  }
  for (auto* p : params) {
    const auto& src = entries.at(p->name).values;
    auto dst = p->tensor.mutable_values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

std::size_t step_peak_memory(const RunConfig& config, bool full_finetune) {
  config.validate();
  const data::Splits splits = load_splits(config);
  Model model(config);
  model.set_full_finetune(full_finetune);
  const auto params = model.trainable_parameters();
  AdamState adam(AdamOptions{.lr = config.lr});
  const std::size_t n = std::min(config.batch_size, splits.train.size());

  memory::Region region;
  std::vector<PreparedExample> batch;
  for (std::size_t i = 0; i < n; ++i) batch.push_back(model.prepare(splits.train.examples[i]));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Tensor loss = batch_loss(model, batch, idx, splits.train.multi_label);
  if (!params.empty()) {
    for (auto* p : params) p->tensor.zero_grad();
    loss.backward();
    adam_step(params, adam);
  }
  return region.peak_bytes();
}

}  // namespace mitp::harness
