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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mitp/classifier.hpp"
#include "mitp/datasets.hpp"
#include "mitp/harness/config.hpp"
#include "mitp/harness/model.hpp"

namespace mitp::harness {

struct EvalMetrics {
  double accuracy = 0.0;
  double f1_micro = 0.0;
  double f1_macro = 0.0;
  double loss = 0.0;

  bool operator==(const EvalMetrics&) const = default;
};

// Epoch 0 is the untrained model; its train_loss is measured over the whole
// training split. Later epochs report the mean batch loss seen while
// training.
struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct RunResult {
  RunConfig config;
  std::uint64_t seed = 0;
  EvalMetrics test;
  EvalMetrics val;  // at the restored (best) parameters
  std::vector<EpochRecord> curves;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  std::size_t optimizer_steps = 0;
  std::size_t trainable_param_count = 0;
  std::size_t total_param_count = 0;
  std::size_t peak_memory_bytes = 0;
  double wall_time_s = 0.0;

  bool operator==(const RunResult&) const = default;
};

// Synthetic splits from config.data, or train/val/test.jsonl under
// config.data_path. The training split is then subsampled to
// config.train_fraction with config.seed.
data::Splits load_splits(const RunConfig& config);

EvalMetrics evaluate(const Model& model, std::span<const PreparedExample> examples, bool multi_label);

// Trains the model's trainable parameters with Adam on `splits`. Early
// stopping watches validation loss and restores the best parameters.
// A non-finite batch loss raises NumericError naming epoch, batch and the
// example indices in it.
RunResult train(Model& model, const data::Splits& splits);

// Builds the model and data from the config, then trains.
RunResult train_run(const RunConfig& config);

// Trainable parameters (prompt bank, hub, interaction MLPs, deep prompts)
// in the binary parameter format.
void save_checkpoint(Model& model, const std::filesystem::path& path);
void load_checkpoint(Model& model, const std::filesystem::path& path);

// Peak tensor bytes of one optimizer step on the first batch_size training
// examples, measured from before the batch is prepared. With
// full_finetune every backbone weight is trained as well.
std::size_t step_peak_memory(const RunConfig& config, bool full_finetune);

}  // namespace mitp::harness
