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

#include "mitp/harness/export.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "config_json.hpp"
#include "mitp/numerics/error.hpp"

namespace mitp::harness {

using nlohmann::json;

ExportFormat parse_format(std::string_view name) {
  if (name == "csv") return ExportFormat::csv;
  if (name == "json") return ExportFormat::json;
  throw ConfigError(fmt::format("unknown format \"{}\" (expected csv or json)", name));
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "variant",     "similarity",   "interaction_layers", "prompt_length",    "train_fraction",
      "seed",        "accuracy",     "f1_micro",           "f1_macro",         "test_loss",
      "val_accuracy", "trainable_params", "total_params",  "peak_memory_bytes", "epochs_run",
      "wall_time_s"};
  return cols;
}

std::string format_number(double value) { return fmt::format("{:.6g}", value); }

namespace {

std::string layers_field(const std::vector<std::size_t>& layers) {
  std::string out;
  for (std::size_t i = 0; i < layers.size(); ++i) out += (i ? ";" : "") + std::to_string(layers[i]);
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string header(const std::vector<std::string>& cols) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  return out + "\n";
}

json metrics_json(const EvalMetrics& m) {
  return {{"accuracy", m.accuracy}, {"f1_micro", m.f1_micro}, {"f1_macro", m.f1_macro}, {"loss", m.loss}};
}

EvalMetrics metrics_from(const json& j) {
  return {j.at("accuracy").get<double>(), j.at("f1_micro").get<double>(), j.at("f1_macro").get<double>(),
          j.at("loss").get<double>()};
}

json result_json(const RunResult& r) {
  json curves = json::array();
  for (const auto& e : r.curves) {
    curves.push_back(
        {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"val_accuracy", e.val_accuracy}});
  }
  return {{"config", detail::config_to_json(r.config)},
          {"seed", r.seed},
          {"test", metrics_json(r.test)},
          {"val", metrics_json(r.val)},
          {"curves", std::move(curves)},
          {"epochs_run", r.epochs_run},
          {"best_epoch", r.best_epoch},
          {"optimizer_steps", r.optimizer_steps},
          {"trainable_param_count", r.trainable_param_count},
          {"total_param_count", r.total_param_count},
          {"peak_memory_bytes", r.peak_memory_bytes},
          {"wall_time_s", r.wall_time_s}};
}

RunResult result_from(const json& j, std::size_t i) {
  RunResult r;
  r.config = detail::config_from_json(j.at("config"), fmt::format("results[{}].config", i));
  r.seed = j.at("seed").get<std::uint64_t>();
  r.test = metrics_from(j.at("test"));
  r.val = metrics_from(j.at("val"));
  for (const auto& e : j.at("curves")) {
    r.curves.push_back({e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                        e.at("val_loss").get<double>(), e.at("val_accuracy").get<double>()});
  }
  r.epochs_run = j.at("epochs_run").get<std::size_t>();
  r.best_epoch = j.at("best_epoch").get<std::size_t>();
  r.optimizer_steps = j.at("optimizer_steps").get<std::size_t>();
  r.trainable_param_count = j.at("trainable_param_count").get<std::size_t>();
  r.total_param_count = j.at("total_param_count").get<std::size_t>();
  r.peak_memory_bytes = j.at("peak_memory_bytes").get<std::size_t>();
  r.wall_time_s = j.at("wall_time_s").get<double>();
  return r;
}

}  // namespace

std::string results_to_csv(std::span<const RunResult> results) {
  std::string out = header(csv_columns());
  for (const auto& r : results) {
    const auto& c = r.config;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(c.variant),
                       to_string(c.similarity), csv_escape(layers_field(c.interaction_layers)), c.prompt_length,
                       format_number(c.train_fraction), r.seed, format_number(r.test.accuracy),
                       format_number(r.test.f1_micro), format_number(r.test.f1_macro), format_number(r.test.loss),
                       format_number(r.val.accuracy), r.trainable_param_count, r.total_param_count,
                       r.peak_memory_bytes, r.epochs_run, format_number(r.wall_time_s));
  }
  return out;
}

std::string results_to_json(std::span<const RunResult> results, int indent) {
  json arr = json::array();
  for (const auto& r : results) arr.push_back(result_json(r));
  return json{{"results", std::move(arr)}}.dump(indent);
}

std::vector<RunResult> results_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw IoError(fmt::format("results JSON: {}", e.what()));
  }
  std::vector<RunResult> out;
  try {
    const auto& arr = j.at("results");
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(result_from(arr[i], i));
  } catch (const json::exception& e) {
    throw IoError(fmt::format("results JSON: {}", e.what()));
  }
  return out;
}

std::string sweep_long_csv(std::span<const RunResult> results) {
  std::string out = header({"variant", "similarity", "interaction_layers", "first_layer", "interval",
                            "num_interaction_layers", "prompt_length", "train_fraction", "seed", "metric", "value"});
  for (const auto& r : results) {
    const auto& c = r.config;
    const auto& l = c.interaction_layers;
    const std::string first = l.empty() ? "" : std::to_string(l.front());
    const std::string interval = l.size() > 1 ? std::to_string(l[1] - l[0]) : (l.empty() ? "" : "0");
    const std::pair<const char*, double> metrics[] = {
        {"accuracy", r.test.accuracy}, {"f1_micro", r.test.f1_micro}, {"f1_macro", r.test.f1_macro}};
    for (const auto& [name, value] : metrics) {
      out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", to_string(c.variant), to_string(c.similarity),
                         csv_escape(layers_field(l)), first, interval, l.size(), c.prompt_length,
                         format_number(c.train_fraction), r.seed, name, format_number(value));
    }
  }
  return out;
}

std::string aggregate_to_csv(std::span<const AggregateRow> rows) {
  std::string out = header({"cell", "runs", "accuracy_mean", "accuracy_std", "f1_micro_mean", "f1_micro_std",
                            "f1_macro_mean", "f1_macro_std", "trainable_params"});
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", csv_escape(r.key), r.runs, format_number(r.accuracy_mean),
                       format_number(r.accuracy_std), format_number(r.f1_micro_mean), format_number(r.f1_micro_std),
                       format_number(r.f1_macro_mean), format_number(r.f1_macro_std), r.trainable_params);
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void export_results(std::span<const RunResult> results, const std::filesystem::path& path, ExportFormat format) {
  if (results.empty()) throw Error("export_results: no results");
  write_text_file(path, format == ExportFormat::csv ? results_to_csv(results) : results_to_json(results) + "\n");
}

std::vector<RunResult> results_of(std::span<const CellResult> cells) {
  std::vector<RunResult> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(c.result);
  return out;
}

}  // namespace mitp::harness
