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

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mitp/datasets.hpp"
#include "mitp/harness/ablation.hpp"
#include "mitp/harness/census.hpp"
#include "mitp/harness/config.hpp"
#include "mitp/harness/export.hpp"
#include "mitp/harness/gradcheck_suites.hpp"
#include "mitp/harness/model.hpp"
#include "mitp/harness/train.hpp"
#include "mitp/numerics/error.hpp"

namespace fs = std::filesystem;
using namespace mitp;
using namespace mitp::harness;

namespace {

struct Options {
  std::string config;
  std::string sweep;
  std::string out;
  std::string results;
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  std::string format = "json";
  double tolerance = 1e-4;
};

fs::path prepare_out(const Options& o) {
  const fs::path dir(o.out);
  fs::create_directories(dir);
  return dir;
}

RunConfig config_with_seed(const Options& o) {
  RunConfig c = load_run_config(o.config);
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

void print_metrics(const RunResult& r) {
  fmt::print("variant {}  similarity {}  seed {}\n", to_string(r.config.variant), to_string(r.config.similarity),
             r.seed);
  fmt::print("test accuracy {:.4f}  f1_micro {:.4f}  f1_macro {:.4f}  loss {:.4f}\n", r.test.accuracy,
             r.test.f1_micro, r.test.f1_macro, r.test.loss);
  fmt::print("val accuracy {:.4f} (best epoch {}, {} epochs run, {} optimizer steps)\n", r.val.accuracy,
             r.best_epoch, r.epochs_run, r.optimizer_steps);
  fmt::print("trainable params {} of {}  peak tensor memory {} bytes  wall time {:.2f} s\n",
             r.trainable_param_count, r.total_param_count, r.peak_memory_bytes, r.wall_time_s);
}

void write_results(const fs::path& dir, const std::string& stem, std::span<const RunResult> results,
                   ExportFormat format) {
  export_results(results, dir / (stem + (format == ExportFormat::csv ? ".csv" : ".json")), format);
  if (format == ExportFormat::csv) export_results(results, dir / (stem + ".json"), ExportFormat::json);
}

int cmd_gen_data(const Options& o) {
  RunConfig c = load_run_config(o.config);
  if (o.seed) c.data.seed = *o.seed;
  const data::Splits splits = data::generate_synthetic(c.data);
  const fs::path dir = prepare_out(o);
  data::export_jsonl(splits.train, dir / "train.jsonl");
  data::export_jsonl(splits.val, dir / "val.jsonl");
  data::export_jsonl(splits.test, dir / "test.jsonl");
  fmt::print("wrote {} / {} / {} examples to {}\n", splits.train.size(), splits.val.size(), splits.test.size(),
             dir.string());
  return 0;
}

int cmd_train(const Options& o) {
  const RunConfig c = config_with_seed(o);
  const ExportFormat format = parse_format(o.format);
  const data::Splits splits = load_splits(c);
  Model model(c);
  const RunResult r = train(model, splits);
  print_metrics(r);
  if (!o.out.empty()) {
    const fs::path dir = prepare_out(o);
    write_results(dir, "result", std::span(&r, 1), format);
    save_checkpoint(model, dir / "checkpoint.bin");
  }
  return 0;
}

int cmd_eval(const Options& o) {
  RunConfig c = config_with_seed(o);
  c.epochs = 0;  // evaluate the parameters as given
  const ExportFormat format = parse_format(o.format);
  const data::Splits splits = load_splits(c);
  Model model(c);
  if (!o.checkpoint.empty()) load_checkpoint(model, o.checkpoint);
  const RunResult r = train(model, splits);
  print_metrics(r);
  if (!o.out.empty()) write_results(prepare_out(o), "eval", std::span(&r, 1), format);
  return 0;
}

int cmd_ablate(const Options& o) {
  SweepSpec sweep = load_sweep(o.sweep);
  if (o.seed) sweep.base.seed = *o.seed;
  const ExportFormat format = parse_format(o.format);
  const auto cells = ablation_matrix(sweep.base, sweep.axes);
  const auto rows = aggregate(cells);
  fmt::print("{}", format_aggregate(rows));
  if (!o.out.empty()) {
    const fs::path dir = prepare_out(o);
    const auto results = results_of(cells);
    write_results(dir, "results", results, format);
    write_text_file(dir / "aggregate.csv", aggregate_to_csv(rows));
    write_text_file(dir / "sweep_long.csv", sweep_long_csv(results));
  }
  return 0;
}

int cmd_gradcheck(const Options& o) {
  const auto suites = all_gradchecks(o.tolerance);
  bool ok = true;
  std::string current;
  double suite_max = 0.0;
  auto flush = [&]() {
    if (!current.empty()) fmt::print("suite {:<10} max relative error {:.3e}\n", current, suite_max);
  };
  for (const auto& s : suites) {
    if (s.suite != current) {
      flush();
      current = s.suite;
      suite_max = 0.0;
    }
    suite_max = std::max(suite_max, s.report.max_rel_error);
    ok = ok && s.report.passed;
    fmt::print("  {:<4} {:<36} {:.3e}  ({} coords, worst {}[{}]: analytic {:.6e} numeric {:.6e})\n",
               s.report.passed ? "ok" : "FAIL", s.name, s.report.max_rel_error, s.report.coordinates,
               s.report.worst_leaf, s.report.worst_index, s.report.worst_analytic, s.report.worst_numeric);
  }
  flush();
  fmt::print("{} (tolerance {:g})\n", ok ? "all suites passed" : "gradient check FAILED", o.tolerance);
  return ok ? 0 : 1;
}

int cmd_census(const Options& o) {
  const RunConfig c = config_with_seed(o);
  Model model(c);
  const Census census = param_census(model);
  const std::string table = format_census(census);
  fmt::print("{}", table);
  if (!o.out.empty()) write_text_file(prepare_out(o) / "census.txt", table);
  return 0;
}

int cmd_report(const Options& o) {
  const auto results = results_from_json(read_text_file(o.results));
  if (results.empty()) throw Error(fmt::format("{}: no results", o.results));
  const fs::path dir = prepare_out(o);
  write_text_file(dir / "results.csv", results_to_csv(results));
  write_text_file(dir / "sweep_long.csv", sweep_long_csv(results));
  fmt::print("wrote {} runs to {}\n", results.size(), dir.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal prompt interaction on frozen dual encoders: data, training, ablations, checks"};
  app.require_subcommand(1, 1);
  Options o;

  auto add_seed = [&o](CLI::App* cmd) {
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&o](const std::uint64_t& s) { o.seed = s; }, "Override the run seed");
  };

  auto* gen = app.add_subcommand("gen-data", "Write synthetic train/val/test JSONL splits");
  gen->add_option("--config", o.config, "Run config (its data section is used)")->required();
  gen->add_option("--out", o.out, "Output directory")->required();
  add_seed(gen);

  auto* train_cmd = app.add_subcommand("train", "Train one configuration");
  train_cmd->add_option("--config", o.config, "Run config JSON")->required();
  train_cmd->add_option("--out", o.out, "Output directory for result and checkpoint");
  train_cmd->add_option("--format", o.format, "Result format")->check(CLI::IsMember({"csv", "json"}));
  add_seed(train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a configuration, optionally from a checkpoint");
  eval_cmd->add_option("--config", o.config, "Run config JSON")->required();
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint written by train");
  eval_cmd->add_option("--out", o.out, "Output directory");
  eval_cmd->add_option("--format", o.format, "Result format")->check(CLI::IsMember({"csv", "json"}));
  add_seed(eval_cmd);

  auto* ablate = app.add_subcommand("ablate", "Run an ablation matrix from a sweep file");
  ablate->add_option("--sweep", o.sweep, "Sweep JSON with base config and axes")->required();
  ablate->add_option("--out", o.out, "Output directory");
  ablate->add_option("--format", o.format, "Result format")->check(CLI::IsMember({"csv", "json"}));
  add_seed(ablate);

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient suites");
  grad->add_option("--tolerance", o.tolerance, "Maximum relative error")->check(CLI::PositiveNumber);

  auto* census = app.add_subcommand("census", "Print the parameter census");
  census->add_option("--config", o.config, "Run config JSON")->required();
  census->add_option("--out", o.out, "Output directory");
  add_seed(census);

  auto* report = app.add_subcommand("report", "Convert result JSON into plot-ready CSV");
  report->add_option("--results", o.results, "Result JSON written by train or ablate")->required();
  report->add_option("--out", o.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(o);
    if (train_cmd->parsed()) return cmd_train(o);
    if (eval_cmd->parsed()) return cmd_eval(o);
    if (ablate->parsed()) return cmd_ablate(o);
    if (grad->parsed()) return cmd_gradcheck(o);
    if (census->parsed()) return cmd_census(o);
    if (report->parsed()) return cmd_report(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
