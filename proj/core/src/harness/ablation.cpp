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

#include "mitp/harness/ablation.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "mitp/numerics/error.hpp"

namespace mitp::harness {

std::size_t threads_from_env() {
  const char* raw = std::getenv("MITP_THREADS");
  if (raw == nullptr || *raw == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (*end != '\0' || v < 1) return 1;
  return static_cast<std::size_t>(v);
}

namespace {

std::string join_key(const Assignment& a, bool skip_seed) {
  std::string key;
  for (const auto& [axis, value] : a) {
    if (skip_seed && axis == "seed") continue;
    if (!key.empty()) key += ',';
    // strings lose their JSON quotes; lists and numbers stay as written
    const bool quoted = value.size() >= 2 && value.front() == '"' && value.back() == '"';
    key += axis + "=" + (quoted ? value.substr(1, value.size() - 2) : value);
  }
  return key;
}

struct Stats {
  double mean = 0.0;
  double std = 0.0;
};

Stats stats(const std::vector<double>& xs) {
  Stats s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

}  // namespace

std::vector<CellResult> ablation_matrix(const RunConfig& base, std::span<const AxisValues> axes, std::size_t threads) {
  for (const auto& axis : axes) {
    if (axis.values.empty()) throw ConfigError(fmt::format("axis '{}' has no values", axis.name));
  }
  std::size_t cells_total = 1;
  for (const auto& axis : axes) cells_total *= axis.values.size();

  std::vector<CellResult> cells(cells_total);
  std::vector<RunConfig> configs(cells_total, base);
  for (std::size_t c = 0; c < cells_total; ++c) {
    std::size_t rest = c;
    std::vector<std::size_t> pick(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      pick[a] = rest % axes[a].values.size();
      rest /= axes[a].values.size();
    }
    cells[c].index = c;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const auto& value = axes[a].values[pick[a]];
      cells[c].assignment.emplace_back(axes[a].name, value);
      apply_axis(configs[c], axes[a].name, value);
    }
    if (configs[c].variant == Variant::baseline) configs[c].interaction_layers.clear();
    cells[c].key = join_key(cells[c].assignment, false);
    try {
      configs[c].validate();
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("cell {}: {}", cells[c].key, e.what()));
    }
  }

  if (threads == 0) threads = threads_from_env();
  threads = std::max<std::size_t>(1, std::min(threads, cells_total));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(cells_total);
  auto worker = [&]() {
    for (std::size_t c = next++; c < cells_total; c = next++) {
      try {
        cells[c].result = train_run(configs[c]);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return cells;
}

std::vector<AggregateRow> aggregate(std::span<const CellResult> cells) {
  std::vector<AggregateRow> rows;
  std::map<std::string, std::size_t> where;
  std::vector<std::vector<const RunResult*>> members;
  for (const auto& cell : cells) {
    const std::string key = join_key(cell.assignment, true);
    auto [it, fresh] = where.emplace(key, rows.size());
    if (fresh) {
      AggregateRow row;
      row.key = key;
      for (const auto& kv : cell.assignment) {
        if (kv.first != "seed") row.assignment.push_back(kv);
      }
      rows.push_back(std::move(row));
      members.emplace_back();
    }
    members[it->second].push_back(&cell.result);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<double> acc, f1mi, f1ma;
    for (const auto* r : members[i]) {
      acc.push_back(r->test.accuracy);
      f1mi.push_back(r->test.f1_micro);
      f1ma.push_back(r->test.f1_macro);
    }
    auto& row = rows[i];
    row.runs = members[i].size();
    const auto a = stats(acc), mi = stats(f1mi), ma = stats(f1ma);
    row.accuracy_mean = a.mean;
    row.accuracy_std = a.std;
    row.f1_micro_mean = mi.mean;
    row.f1_micro_std = mi.std;
    row.f1_macro_mean = ma.mean;
    row.f1_macro_std = ma.std;
    row.trainable_params = members[i].front()->trainable_param_count;
  }
  return rows;
}

std::string format_aggregate(std::span<const AggregateRow> rows) {
  std::size_t width = 4;
  for (const auto& r : rows) width = std::max(width, r.key.size());
  std::string out = fmt::format("{:<{}}  {:>4}  {:>17}  {:>17}  {:>17}  {:>10}\n", "cell", width, "runs",
                                "accuracy", "f1_micro", "f1_macro", "trainable");
  for (const auto& r : rows) {
    out += fmt::format("{:<{}}  {:>4}  {:>8.4f} ± {:<6.4f}  {:>8.4f} ± {:<6.4f}  {:>8.4f} ± {:<6.4f}  {:>10}\n",
                       r.key.empty() ? "(all)" : r.key, width, r.runs, r.accuracy_mean, r.accuracy_std,
                       r.f1_micro_mean, r.f1_micro_std, r.f1_macro_mean, r.f1_macro_std, r.trainable_params);
  }
  return out;
}

}  // namespace mitp::harness
