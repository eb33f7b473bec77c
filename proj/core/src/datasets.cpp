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

#include "mitp/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "mitp/numerics/error.hpp"
#include "mitp/numerics/rng.hpp"

namespace mitp::data {

using nlohmann::json;

std::size_t SyntheticSpec::image_groups() const {
  const double g = std::round(std::pow(static_cast<double>(num_classes), modality_split));
  return std::clamp<std::size_t>(static_cast<std::size_t>(g), 1, num_classes);
}

std::size_t SyntheticSpec::text_groups() const {
  const std::size_t ig = image_groups();
  return (num_classes + ig - 1) / ig;
}

std::size_t class_name_token(std::size_t k) { return kTemplateTokens + k; }
std::size_t first_signal_token(std::size_t num_classes) { return kTemplateTokens + num_classes; }

void SyntheticSpec::validate() const {
  if (num_classes < 2) throw ConfigError(fmt::format("need at least 2 classes, got {}", num_classes));
  if (n_train < num_classes || n_val < num_classes || n_test < num_classes) {
    throw ConfigError(fmt::format("every split needs at least K={} examples (train {}, val {}, test {})",
                                  num_classes, n_train, n_val, n_test));
  }
  if (n_patches == 0 || raw_dim == 0 || n_text_tokens == 0 || tokens_per_group == 0) {
    throw ConfigError("synthetic data dimensions must be positive");
  }
  if (!(noise >= 0.0)) throw ConfigError("noise must be >= 0");
  if (!(modality_split >= 0.0 && modality_split <= 1.0)) throw ConfigError("modality_split must lie in [0, 1]");
  if (!(signal_rate >= 0.0 && signal_rate <= 1.0)) throw ConfigError("signal_rate must lie in [0, 1]");
  if (multi_label && (max_labels == 0 || max_labels > num_classes)) {
    throw ConfigError("max_labels must lie in [1, K]");
  }
  const std::size_t needed = first_signal_token(num_classes) + text_groups() * tokens_per_group + 1;
  if (vocab_size < needed) {
    throw ConfigError(fmt::format("vocab_size {} too small: layout needs at least {}", vocab_size, needed));
  }
}

namespace {

struct Layout {
  std::vector<std::vector<double>> prototypes;  // per image group
  std::size_t signal_begin;
  std::size_t distractor_begin;
};

std::vector<std::size_t> sample_labels(const SyntheticSpec& spec, std::size_t primary, Rng& rng) {
  std::vector<std::size_t> labels{primary};
  if (!spec.multi_label) return labels;
  const std::size_t extra = static_cast<std::size_t>(rng.below(spec.max_labels));
  while (labels.size() < extra + 1) {
    const auto k = static_cast<std::size_t>(rng.below(spec.num_classes));
    if (std::find(labels.begin(), labels.end(), k) == labels.end()) labels.push_back(k);
  }
  std::sort(labels.begin(), labels.end());
  return labels;
}

Example make_example(const SyntheticSpec& spec, const Layout& layout, std::vector<std::size_t> labels, Rng& rng) {
  const std::size_t ig = spec.image_groups();
  const std::size_t cells = spec.n_patches * spec.raw_dim;
  Example ex;
  ex.patches.assign(cells, 0.0);
  std::set<std::size_t> image_groups, text_groups;
  for (auto k : labels) {
    image_groups.insert(k % ig);
    text_groups.insert(k / ig);
  }
  for (auto g : image_groups) {
    for (std::size_t i = 0; i < cells; ++i) ex.patches[i] += layout.prototypes[g][i] / static_cast<double>(image_groups.size());
  }
  for (auto& v : ex.patches) v += rng.normal(0.0, spec.noise);

  const std::vector<std::size_t> groups(text_groups.begin(), text_groups.end());
  const std::size_t n_distractors = spec.vocab_size - layout.distractor_begin;
  auto signal_token = [&]() {
    const auto g = groups[static_cast<std::size_t>(rng.below(groups.size()))];
    return layout.signal_begin + g * spec.tokens_per_group + static_cast<std::size_t>(rng.below(spec.tokens_per_group));
  };
  bool has_signal = false;
  ex.tokens.resize(spec.n_text_tokens);
  for (auto& t : ex.tokens) {
    if (rng.uniform() < spec.signal_rate) {
      t = signal_token();
      has_signal = true;
    } else {
      t = layout.distractor_begin + static_cast<std::size_t>(rng.below(n_distractors));
    }
  }
  if (!has_signal) ex.tokens[static_cast<std::size_t>(rng.below(spec.n_text_tokens))] = signal_token();
  ex.labels = std::move(labels);
  return ex;
}

Dataset make_split(const SyntheticSpec& spec, const Layout& layout, std::size_t n, Rng rng) {
  Dataset ds;
  ds.shape = {spec.n_patches, spec.raw_dim, spec.n_text_tokens, spec.vocab_size, spec.num_classes};
  ds.multi_label = spec.multi_label;
  std::vector<std::size_t> primary(n);
  for (std::size_t i = 0; i < n; ++i) primary[i] = i % spec.num_classes;
  rng.shuffle(primary);
  ds.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto labels = sample_labels(spec, primary[i], rng);
    ds.examples.push_back(make_example(spec, layout, std::move(labels), rng));
  }
  return ds;
}

}  // namespace

Splits generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng root(seed);
  Layout layout;
  Rng proto_rng = root.fork(100);
  layout.prototypes.resize(spec.image_groups());
  for (auto& p : layout.prototypes) {
    p.resize(spec.n_patches * spec.raw_dim);
    for (auto& v : p) v = proto_rng.normal();
  }
  layout.signal_begin = first_signal_token(spec.num_classes);
  layout.distractor_begin = layout.signal_begin + spec.text_groups() * spec.tokens_per_group;
  return {make_split(spec, layout, spec.n_train, root.fork(1)), make_split(spec, layout, spec.n_val, root.fork(2)),
          make_split(spec, layout, spec.n_test, root.fork(3))};
}

std::vector<std::vector<std::size_t>> default_class_prompts(std::size_t num_classes) {
  std::vector<std::vector<std::size_t>> prompts;
  for (std::size_t k = 0; k < num_classes; ++k) prompts.push_back({0, 1, 2, class_name_token(k)});
  return prompts;
}

void export_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  const auto& s = dataset.shape;
  for (const auto& ex : dataset.examples) {
    json patches = json::array();
    for (std::size_t r = 0; r < s.n_patches; ++r) {
      patches.push_back(std::vector<double>(ex.patches.begin() + static_cast<std::ptrdiff_t>(r * s.raw_dim),
                                            ex.patches.begin() + static_cast<std::ptrdiff_t>((r + 1) * s.raw_dim)));
    }
    json line = {{"patches", std::move(patches)}, {"tokens", ex.tokens}, {"labels", ex.labels}};
    out << line.dump() << '\n';
  }
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

Dataset load_jsonl(const std::filesystem::path& path, const DatasetShape* expected) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  Dataset ds;
  bool have_shape = expected != nullptr;
  if (expected) ds.shape = *expected;
  std::size_t max_label = 0, max_token = 0;
  bool any_multi = false;
  std::string text;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw IoError(fmt::format("{}:{}: {}", path.string(), line_no, why));
  };
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(fmt::format("malformed JSON ({})", e.what()));
    }
    if (!j.is_object()) fail("expected a JSON object");
    for (const char* field : {"patches", "tokens", "labels"}) {
      if (!j.contains(field)) fail(fmt::format("missing field \"{}\"", field));
      if (!j[field].is_array()) fail(fmt::format("field \"{}\" must be an array", field));
    }
    Example ex;
    const auto& rows = j["patches"];
    std::size_t raw_dim = rows.empty() ? 0 : (rows[0].is_array() ? rows[0].size() : 0);
    for (const auto& r : rows) {
      if (!r.is_array() || r.size() != raw_dim) fail("field \"patches\" must be a rectangular array of numbers");
      for (const auto& v : r) {
        if (!v.is_number()) fail("field \"patches\" contains a non-number");
        ex.patches.push_back(v.get<double>());
      }
    }
    for (const auto& t : j["tokens"]) {
      if (!t.is_number_unsigned()) fail("field \"tokens\" must hold non-negative integers");
      ex.tokens.push_back(t.get<std::size_t>());
    }
    for (const auto& l : j["labels"]) {
      if (!l.is_number_unsigned()) fail("field \"labels\" must hold non-negative integers");
      ex.labels.push_back(l.get<std::size_t>());
    }
    if (ex.labels.empty()) fail("field \"labels\" is empty");
    if (!have_shape) {
      ds.shape.n_patches = rows.size();
      ds.shape.raw_dim = raw_dim;
      ds.shape.n_text_tokens = ex.tokens.size();
      have_shape = true;
    }
    if (rows.size() != ds.shape.n_patches || raw_dim != ds.shape.raw_dim) {
      fail(fmt::format("patches are {}x{}, expected {}x{}", rows.size(), raw_dim, ds.shape.n_patches,
                       ds.shape.raw_dim));
    }
    if (ex.tokens.size() != ds.shape.n_text_tokens) {
      fail(fmt::format("{} tokens, expected {}", ex.tokens.size(), ds.shape.n_text_tokens));
    }
    for (auto t : ex.tokens) {
      if (expected && t >= expected->vocab_size) fail(fmt::format("token id {} outside vocabulary", t));
      max_token = std::max(max_token, t);
    }
    for (auto l : ex.labels) {
      if (expected && l >= expected->num_classes) fail(fmt::format("label {} outside {} classes", l, expected->num_classes));
      max_label = std::max(max_label, l);
    }
    any_multi = any_multi || ex.labels.size() > 1;
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty()) throw IoError(fmt::format("{}: no examples", path.string()));
  if (!expected) {
    ds.shape.vocab_size = max_token + 1;
    ds.shape.num_classes = max_label + 1;
  }
  ds.multi_label = any_multi;
  return ds;
}

Dataset subsample(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError(fmt::format("fraction {} outside (0, 1]", fraction));
  const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(dataset.size())));
  if (n == 0) throw ConfigError(fmt::format("fraction {} of {} examples leaves nothing", fraction, dataset.size()));
  std::vector<std::size_t> idx(dataset.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  Dataset out;
  out.shape = dataset.shape;
  out.multi_label = dataset.multi_label;
  out.examples.reserve(n);
  for (auto i : idx) out.examples.push_back(dataset.examples[i]);
  return out;
}

}  // namespace mitp::data
