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

#include "mitp/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "mitp/numerics/error.hpp"
#include "config_json.hpp"

namespace mitp::harness {

using nlohmann::json;

Variant parse_variant(std::string_view name) {
  if (name == "mitp_full") return Variant::mitp_full;
  if (name == "naive_mlp_interaction") return Variant::naive_mlp_interaction;
  if (name == "prompts_only") return Variant::prompts_only;
  if (name == "baseline") return Variant::baseline;
  if (name == "deep_prompt_tuning") return Variant::deep_prompt_tuning;
  throw ConfigError(fmt::format(
      "unknown variant \"{}\" (expected mitp_full, naive_mlp_interaction, prompts_only, baseline, "
      "deep_prompt_tuning)",
      name));
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::mitp_full: return "mitp_full";
    case Variant::naive_mlp_interaction: return "naive_mlp_interaction";
    case Variant::prompts_only: return "prompts_only";
    case Variant::baseline: return "baseline";
    case Variant::deep_prompt_tuning: return "deep_prompt_tuning";
  }
  return "?";
}

HubInput parse_hub_input(std::string_view name) {
  if (name == "post") return HubInput::post;
  if (name == "pre") return HubInput::pre;
  throw ConfigError(fmt::format("unknown hub_input \"{}\" (expected post or pre)", name));
}

const char* to_string(HubInput h) { return h == HubInput::post ? "post" : "pre"; }

std::size_t RunConfig::effective_hub_hidden() const {
  return hub_hidden > 0 ? hub_hidden : MemoryHub::default_hidden(encoder.d_v, encoder.d_t);
}

std::vector<std::vector<std::size_t>> RunConfig::effective_class_prompts() const {
  return class_prompts.empty() ? data::default_class_prompts(data.num_classes) : class_prompts;
}

void RunConfig::validate() const {
  encoder.validate(interaction_layers);
  if (!interaction_layers.empty()) encoder::layer_roles(encoder.num_layers, interaction_layers);
  if (variant == Variant::baseline && !interaction_layers.empty()) {
    throw ConfigError("variant baseline requires empty interaction_layers");
  }
  if (variant != Variant::baseline && interaction_layers.empty()) {
    throw ConfigError(fmt::format("variant {} needs at least one interaction layer", to_string(variant)));
  }
  if (prompt_length == 0) throw ConfigError("prompt_length must be >= 1");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(init_std > 0.0)) throw ConfigError("init_std must be > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw ConfigError("train_fraction must lie in (0, 1]");
  if (data_path.empty()) {
    data.validate();
    if (data.n_patches != encoder.n_patches || data.raw_dim != encoder.raw_dim ||
        data.n_text_tokens != encoder.n_text_tokens || data.vocab_size != encoder.vocab_size) {
      throw ConfigError(fmt::format(
          "data shape (patches {}x{}, {} tokens, vocab {}) disagrees with encoder (patches {}x{}, {} tokens, vocab {})",
          data.n_patches, data.raw_dim, data.n_text_tokens, data.vocab_size, encoder.n_patches, encoder.raw_dim,
          encoder.n_text_tokens, encoder.vocab_size));
    }
  } else if (data.num_classes < 2) {
    throw ConfigError("data.num_classes must be >= 2");
  }
  const auto prompts = effective_class_prompts();
  if (prompts.size() != data.num_classes) {
    throw ConfigError(fmt::format("class_prompts has {} entries for {} classes", prompts.size(), data.num_classes));
  }
  for (std::size_t k = 0; k < prompts.size(); ++k) {
    if (prompts[k].empty() || prompts[k].size() > encoder.n_text_tokens) {
      throw ConfigError(fmt::format("class_prompts[{}] must hold 1..{} token ids", k, encoder.n_text_tokens));
    }
    for (auto id : prompts[k]) {
      if (id >= encoder.vocab_size) throw ConfigError(fmt::format("class_prompts[{}] id {} outside vocabulary", k, id));
    }
  }
}

namespace {

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json parse_json(std::string_view text, std::string_view source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // byte is one past the offending character
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    if (auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw ConfigError(fmt::format("{}:{}:{}: {}", source, line, col, what));
  }
}

class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(fmt::format("{}: expected an object", where()));
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    convert(*it, out, child(key));
  }

  template <class Fn>
  void read_with(const char* key, Fn&& fn) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it != obj_.end()) fn(*it, child(key));
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(fmt::format("{}: unknown key", child(it.key())));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class U>
    requires(std::is_unsigned_v<U> && !std::is_same_v<U, bool>)
  static void convert(const json& j, U& out, const std::string& at) {
    if (!j.is_number_unsigned()) throw ConfigError(fmt::format("{}: expected a non-negative integer", at));
    out = j.get<U>();
  }
  static void convert(const json& j, double& out, const std::string& at) {
    if (!j.is_number()) throw ConfigError(fmt::format("{}: expected a number", at));
    out = j.get<double>();
  }
  static void convert(const json& j, bool& out, const std::string& at) {
    if (!j.is_boolean()) throw ConfigError(fmt::format("{}: expected true or false", at));
    out = j.get<bool>();
  }
  static void convert(const json& j, std::string& out, const std::string& at) {
    if (!j.is_string()) throw ConfigError(fmt::format("{}: expected a string", at));
    out = j.get<std::string>();
  }
  static void convert(const json& j, std::vector<std::size_t>& out, const std::string& at) {
    if (!j.is_array()) throw ConfigError(fmt::format("{}: expected an array of integers", at));
    out.clear();
    for (std::size_t i = 0; i < j.size(); ++i) {
      std::size_t v = 0;
      convert(j[i], v, fmt::format("{}[{}]", at, i));
      out.push_back(v);
    }
  }
  static void convert(const json& j, std::vector<std::vector<std::size_t>>& out, const std::string& at) {
    if (!j.is_array()) throw ConfigError(fmt::format("{}: expected an array of integer arrays", at));
    out.clear();
    for (std::size_t i = 0; i < j.size(); ++i) {
      std::vector<std::size_t> v;
      convert(j[i], v, fmt::format("{}[{}]", at, i));
      out.push_back(std::move(v));
    }
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_encoder(const json& j, const std::string& path, encoder::EncoderConfig& e) {
  ObjectReader r(j, path);
  r.read("num_layers", e.num_layers);
  r.read("d_v", e.d_v);
  r.read("d_t", e.d_t);
  r.read("num_heads", e.num_heads);
  r.read("n_patches", e.n_patches);
  r.read("raw_dim", e.raw_dim);
  r.read("n_text_tokens", e.n_text_tokens);
  r.read("vocab_size", e.vocab_size);
  r.read("d_joint", e.d_joint);
  r.read("mlp_ratio", e.mlp_ratio);
  r.finish();
}

void read_data(const json& j, const std::string& path, data::SyntheticSpec& d) {
  ObjectReader r(j, path);
  r.read("num_classes", d.num_classes);
  r.read("n_train", d.n_train);
  r.read("n_val", d.n_val);
  r.read("n_test", d.n_test);
  r.read("n_patches", d.n_patches);
  r.read("raw_dim", d.raw_dim);
  r.read("n_text_tokens", d.n_text_tokens);
  r.read("vocab_size", d.vocab_size);
  r.read("noise", d.noise);
  r.read("modality_split", d.modality_split);
  r.read("signal_rate", d.signal_rate);
  r.read("tokens_per_group", d.tokens_per_group);
  r.read("multi_label", d.multi_label);
  r.read("max_labels", d.max_labels);
  r.read("seed", d.seed);
  r.finish();
}

template <class Parse>
auto read_enum(Parse parse) {
  return [parse](auto& out) {
    return [parse, &out](const json& j, const std::string& at) {
      if (!j.is_string()) throw ConfigError(fmt::format("{}: expected a string", at));
      try {
        out = parse(j.get<std::string>());
      } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", at, e.what()));
      }
    };
  };
}

void read_config_object(const json& j, const std::string& path, RunConfig& c) {
  ObjectReader r(j, path);
  r.read_with("encoder", [&](const json& v, const std::string& at) { read_encoder(v, at, c.encoder); });
  r.read("interaction_layers", c.interaction_layers);
  r.read("prompt_length", c.prompt_length);
  r.read_with("similarity", read_enum(parse_similarity)(c.similarity));
  r.read_with("variant", read_enum(parse_variant)(c.variant));
  r.read("hub_hidden", c.hub_hidden);
  r.read_with("hub_input", read_enum(parse_hub_input)(c.hub_input));
  r.read("tau", c.tau);
  r.read("lr", c.lr);
  r.read("batch_size", c.batch_size);
  r.read("epochs", c.epochs);
  r.read("patience", c.patience);
  r.read("seed", c.seed);
  r.read("backbone_seed", c.backbone_seed);
  r.read("init_std", c.init_std);
  r.read_with("data", [&](const json& v, const std::string& at) { read_data(v, at, c.data); });
  r.read("data_path", c.data_path);
  r.read("train_fraction", c.train_fraction);
  r.read("class_prompts", c.class_prompts);
  r.read("encoder_weights", c.encoder_weights);
  r.finish();
}

}  // namespace

namespace detail {

json config_to_json(const RunConfig& c) {
  const auto& e = c.encoder;
  const auto& d = c.data;
  return json{
      {"encoder",
       {{"num_layers", e.num_layers},
        {"d_v", e.d_v},
        {"d_t", e.d_t},
        {"num_heads", e.num_heads},
        {"n_patches", e.n_patches},
        {"raw_dim", e.raw_dim},
        {"n_text_tokens", e.n_text_tokens},
        {"vocab_size", e.vocab_size},
        {"d_joint", e.d_joint},
        {"mlp_ratio", e.mlp_ratio}}},
      {"interaction_layers", c.interaction_layers},
      {"prompt_length", c.prompt_length},
      {"similarity", to_string(c.similarity)},
      {"variant", to_string(c.variant)},
      {"hub_hidden", c.hub_hidden},
      {"hub_input", to_string(c.hub_input)},
      {"tau", c.tau},
      {"lr", c.lr},
      {"batch_size", c.batch_size},
      {"epochs", c.epochs},
      {"patience", c.patience},
      {"seed", c.seed},
      {"backbone_seed", c.backbone_seed},
      {"init_std", c.init_std},
      {"data",
       {{"num_classes", d.num_classes},
        {"n_train", d.n_train},
        {"n_val", d.n_val},
        {"n_test", d.n_test},
        {"n_patches", d.n_patches},
        {"raw_dim", d.raw_dim},
        {"n_text_tokens", d.n_text_tokens},
        {"vocab_size", d.vocab_size},
        {"noise", d.noise},
        {"modality_split", d.modality_split},
        {"signal_rate", d.signal_rate},
        {"tokens_per_group", d.tokens_per_group},
        {"multi_label", d.multi_label},
        {"max_labels", d.max_labels},
        {"seed", d.seed}}},
      {"data_path", c.data_path},
      {"train_fraction", c.train_fraction},
      {"class_prompts", c.class_prompts},
      {"encoder_weights", c.encoder_weights},
  };
}

RunConfig config_from_json(const json& j, const std::string& path) {
  RunConfig c;
  read_config_object(j, path, c);
  return c;
}

}  // namespace detail

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

RunConfig parse_run_config(std::string_view text, std::string_view source) {
  const json j = parse_json(text, source);
  RunConfig c;
  try {
    c = detail::config_from_json(j, "");
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", source, e.what()));
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_text(path), path.string());
}

std::string to_json_string(const RunConfig& config, int indent) { return detail::config_to_json(config).dump(indent); }

namespace {

const std::set<std::string>& known_axes() {
  static const std::set<std::string> axes{"variant",       "interaction_layers", "similarity",
                                          "prompt_length", "train_fraction",     "seed"};
  return axes;
}

}  // namespace

SweepSpec parse_sweep(std::string_view text, std::string_view source) {
  const json j = parse_json(text, source);
  SweepSpec spec;
  try {
    ObjectReader r(j, "");
    r.read_with("base", [&](const json& v, const std::string& at) { read_config_object(v, at, spec.base); });
    r.read_with("axes", [&](const json& v, const std::string& at) {
      if (!v.is_object()) throw ConfigError(fmt::format("{}: expected an object", at));
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!known_axes().count(it.key())) {
          throw ConfigError(fmt::format("{}.{}: unknown axis (expected one of {})", at, it.key(),
                                        fmt::join(known_axes(), ", ")));
        }
        if (!it->is_array()) throw ConfigError(fmt::format("{}.{}: expected an array", at, it.key()));
        AxisValues axis{it.key(), {}};
        for (const auto& value : *it) axis.values.push_back(value.dump());
        spec.axes.push_back(std::move(axis));
      }
    });
    r.finish();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", source, e.what()));
  }
  // json sorts object keys; axes keep the order written in the file
  const auto ordered = nlohmann::ordered_json::parse(text.begin(), text.end());
  std::vector<AxisValues> in_order;
  for (const auto& [key, unused] : ordered.at("axes").items()) {
    for (auto& axis : spec.axes) {
      if (axis.name == key) in_order.push_back(std::move(axis));
    }
  }
  spec.axes = std::move(in_order);
  return spec;
}

SweepSpec load_sweep(const std::filesystem::path& path) { return parse_sweep(read_text(path), path.string()); }

void apply_axis(RunConfig& config, std::string_view axis, std::string_view value_json) {
  const json value = parse_json(value_json, axis);
  json patch = json::object();
  patch[std::string(axis)] = value;
  ObjectReader r(patch, "");
  const std::string at = fmt::format("axes.{}", axis);
  if (axis == "variant") {
    read_enum(parse_variant)(config.variant)(value, at);
    // a baseline cell has no prompts regardless of the base config
    if (config.variant == Variant::baseline) config.interaction_layers.clear();
  } else if (axis == "interaction_layers") {
    r.read("interaction_layers", config.interaction_layers);
  } else if (axis == "similarity") {
    read_enum(parse_similarity)(config.similarity)(value, at);
  } else if (axis == "prompt_length") {
    r.read("prompt_length", config.prompt_length);
  } else if (axis == "train_fraction") {
    r.read("train_fraction", config.train_fraction);
  } else if (axis == "seed") {
    r.read("seed", config.seed);
  } else {
    throw ConfigError(fmt::format("{}: unknown axis", at));
  }
}

}  // namespace mitp::harness
