// Copyright 2026 The hoi-relparse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "hoi/config.hpp"

#include "hoi/errors.hpp"
#include "hoi/io.hpp"
#include "json.hpp"

namespace hoi {

using nlohmann::json;

namespace {

json to_json(const RunConfig& c) {
  const auto& s = c.synth;
  const auto& t = c.train;
  return {
      {"synth",
       {{"train_scenes", s.train_scenes},
        {"val_scenes", s.val_scenes},
        {"test_scenes", s.test_scenes},
        {"min_humans", s.min_humans},
        {"max_humans", s.max_humans},
        {"min_objects", s.min_objects},
        {"max_objects", s.max_objects},
        {"num_object_classes", s.num_object_classes},
        {"num_verbs", s.num_verbs},
        {"cooccur_density", s.cooccur_density},
        {"interaction_prob", s.interaction_prob},
        {"second_verb_prob", s.second_verb_prob},
        {"appearance_dim", s.appearance_dim},
        {"snr", s.snr},
        {"image_width", s.image_width},
        {"image_height", s.image_height},
        {"seed", s.seed}}},
      {"model",
       {{"encoder_layers", c.model.encoder_layers},
        {"decoder_layers", c.model.decoder_layers},
        {"model_dim", c.model.model_dim},
        {"heads", c.model.heads},
        {"hidden_dim", c.model.hidden_dim},
        {"knowledge_augmentation", c.model.knowledge_augmentation},
        {"seed", c.model_seed}}},
      {"train",
       {{"iterations", t.iterations},
        {"learning_rate", t.learning_rate},
        {"lr_decay_steps", t.lr_decay_steps},
        {"lr_decay", t.lr_decay},
        {"momentum", t.momentum},
        {"weight_decay", t.weight_decay},
        {"grad_clip", t.grad_clip},
        {"batch_size", t.batch_size},
        {"log_interval", t.log_interval},
        {"eval_interval", t.eval_interval},
        {"seed", t.seed}}},
      {"inference",
       {{"t_human", c.inference.thresholds.human},
        {"t_object", c.inference.thresholds.object},
        {"suppression_threshold", c.inference.suppression_threshold}}},
      {"paths", {{"data", c.data_dir.string()}, {"out", c.out_dir.string()}}},
  };
}

// Copies keys of src into dst, rejecting any key dst does not already have.
void merge(json& dst, const json& src, const std::string& prefix) {
  if (!src.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
  if (prefix == "train" && src.contains("preset")) {
    if (!src.at("preset").is_string()) throw ConfigError("config key 'train.preset' must be a string");
    const TrainConfig preset = train_preset(src.at("preset").get<std::string>());
    dst["learning_rate"] = preset.learning_rate;
    dst["weight_decay"] = preset.weight_decay;
  }
  for (const auto& [key, value] : src.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (prefix == "train" && key == "preset") continue;
    if (!dst.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    if (dst[key].is_object()) {
      merge(dst[key], value, path);
    } else {
      dst[key] = value;
    }
  }
}

template <typename T>
void take(const json& j, const char* key, T& out, const std::string& section) {
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + section + "." + key + "' has the wrong type");
  }
}

void take_count(const json& j, const char* key, std::size_t& out, const std::string& section) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ConfigError("config key '" + section + "." + key + "' must be a nonnegative integer");
  }
  out = v.get<std::size_t>();
}

void take_seed(const json& j, const char* key, std::uint64_t& out, const std::string& section) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError("config key '" + section + "." + key + "' must be a nonnegative integer");
  }
  out = v.get<std::uint64_t>();
}

RunConfig from_json(const json& j) {
  RunConfig c;
  const json& s = j.at("synth");
  take_count(s, "train_scenes", c.synth.train_scenes, "synth");
  take_count(s, "val_scenes", c.synth.val_scenes, "synth");
  take_count(s, "test_scenes", c.synth.test_scenes, "synth");
  take(s, "min_humans", c.synth.min_humans, "synth");
  take(s, "max_humans", c.synth.max_humans, "synth");
  take(s, "min_objects", c.synth.min_objects, "synth");
  take(s, "max_objects", c.synth.max_objects, "synth");
  take(s, "num_object_classes", c.synth.num_object_classes, "synth");
  take(s, "num_verbs", c.synth.num_verbs, "synth");
  take(s, "cooccur_density", c.synth.cooccur_density, "synth");
  take(s, "interaction_prob", c.synth.interaction_prob, "synth");
  take(s, "second_verb_prob", c.synth.second_verb_prob, "synth");
  take_count(s, "appearance_dim", c.synth.appearance_dim, "synth");
  if (s.at("snr").is_string()) {
    c.synth.snr = snr_preset(s.at("snr").get<std::string>());
  } else {
    take(s, "snr", c.synth.snr, "synth");
  }
  take(s, "image_width", c.synth.image_width, "synth");
  take(s, "image_height", c.synth.image_height, "synth");
  take_seed(s, "seed", c.synth.seed, "synth");

  const json& m = j.at("model");
  take_count(m, "encoder_layers", c.model.encoder_layers, "model");
  take_count(m, "decoder_layers", c.model.decoder_layers, "model");
  take_count(m, "model_dim", c.model.model_dim, "model");
  take_count(m, "heads", c.model.heads, "model");
  take_count(m, "hidden_dim", c.model.hidden_dim, "model");
  take(m, "knowledge_augmentation", c.model.knowledge_augmentation, "model");
  take_seed(m, "seed", c.model_seed, "model");
  c.model.appearance_dim = c.synth.appearance_dim;

  const json& t = j.at("train");
  take_count(t, "iterations", c.train.iterations, "train");
  take(t, "learning_rate", c.train.learning_rate, "train");
  take(t, "lr_decay_steps", c.train.lr_decay_steps, "train");
  take(t, "lr_decay", c.train.lr_decay, "train");
  take(t, "momentum", c.train.momentum, "train");
  take(t, "weight_decay", c.train.weight_decay, "train");
  take(t, "grad_clip", c.train.grad_clip, "train");
  take_count(t, "batch_size", c.train.batch_size, "train");
  take_count(t, "log_interval", c.train.log_interval, "train");
  take_count(t, "eval_interval", c.train.eval_interval, "train");
  take_seed(t, "seed", c.train.seed, "train");

  const json& inf = j.at("inference");
  take(inf, "t_human", c.inference.thresholds.human, "inference");
  take(inf, "t_object", c.inference.thresholds.object, "inference");
  take(inf, "suppression_threshold", c.inference.suppression_threshold, "inference");
  c.train.thresholds = c.inference.thresholds;

  std::string data, out;
  take(j.at("paths"), "data", data, "paths");
  take(j.at("paths"), "out", out, "paths");
  c.data_dir = data;
  c.out_dir = out;
  return c;
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

RunConfig build(const json* file, std::span<const std::string> overrides) {
  json doc = to_json(RunConfig{});
  if (file) merge(doc, *file, "");
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + item + "' is not of the form key=value");
    }
    const std::string key = item.substr(0, eq);
    json nested = parse_value(item.substr(eq + 1));
    std::string rest = key;
    std::vector<std::string> parts;
    for (std::size_t dot; (dot = rest.find('.')) != std::string::npos; rest = rest.substr(dot + 1)) {
      parts.push_back(rest.substr(0, dot));
    }
    parts.push_back(rest);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) nested = json{{*it, nested}};
    merge(doc, nested, "");
  }
  RunConfig config = from_json(doc);
  config.validate();
  return config;
}

}  // namespace

void RunConfig::validate() const {
  synth.validate();
  model.validate();
  train.validate();
  for (double v : {inference.thresholds.human, inference.thresholds.object, inference.suppression_threshold}) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("inference thresholds must lie in [0, 1]");
  }
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                          std::span<const std::string> overrides) {
  if (!file) return build(nullptr, overrides);
  std::string text;
  try {
    text = read_text(*file);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return run_config_from_json(text, overrides);
}

RunConfig run_config_from_json(const std::string& text, std::span<const std::string> overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config JSON: ") + e.what());
  }
  return build(&doc, overrides);
}

std::string run_config_to_json(const RunConfig& config) { return to_json(config).dump(2); }

}  // namespace hoi
