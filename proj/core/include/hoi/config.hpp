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
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "hoi/fusion.hpp"
#include "hoi/model.hpp"
#include "hoi/synth.hpp"
#include "hoi/training.hpp"

namespace hoi {

/// Every tunable of a run, grouped as in its JSON form:
///
///   {"synth": {...}, "model": {...}, "train": {...}, "inference": {...},
///    "paths": {"data": ..., "out": ...}}
///
/// Keys are the member names of the corresponding structs. synth.snr takes a
/// number or a preset name ("low", "medium", "high"); train.preset, when
/// present, seeds learning rate and weight decay before the other train keys
/// apply.
struct RunConfig {
  SynthConfig synth;
  ModelConfig model;
  std::uint64_t model_seed = 1;
  TrainConfig train;
  InferenceConfig inference;
  std::filesystem::path data_dir = "data";
  std::filesystem::path out_dir = "out";

  void validate() const;
};

// Applies the optional JSON file, then each "dotted.key=value" override in
// order. Values parse as JSON when possible and as strings otherwise.
// Unknown keys and ill-typed values throw ConfigError.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                          std::span<const std::string> overrides = {});
RunConfig run_config_from_json(const std::string& text, std::span<const std::string> overrides = {});
std::string run_config_to_json(const RunConfig& config);

}  // namespace hoi
