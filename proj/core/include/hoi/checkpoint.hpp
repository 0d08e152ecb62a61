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
#include <string>
#include <utility>
#include <vector>

#include "hoi/knowledge.hpp"
#include "hoi/model.hpp"
#include "hoi/optim.hpp"
#include "hoi/tensor.hpp"

namespace hoi {

inline constexpr char kCheckpointMagic[4] = {'K', 'B', 'A', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct OptimizerRecord {
  double learning_rate = 0.0;
  double momentum = 0.0;
  double weight_decay = 0.0;
  std::vector<std::vector<double>> velocity;
};

/// Decoded checkpoint contents.
///
/// Layout, all integers and floats little-endian: magic "KBAN", u32 version,
/// hyperparameters, knowledge base, u64 iteration, u64 model seed, u64 data
/// seed, named tensors (name, rank, extents, f64 payload), optional optimizer
/// state, and a trailing crc32 over every preceding byte.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  ModelConfig config;
  KnowledgeBase kb;
  std::uint64_t iteration = 0;
  std::uint64_t model_seed = 0;
  std::uint64_t data_seed = 0;
  std::vector<std::pair<std::string, Tensor>> tensors;
  std::optional<OptimizerRecord> optimizer;
  std::uint32_t checksum = 0;
};

std::string encode_checkpoint(const Model& model, const SgdOptimizer* optimizer,
                              std::uint64_t iteration, std::uint64_t data_seed);
// Throws DataError on a bad magic, unknown version, checksum mismatch or
// malformed payload.
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const SgdOptimizer* optimizer, std::uint64_t iteration,
                     std::uint64_t data_seed);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies the checkpoint's tensors into model. Throws ConfigError when the
// hyperparameters, vocabulary sizes or tensor names and shapes differ.
void restore_parameters(Model& model, const Checkpoint& checkpoint);
Model model_from_checkpoint(const Checkpoint& checkpoint);
// Optimizer with the stored hyperparameters and velocity, if present.
std::optional<SgdOptimizer> optimizer_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace hoi
