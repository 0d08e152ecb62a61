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
#include <span>
#include <vector>

#include "hoi/decoder.hpp"
#include "hoi/encoder.hpp"
#include "hoi/fusion.hpp"
#include "hoi/knowledge.hpp"
#include "hoi/pairs.hpp"
#include "hoi/params.hpp"
#include "hoi/scene.hpp"

namespace hoi {

struct ModelConfig {
  // 0 encoder layers selects decoder-only mode: the decoder attends over the
  // projected instance features and no interactiveness matrix exists.
  std::size_t encoder_layers = 2;
  // 0 decoder layers scores the verb-augmented queries directly.
  std::size_t decoder_layers = 2;
  std::size_t model_dim = 32;
  std::size_t heads = 4;
  std::size_t appearance_dim = 16;
  std::size_t hidden_dim = 64;
  bool knowledge_augmentation = true;

  void validate() const;
};

// Scene indices of the instances that take part in encoding.
struct InstanceSelection {
  std::vector<std::size_t> humans;
  std::vector<std::size_t> objects;
};

InstanceSelection select_instances(const Scene& scene, ProposalThresholds thresholds);

struct SceneEncoding {
  InstanceSelection selection;
  std::vector<int> row_ids;    // instance id of every feature row
  Tensor features;             // [(M+N)×d], selected humans then selected objects
  std::vector<Tensor> m_att;   // per encoder layer, [N×M] in selection order
  std::vector<EncoderLayerTrace> trace;

  std::size_t human_row(std::size_t scene_index) const;   // column of m_att
  std::size_t object_row(std::size_t scene_index) const;  // row of m_att
};

struct PairScores {
  std::vector<std::size_t> row_pair;  // owning pair of every decoder row
  std::vector<int> row_verb;          // verb of every decoder row
  Tensor s_r;                         // [R]
  Tensor s_c;                         // [P×V]
  DecoderTrace trace;
};

/// Parameters and forward passes of the full relation-parsing model.
///
/// encode() depends only on the scene; score_pairs() reuses one encoding for
/// every pair it is given.
class Model {
 public:
  Model(ModelConfig config, KnowledgeBase kb, std::uint64_t seed);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return config_; }
  const KnowledgeBase& knowledge() const { return kb_; }
  std::uint64_t seed() const { return seed_; }
  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }

  SceneEncoding encode(const Scene& scene, const InstanceSelection& selection,
                       bool keep_trace = false) const;
  PairScores score_pairs(const Scene& scene, const SceneEncoding& encoding,
                         std::span<const PairProposal> pairs, bool keep_trace = false) const;

  EncoderInputParams input;
  std::vector<GpmLayerParams> encoder;
  QueryBuilderParams query;
  std::vector<DecoderLayerParams> decoder;
  VerbClassifierBank classifiers;
  ComplementaryStreamParams complementary;

 private:
  ModelConfig config_;
  KnowledgeBase kb_;
  std::uint64_t seed_;
  ParameterStore store_;
};

}  // namespace hoi
