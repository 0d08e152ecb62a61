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

#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hoi/decoder.hpp"
#include "hoi/pairs.hpp"
#include "hoi/params.hpp"
#include "hoi/scene.hpp"
#include "hoi/tensor.hpp"

namespace hoi {

class Model;

// [v_h ∥ v_o ∥ spatial features] -> affine -> relu -> affine -> sigmoid, one
// output per verb. The spatial extractor has its own weights.
struct ComplementaryStreamParams {
  ConvStackParams spatial;
  Tensor hidden_weight;  // [(2·d_app + 32)×hidden]
  Tensor hidden_bias;    // [hidden]
  Tensor output_weight;  // [hidden×V]
  Tensor output_bias;    // [V]

  static ComplementaryStreamParams create(ParameterStore& store, const std::string& prefix,
                                          std::size_t appearance_dim, std::size_t hidden_dim,
                                          std::size_t num_verbs, std::mt19937_64& rng);
};

// Batched over pairs: human/object appearance [P×d_app], spatial maps of the
// same pairs. Returns [P×V].
Tensor complementary_scores(const Tensor& human_appearance, const Tensor& object_appearance,
                            std::span<const Tensor> spatial_maps,
                            const ComplementaryStreamParams& params);

// s_h · s_o · (s_r + s_c) / 2 with a single final rounding. Throws DataError for
// inputs outside [0, 1].
double fuse(double s_h, double s_o, double s_r, double s_c);

// Keeps pair k iff m_att[object_rows[k], human_rows[k]] >= threshold. Order
// is preserved; returns indices into the input sequence.
std::vector<std::size_t> suppress(const Tensor& m_att, std::span<const std::size_t> object_rows,
                                  std::span<const std::size_t> human_rows, double threshold);

struct ScoredTriplet {
  int scene_id = 0;
  int human_id = 0;
  BoundingBox human_box;
  double human_score = 0.0;
  int object_id = 0;
  BoundingBox object_box;
  int object_class = 0;
  double object_score = 0.0;
  int verb = 0;
  double s_r = 0.0;
  double s_c = 0.0;
  double score = 0.0;  // fused
};

// Descending score, then ascending (human id, object id, verb).
bool triplet_order(const ScoredTriplet& a, const ScoredTriplet& b);

struct InferenceConfig {
  ProposalThresholds thresholds = kVcocoThresholds;
  double suppression_threshold = 0.1;
};

// Decoder attention for one pair, keyed by instance id.
struct AttentionRecord {
  int verb = 0;
  std::size_t layer = 0;
  std::size_t head = 0;
  int instance_id = 0;
  double weight = 0.0;
};

struct DetectOptions {
  // When set, decoder attention rows of this (human id, object id) pair are
  // collected into attention_dump.
  std::optional<std::pair<int, int>> dump_pair;
};

struct DetectResult {
  std::vector<ScoredTriplet> triplets;
  std::vector<AttentionRecord> attention_dump;
  std::size_t proposals = 0;
  std::size_t retained = 0;
};

/// Full inference for one scene: proposals, encoding, suppression, decoding,
/// scoring and fusion. One triplet per retained pair and co-occurring verb.
DetectResult detect(const Scene& scene, const Model& model, const InferenceConfig& config,
                    const DetectOptions& options = {});

}  // namespace hoi
