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

#include <random>
#include <span>
#include <string>
#include <vector>

#include "hoi/attention.hpp"
#include "hoi/knowledge.hpp"
#include "hoi/pairs.hpp"
#include "hoi/params.hpp"
#include "hoi/tensor.hpp"

namespace hoi {

// Width of the feature vector extracted from a pose or spatial map.
inline constexpr std::size_t kMapFeatureDim = 32;
// Base query: object embedding, pose features, spatial features.
inline constexpr std::size_t kBaseQueryDim = kEmbeddingDim + 2 * kMapFeatureDim;

/// conv(C->4, 5x5, stride 2) -> relu -> conv(4->8, 5x5, stride 2) -> relu ->
/// flatten -> affine -> 32 features, for a [C×64×64] map.
struct ConvStackParams {
  Tensor conv1_kernels;
  Tensor conv1_bias;
  Tensor conv2_kernels;
  Tensor conv2_bias;
  Tensor fc_weight;
  Tensor fc_bias;

  static ConvStackParams create(ParameterStore& store, const std::string& prefix,
                                std::size_t in_channels, std::mt19937_64& rng);
};

Tensor conv_features(const Tensor& map, const ConvStackParams& params);

struct QueryBuilderParams {
  ConvStackParams pose;
  ConvStackParams spatial;
  Tensor projection_weight;  // [(96 + 32)×d]
  Tensor projection_bias;    // [d]

  static QueryBuilderParams create(ParameterStore& store, const std::string& prefix,
                                   std::size_t dim, std::mt19937_64& rng);
};

struct DecoderLayerParams {
  AttentionParams cross;

  static DecoderLayerParams create(ParameterStore& store, const std::string& prefix,
                                   std::size_t dim, std::mt19937_64& rng);
};

// One binary classifier per verb: score_v = sigmoid(weight[v]·clue + bias[v]).
struct VerbClassifierBank {
  Tensor weight;  // [V×d]
  Tensor bias;    // [V×1]

  static VerbClassifierBank create(ParameterStore& store, const std::string& prefix,
                                   std::size_t num_verbs, std::size_t dim, std::mt19937_64& rng);
};

// [object_embed(class) ∥ pose features ∥ spatial features], rank 1, width 96.
Tensor build_base_query(const PairProposal& pair, int object_class, const KnowledgeBase& kb,
                        const QueryBuilderParams& params);

/// One projected query per verb: row i = affine([base ∥ verb_embed(verbs[i])]).
/// With knowledge augmentation disabled the verb embedding is replaced by
/// zeros. base may be rank 1 ([96]) for a single pair, or a [P×96] matrix
/// together with row_pair naming the base row of every output row.
Tensor augment_queries(const Tensor& base, std::span<const int> verbs, const KnowledgeBase& kb,
                       const QueryBuilderParams& params, bool knowledge_augmentation = true);
Tensor augment_queries(const Tensor& base, std::span<const std::size_t> row_pair,
                       std::span<const int> verbs, const KnowledgeBase& kb,
                       const QueryBuilderParams& params, bool knowledge_augmentation = true);

// Per layer, the softmax weights of every head ([queries×keys] each).
struct DecoderTrace {
  std::vector<AttentionTrace> layers;
};

/// Stacked cross-attention from queries to encoder outputs with residual
/// updates of the queries. Queries never attend to one another, so rows of
/// several pairs may be decoded together.
Tensor decoder_forward(const Tensor& queries, const Tensor& encoded,
                       std::span<const DecoderLayerParams> layers, std::size_t heads,
                       DecoderTrace* trace = nullptr);

// Row i of clues is scored by the classifier of verbs[i]; result is [rows].
Tensor verb_scores(const Tensor& clues, std::span<const int> verbs, const VerbClassifierBank& bank);

}  // namespace hoi
