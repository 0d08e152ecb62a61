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
#include "hoi/params.hpp"
#include "hoi/tensor.hpp"

namespace hoi {

// Projections of the cross-group dual attention, all [d×d], no bias. Only the
// object side has a query map and only the human side a key map: one logit
// matrix per head serves both directions.
struct DualAttentionParams {
  Tensor object_query;
  Tensor human_key;
  Tensor human_value;
  Tensor object_value;

  static DualAttentionParams create(ParameterStore& store, const std::string& prefix,
                                    std::size_t dim, std::mt19937_64& rng);
};

// One group-aware parsing layer: separate self-attention for the human and
// object groups followed by dual attention between them.
struct GpmLayerParams {
  AttentionParams human_self;
  AttentionParams object_self;
  DualAttentionParams dual;

  static GpmLayerParams create(ParameterStore& store, const std::string& prefix, std::size_t dim,
                               std::mt19937_64& rng);
};

// Per-head logits actually used by each direction of one dual attention call.
// object_logits[h] is [N_obj×M_hum]; human_logits[h] is [M_hum×N_obj].
struct DualAttentionTrace {
  std::vector<Tensor> object_logits;
  std::vector<Tensor> human_logits;
};

struct DualAttentionOutput {
  Tensor humans;   // [M×d]
  Tensor objects;  // [N×d]
  Tensor m_att;    // [N×M], sigmoid of the head-averaged logits
};

/// Sigmoid-gated, max-pooled attention between the two groups.
///
/// Per head, A = (o·W_q)_h (h·W_k)_hᵀ / sqrt(d_h). Objects receive
/// max_j sigmoid(A)[i,j] * (h·W_v^h)_h[j,:] and humans receive the same
/// construction over Aᵀ with (o·W_v^o)_h. Heads are concatenated and added to
/// the inputs.
DualAttentionOutput dual_attention(const Tensor& humans, const Tensor& objects,
                                   const DualAttentionParams& params, std::size_t heads,
                                   DualAttentionTrace* trace = nullptr);

// Appearance and position-code projections whose sum is the encoder input.
struct EncoderInputParams {
  Tensor appearance_weight;  // [d_app×d]
  Tensor appearance_bias;    // [d]
  Tensor position_weight;    // [5×d]
  Tensor position_bias;      // [d]

  static EncoderInputParams create(ParameterStore& store, const std::string& prefix,
                                   std::size_t appearance_dim, std::size_t dim,
                                   std::mt19937_64& rng);
};

// appearance [n×d_app] and position codes [n×5] -> [n×d].
Tensor encoder_input(const Tensor& appearance, const Tensor& position_codes,
                     const EncoderInputParams& params);

struct GroupSplit {
  std::vector<std::size_t> humans;   // row indices, input order
  std::vector<std::size_t> objects;  // row indices, input order
};

GroupSplit group_split(const std::vector<bool>& is_human);

Tensor intra_group_attention(const Tensor& x, const AttentionParams& params, std::size_t heads);

struct EncoderLayerTrace {
  DualAttentionTrace dual;
};

struct EncoderOutput {
  Tensor features;             // [n×d], same row order as the input
  std::vector<Tensor> m_att;   // one [N_obj×M_hum] matrix per layer; empty if a group is empty
  std::vector<EncoderLayerTrace> layers;
};

/// Runs the stacked layers over instance features. Rows flagged human form the
/// human group; every other row belongs to the object group. With an empty
/// group the dual attention is skipped and no m_att is produced.
EncoderOutput encoder_forward(const Tensor& features, const std::vector<bool>& is_human,
                              std::span<const GpmLayerParams> layers, std::size_t heads,
                              bool keep_trace = false);

// Mean over layers of bce(m_att, gt); gt is [N_obj×M_hum] binary.
Tensor interactiveness_loss(std::span<const Tensor> m_att, const Tensor& gt);

}  // namespace hoi
