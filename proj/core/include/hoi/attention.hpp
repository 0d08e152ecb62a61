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
#include <string>
#include <vector>

#include "hoi/params.hpp"
#include "hoi/tensor.hpp"

namespace hoi {

// Projections of one multi-head softmax attention block, all [d×d], no bias.
struct AttentionParams {
  Tensor query;
  Tensor key;
  Tensor value;
  Tensor output;

  static AttentionParams create(ParameterStore& store, const std::string& prefix, std::size_t dim,
                                std::mt19937_64& rng);
};

// Softmax weights of every head, each [rows×keys].
struct AttentionTrace {
  std::vector<Tensor> weights;
};

/// Multi-head scaled dot-product attention with a residual connection:
///
///   out = queries + concat_h(softmax(Q_h K_hᵀ / sqrt(d_h)) V_h) · W_o
///
/// where Q = queries·W_q, K = keys·W_k, V = keys·W_v and d_h = d / heads.
/// Self-attention passes the same tensor for both arguments.
Tensor multi_head_attention(const Tensor& queries, const Tensor& keys, const AttentionParams& params,
                            std::size_t heads, AttentionTrace* trace = nullptr);

}  // namespace hoi
