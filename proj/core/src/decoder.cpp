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
#include "hoi/decoder.hpp"

#include "hoi/errors.hpp"
#include "hoi/ops.hpp"

namespace hoi {

namespace {

constexpr std::size_t kConv1Filters = 4;
constexpr std::size_t kConv2Filters = 8;
constexpr std::size_t kKernel = 5;
constexpr std::size_t kStride = 2;
constexpr std::size_t kConv1Out = (kMapSize - kKernel) / kStride + 1;
constexpr std::size_t kConv2Out = (kConv1Out - kKernel) / kStride + 1;
constexpr std::size_t kFlatDim = kConv2Filters * kConv2Out * kConv2Out;

}  // namespace

ConvStackParams ConvStackParams::create(ParameterStore& store, const std::string& prefix,
                                        std::size_t in_channels, std::mt19937_64& rng) {
  ConvStackParams p;
  const std::size_t fan1 = in_channels * kKernel * kKernel;
  const std::size_t fan2 = kConv1Filters * kKernel * kKernel;
  p.conv1_kernels =
      store.add_uniform(prefix + ".conv1_kernels", {kConv1Filters, in_channels, kKernel, kKernel}, fan1, rng);
  p.conv1_bias = store.add_zeros(prefix + ".conv1_bias", {kConv1Filters});
  p.conv2_kernels =
      store.add_uniform(prefix + ".conv2_kernels", {kConv2Filters, kConv1Filters, kKernel, kKernel}, fan2, rng);
  p.conv2_bias = store.add_zeros(prefix + ".conv2_bias", {kConv2Filters});
  p.fc_weight = store.add_uniform(prefix + ".fc_weight", {kFlatDim, kMapFeatureDim}, kFlatDim, rng);
  p.fc_bias = store.add_zeros(prefix + ".fc_bias", {kMapFeatureDim});
  return p;
}

Tensor conv_features(const Tensor& map, const ConvStackParams& params) {
  Tensor x = ops::relu(ops::conv2d(map, params.conv1_kernels, params.conv1_bias, kStride));
  x = ops::relu(ops::conv2d(x, params.conv2_kernels, params.conv2_bias, kStride));
  return ops::linear(ops::flatten(x), params.fc_weight, params.fc_bias);
}

QueryBuilderParams QueryBuilderParams::create(ParameterStore& store, const std::string& prefix,
                                              std::size_t dim, std::mt19937_64& rng) {
  QueryBuilderParams p;
  p.pose = ConvStackParams::create(store, prefix + ".pose", 1, rng);
  p.spatial = ConvStackParams::create(store, prefix + ".spatial", 2, rng);
  const std::size_t in = kBaseQueryDim + kEmbeddingDim;
  p.projection_weight = store.add_uniform(prefix + ".projection_weight", {in, dim}, in, rng);
  p.projection_bias = store.add_zeros(prefix + ".projection_bias", {dim});
  return p;
}

DecoderLayerParams DecoderLayerParams::create(ParameterStore& store, const std::string& prefix,
                                              std::size_t dim, std::mt19937_64& rng) {
  return {AttentionParams::create(store, prefix + ".cross", dim, rng)};
}

VerbClassifierBank VerbClassifierBank::create(ParameterStore& store, const std::string& prefix,
                                              std::size_t num_verbs, std::size_t dim,
                                              std::mt19937_64& rng) {
  VerbClassifierBank bank;
  bank.weight = store.add_uniform(prefix + ".weight", {num_verbs, dim}, dim, rng);
  bank.bias = store.add_zeros(prefix + ".bias", {num_verbs, 1});
  return bank;
}

Tensor build_base_query(const PairProposal& pair, int object_class, const KnowledgeBase& kb,
                        const QueryBuilderParams& params) {
  if (!pair.pose.grid.defined() || !pair.spatial.grid.defined()) {
    throw DataError("pair " + std::to_string(pair.human_id) + ":" + std::to_string(pair.object_id) +
                    " has no rendered maps");
  }
  const Tensor parts[] = {kb.object_embedding(object_class), conv_features(pair.pose.grid, params.pose),
                          conv_features(pair.spatial.grid, params.spatial)};
  return ops::concat_last_axis(parts);
}

Tensor augment_queries(const Tensor& base, std::span<const int> verbs, const KnowledgeBase& kb,
                       const QueryBuilderParams& params, bool knowledge_augmentation) {
  if (base.rank() != 1) throw ShapeError("augment_queries: single-pair base query must be rank 1");
  const std::vector<std::size_t> row_pair(verbs.size(), 0);
  return augment_queries(ops::reshape(base, {1, base.dim(0)}), row_pair, verbs, kb, params,
                         knowledge_augmentation);
}

Tensor augment_queries(const Tensor& base, std::span<const std::size_t> row_pair,
                       std::span<const int> verbs, const KnowledgeBase& kb,
                       const QueryBuilderParams& params, bool knowledge_augmentation) {
  if (verbs.empty()) throw DataError("augment_queries: empty verb set");
  if (row_pair.size() != verbs.size()) {
    throw ShapeError("augment_queries: " + std::to_string(row_pair.size()) + " row owners for " +
                     std::to_string(verbs.size()) + " verbs");
  }
  if (base.rank() != 2 || base.dim(1) != kBaseQueryDim) {
    throw ShapeError("augment_queries: base queries must be [P×96], got " + shape_string(base.shape()));
  }
  std::vector<double> verb_rows(verbs.size() * kEmbeddingDim, 0.0);
  if (knowledge_augmentation) {
    const auto table = kb.verb_embed().data();
    for (std::size_t r = 0; r < verbs.size(); ++r) {
      if (verbs[r] < 0 || verbs[r] >= kb.num_verbs()) {
        throw DataError("augment_queries: unknown verb " + std::to_string(verbs[r]));
      }
      std::copy_n(table.data() + static_cast<std::size_t>(verbs[r]) * kEmbeddingDim, kEmbeddingDim,
                  verb_rows.data() + r * kEmbeddingDim);
    }
  }
  const Tensor parts[] = {ops::gather_rows(base, row_pair),
                          Tensor({verbs.size(), kEmbeddingDim}, std::move(verb_rows))};
  return ops::linear(ops::concat_last_axis(parts), params.projection_weight, params.projection_bias);
}

Tensor decoder_forward(const Tensor& queries, const Tensor& encoded,
                       std::span<const DecoderLayerParams> layers, std::size_t heads,
                       DecoderTrace* trace) {
  if (encoded.rank() != 2 || encoded.dim(0) == 0) {
    throw ShapeError("decoder_forward: empty encoder output");
  }
  if (queries.rank() != 2 || queries.dim(1) != encoded.dim(1)) {
    throw ShapeError("decoder_forward: queries " + shape_string(queries.shape()) +
                     " do not match encoder output " + shape_string(encoded.shape()));
  }
  if (trace) trace->layers.assign(layers.size(), {});
  Tensor q = queries;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    q = multi_head_attention(q, encoded, layers[l].cross, heads, trace ? &trace->layers[l] : nullptr);
  }
  return q;
}

Tensor verb_scores(const Tensor& clues, std::span<const int> verbs, const VerbClassifierBank& bank) {
  if (clues.rank() != 2 || clues.dim(0) != verbs.size()) {
    throw ShapeError("verb_scores: " + std::to_string(verbs.size()) + " verbs for clues " +
                     shape_string(clues.shape()));
  }
  const std::size_t num_verbs = bank.weight.dim(0);
  std::vector<std::size_t> index(verbs.size());
  for (std::size_t r = 0; r < verbs.size(); ++r) {
    if (verbs[r] < 0 || static_cast<std::size_t>(verbs[r]) >= num_verbs) {
      throw ShapeError("verb_scores: no classifier for verb " + std::to_string(verbs[r]));
    }
    index[r] = static_cast<std::size_t>(verbs[r]);
  }
  const std::size_t d = clues.dim(1);
  const Tensor products = ops::mul(clues, ops::gather_rows(bank.weight, index));
  const Tensor logits = ops::add(ops::matmul(products, Tensor::full({d, 1}, 1.0)),
                                 ops::gather_rows(bank.bias, index));
  return ops::reshape(ops::sigmoid(logits), {verbs.size()});
}

}  // namespace hoi
