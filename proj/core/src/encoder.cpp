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
#include "hoi/encoder.hpp"

#include <cmath>

#include "hoi/errors.hpp"
#include "hoi/ops.hpp"

namespace hoi {

DualAttentionParams DualAttentionParams::create(ParameterStore& store, const std::string& prefix,
                                                std::size_t dim, std::mt19937_64& rng) {
  DualAttentionParams p;
  p.object_query = store.add_uniform(prefix + ".object_query", {dim, dim}, dim, rng);
  p.human_key = store.add_uniform(prefix + ".human_key", {dim, dim}, dim, rng);
  p.human_value = store.add_uniform(prefix + ".human_value", {dim, dim}, dim, rng);
  p.object_value = store.add_uniform(prefix + ".object_value", {dim, dim}, dim, rng);
  return p;
}

GpmLayerParams GpmLayerParams::create(ParameterStore& store, const std::string& prefix,
                                      std::size_t dim, std::mt19937_64& rng) {
  GpmLayerParams p;
  p.human_self = AttentionParams::create(store, prefix + ".human_self", dim, rng);
  p.object_self = AttentionParams::create(store, prefix + ".object_self", dim, rng);
  p.dual = DualAttentionParams::create(store, prefix + ".dual", dim, rng);
  return p;
}

EncoderInputParams EncoderInputParams::create(ParameterStore& store, const std::string& prefix,
                                              std::size_t appearance_dim, std::size_t dim,
                                              std::mt19937_64& rng) {
  EncoderInputParams p;
  p.appearance_weight =
      store.add_uniform(prefix + ".appearance_weight", {appearance_dim, dim}, appearance_dim, rng);
  p.appearance_bias = store.add_zeros(prefix + ".appearance_bias", {dim});
  p.position_weight = store.add_uniform(prefix + ".position_weight", {5, dim}, 5, rng);
  p.position_bias = store.add_zeros(prefix + ".position_bias", {dim});
  return p;
}

Tensor encoder_input(const Tensor& appearance, const Tensor& position_codes,
                     const EncoderInputParams& params) {
  if (appearance.dim(0) != position_codes.dim(0)) {
    throw ShapeError("encoder_input: " + shape_string(appearance.shape()) + " appearance rows vs " +
                     shape_string(position_codes.shape()) + " position rows");
  }
  return ops::add(ops::linear(appearance, params.appearance_weight, params.appearance_bias),
                  ops::linear(position_codes, params.position_weight, params.position_bias));
}

DualAttentionOutput dual_attention(const Tensor& humans, const Tensor& objects,
                                   const DualAttentionParams& params, std::size_t heads,
                                   DualAttentionTrace* trace) {
  if (humans.rank() != 2 || objects.rank() != 2 || humans.dim(0) == 0 || objects.dim(0) == 0) {
    throw ShapeError("dual_attention: both groups must be non-empty matrices");
  }
  const std::size_t d = humans.dim(1);
  if (objects.dim(1) != d) {
    throw ShapeError("dual_attention: feature widths differ, " + shape_string(humans.shape()) +
                     " vs " + shape_string(objects.shape()));
  }
  if (heads == 0 || d % heads != 0) {
    throw ShapeError("model dimension " + std::to_string(d) + " is not divisible by " +
                     std::to_string(heads) + " heads");
  }
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  const Tensor q_obj = ops::matmul(objects, params.object_query);
  const Tensor k_hum = ops::matmul(humans, params.human_key);
  const Tensor v_hum = ops::matmul(humans, params.human_value);
  const Tensor v_obj = ops::matmul(objects, params.object_value);

  std::vector<Tensor> logits;
  std::vector<Tensor> obj_heads;
  std::vector<Tensor> hum_heads;
  if (trace) {
    trace->object_logits.clear();
    trace->human_logits.clear();
  }
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor a = ops::scale(
        ops::matmul(ops::slice_cols(q_obj, h * dh, dh), ops::transpose(ops::slice_cols(k_hum, h * dh, dh))),
        inv_sqrt);
    const Tensor a_t = ops::transpose(a);
    obj_heads.push_back(ops::max_pool_axis1(
        ops::broadcast_expand_mul(ops::sigmoid(a), ops::slice_cols(v_hum, h * dh, dh))));
    hum_heads.push_back(ops::max_pool_axis1(
        ops::broadcast_expand_mul(ops::sigmoid(a_t), ops::slice_cols(v_obj, h * dh, dh))));
    if (trace) {
      trace->object_logits.push_back(a);
      trace->human_logits.push_back(a_t);
    }
    logits.push_back(a);
  }
  DualAttentionOutput out;
  out.objects = ops::add(objects, heads == 1 ? obj_heads[0] : ops::concat_last_axis(obj_heads));
  out.humans = ops::add(humans, heads == 1 ? hum_heads[0] : ops::concat_last_axis(hum_heads));
  out.m_att = ops::sigmoid(ops::average(logits));
  return out;
}

GroupSplit group_split(const std::vector<bool>& is_human) {
  GroupSplit split;
  for (std::size_t i = 0; i < is_human.size(); ++i)
    (is_human[i] ? split.humans : split.objects).push_back(i);
  return split;
}

Tensor intra_group_attention(const Tensor& x, const AttentionParams& params, std::size_t heads) {
  if (x.rank() != 2 || x.dim(0) == 0) throw ShapeError("intra_group_attention: empty group");
  return multi_head_attention(x, x, params, heads);
}

EncoderOutput encoder_forward(const Tensor& features, const std::vector<bool>& is_human,
                              std::span<const GpmLayerParams> layers, std::size_t heads,
                              bool keep_trace) {
  if (layers.empty()) throw ConfigError("encoder depth must be at least 1");
  if (features.rank() != 2 || features.dim(0) != is_human.size()) {
    throw ShapeError("encoder_forward: " + std::to_string(is_human.size()) + " group flags for " +
                     shape_string(features.shape()));
  }
  const GroupSplit split = group_split(is_human);
  const bool has_humans = !split.humans.empty();
  const bool has_objects = !split.objects.empty();
  Tensor hum = has_humans ? ops::gather_rows(features, split.humans) : Tensor();
  Tensor obj = has_objects ? ops::gather_rows(features, split.objects) : Tensor();

  EncoderOutput out;
  for (const auto& layer : layers) {
    if (has_humans) hum = intra_group_attention(hum, layer.human_self, heads);
    if (has_objects) obj = intra_group_attention(obj, layer.object_self, heads);
    EncoderLayerTrace layer_trace;
    if (has_humans && has_objects) {
      DualAttentionOutput dual =
          dual_attention(hum, obj, layer.dual, heads, keep_trace ? &layer_trace.dual : nullptr);
      hum = dual.humans;
      obj = dual.objects;
      out.m_att.push_back(dual.m_att);
    }
    if (keep_trace) out.layers.push_back(std::move(layer_trace));
  }

  // Undo the partition: row r of the stacked [humans; objects] matrix goes
  // back to its input position.
  std::vector<Tensor> parts;
  std::vector<std::size_t> order;
  if (has_humans) {
    parts.push_back(hum);
    order.insert(order.end(), split.humans.begin(), split.humans.end());
  }
  if (has_objects) {
    parts.push_back(obj);
    order.insert(order.end(), split.objects.begin(), split.objects.end());
  }
  const Tensor stacked = parts.size() == 1 ? parts[0] : ops::concat_rows(parts);
  std::vector<std::size_t> inverse(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) inverse[order[r]] = r;
  out.features = ops::gather_rows(stacked, inverse);
  return out;
}

Tensor interactiveness_loss(std::span<const Tensor> m_att, const Tensor& gt) {
  if (m_att.empty()) throw ShapeError("interactiveness_loss: no attention matrices");
  std::vector<Tensor> per_layer;
  per_layer.reserve(m_att.size());
  for (const auto& m : m_att) per_layer.push_back(ops::bce(m, gt));
  return ops::average(per_layer);
}

}  // namespace hoi
