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
#include "hoi/attention.hpp"

#include <cmath>

#include "hoi/errors.hpp"
#include "hoi/ops.hpp"

namespace hoi {

AttentionParams AttentionParams::create(ParameterStore& store, const std::string& prefix,
                                        std::size_t dim, std::mt19937_64& rng) {
  AttentionParams p;
  p.query = store.add_uniform(prefix + ".query", {dim, dim}, dim, rng);
  p.key = store.add_uniform(prefix + ".key", {dim, dim}, dim, rng);
  p.value = store.add_uniform(prefix + ".value", {dim, dim}, dim, rng);
  p.output = store.add_uniform(prefix + ".output", {dim, dim}, dim, rng);
  return p;
}

Tensor multi_head_attention(const Tensor& queries, const Tensor& keys, const AttentionParams& params,
                            std::size_t heads, AttentionTrace* trace) {
  const std::size_t d = queries.dim(1);
  if (heads == 0 || d % heads != 0) {
    throw ShapeError("model dimension " + std::to_string(d) + " is not divisible by " +
                     std::to_string(heads) + " heads");
  }
  if (keys.dim(0) == 0) throw ShapeError("attention over an empty key set");
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const Tensor q = ops::matmul(queries, params.query);
  const Tensor k = ops::matmul(keys, params.key);
  const Tensor v = ops::matmul(keys, params.value);
  std::vector<Tensor> head_out;
  head_out.reserve(heads);
  if (trace) trace->weights.clear();
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor qh = ops::slice_cols(q, h * dh, dh);
    const Tensor kh = ops::slice_cols(k, h * dh, dh);
    const Tensor vh = ops::slice_cols(v, h * dh, dh);
    const Tensor weights = ops::softmax_rows(ops::scale(ops::matmul(qh, ops::transpose(kh)), inv_sqrt));
    if (trace) trace->weights.push_back(weights);
    head_out.push_back(ops::matmul(weights, vh));
  }
  const Tensor merged = heads == 1 ? head_out[0] : ops::concat_last_axis(head_out);
  return ops::add(queries, ops::matmul(merged, params.output));
}

}  // namespace hoi
