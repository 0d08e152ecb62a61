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
#include <random>
#include <span>
#include <vector>

#include "hoi/tensor.hpp"

// Differentiable operations. Each records a backward rule on the active tape
// when at least one input requires a gradient; otherwise it is a plain
// forward computation. Shape violations throw hoi::ShapeError.
namespace hoi::ops {

// Clamp applied to bce predictions before taking logarithms.
inline constexpr double kBceEpsilon = 1e-7;

// [N×K]·[K×M] -> [N×M].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// a[N×M] + bias[M] on every row.
Tensor add_row(const Tensor& a, const Tensor& bias);
// x[N×K]·w[K×M] + b[M]; a rank-1 x is treated as a single row and the
// result is rank-1 as well.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Elementwise mean of equally shaped tensors.
Tensor average(std::span<const Tensor> parts);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softmax_rows(const Tensor& a);

// out[i,j,k] = att[i,j] * v[j,k].
Tensor broadcast_expand_mul(const Tensor& att, const Tensor& v);
// out[i,k] = max_j t[i,j,k]; ties resolve to the lowest j.
Tensor max_pool_axis1(const Tensor& t);

// Valid cross-correlation of img[C×H×W] with kernels[F×C×k×k] plus bias[F].
Tensor conv2d(const Tensor& img, const Tensor& kernels, const Tensor& bias,
              std::size_t stride);
Tensor conv2d(const Tensor& img, const Tensor& kernels, std::size_t stride);

// Mean binary cross entropy; target must hold only 0 and 1 and carries no
// gradient.
Tensor bce(const Tensor& pred, const Tensor& target);

Tensor reshape(const Tensor& a, Shape shape);
Tensor flatten(const Tensor& a);
// Concatenation along the last axis of rank-1 or rank-2 tensors.
Tensor concat_last_axis(std::span<const Tensor> parts);
// Concatenation of rank-2 tensors along rows.
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], requires_grad set.
Tensor uniform_init(Shape shape, std::size_t fan_in, std::mt19937_64& rng);

}  // namespace hoi::ops
