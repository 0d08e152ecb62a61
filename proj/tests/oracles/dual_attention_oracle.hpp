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

#include <cmath>
#include <vector>

#include "attention_oracle.hpp"
#include "fixtures.hpp"

namespace hoi::testing {

struct ExpandedDualAttention {
  Matrix humans;                    // [M×d]
  Matrix objects;                   // [N×d]
  Matrix m_att;                     // [N×M]
  std::vector<Matrix> logits;       // per head [N×M]
};

inline double plain_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Literal evaluation of the sigmoid-gated dual attention: per head, the
/// N×M×d_h product tensor is materialized in full and then max-pooled.
inline ExpandedDualAttention expanded_dual_attention(const Matrix& humans, const Matrix& objects,
                                                     const Matrix& wq, const Matrix& wk,
                                                     const Matrix& wv_h, const Matrix& wv_o,
                                                     std::size_t heads) {
  const std::size_t m = humans.size(), n = objects.size(), d = humans[0].size(), dh = d / heads;
  const Matrix q = naive_matmul(objects, wq), k = naive_matmul(humans, wk);
  const Matrix vh = naive_matmul(humans, wv_h), vo = naive_matmul(objects, wv_o);
  ExpandedDualAttention out;
  out.humans = humans;
  out.objects = objects;
  Matrix mean(n, std::vector<double>(m, 0.0));
  for (std::size_t h = 0; h < heads; ++h) {
    Matrix a(n, std::vector<double>(m));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += q[i][h * dh + c] * k[j][h * dh + c];
        a[i][j] = s / std::sqrt(static_cast<double>(dh));
        mean[i][j] += a[i][j] / static_cast<double>(heads);
      }
    // Object direction: E[i][j][c] = sigmoid(a[i][j]) * vh[j][c].
    std::vector<Matrix> e(n, Matrix(m, std::vector<double>(dh)));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t c = 0; c < dh; ++c) e[i][j][c] = plain_sigmoid(a[i][j]) * vh[j][h * dh + c];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < dh; ++c) {
        double best = e[i][0][c];
        for (std::size_t j = 1; j < m; ++j) best = std::max(best, e[i][j][c]);
        out.objects[i][h * dh + c] += best;
      }
    // Human direction over the transposed logits: F[j][i][c] = sigmoid(a[i][j]) * vo[i][c].
    std::vector<Matrix> f(m, Matrix(n, std::vector<double>(dh)));
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < dh; ++c) f[j][i][c] = plain_sigmoid(a[i][j]) * vo[i][h * dh + c];
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t c = 0; c < dh; ++c) {
        double best = f[j][0][c];
        for (std::size_t i = 1; i < n; ++i) best = std::max(best, f[j][i][c]);
        out.humans[j][h * dh + c] += best;
      }
    out.logits.push_back(std::move(a));
  }
  out.m_att = mean;
  for (auto& row : out.m_att)
    for (double& v : row) v = plain_sigmoid(v);
  return out;
}

}  // namespace hoi::testing
