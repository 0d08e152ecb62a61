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
#include "hoi/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hoi/errors.hpp"

namespace hoi::ops {

namespace {

// Returns the active tape when any input needs a gradient.
Tape* recording(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = active_tape();
  if (!tape) return nullptr;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return tape;
  }
  return nullptr;
}

void record(Tape* tape, const char* op, std::initializer_list<const Tensor*> inputs,
            Tensor& out, std::function<void()> backward) {
  out.set_requires_grad(true);
  Tape::Node node;
  node.op = op;
  for (const Tensor* t : inputs) node.inputs.push_back(t->id());
  node.output = out.id();
  node.backward = std::move(backward);
  tape->record(std::move(node));
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     " tensor, got " + shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
  }
}

// Sigmoid evaluated without overflow and kept strictly inside (0, 1).
double stable_sigmoid(double x) {
  double s;
  if (x >= 0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  static const double kUpper = std::nextafter(1.0, 0.0);
  return std::clamp(s, std::numeric_limits<double>::min(), kUpper);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner extents differ for " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()));
  }
  std::vector<double> out(n * m, 0.0);
  const auto A = a.data();
  const auto B = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    double* row = out.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* brow = B.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += av * brow[j];
    }
  }
  Tensor result({n, m}, std::move(out));
  if (Tape* tape = recording({&a, &b})) {
    record(tape, "matmul", {&a, &b}, result, [a, b, result, n, k, m]() mutable {
      if (!result.has_grad()) return;
      const auto G = result.grad();
      if (a.requires_grad()) {
        auto dA = a.grad_buffer();
        const auto B = b.data();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += G[i * m + j] * B[p * m + j];
            dA[i * k + p] += acc;
          }
      }
      if (b.requires_grad()) {
        auto dB = b.grad_buffer();
        const auto A = a.data();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) dB[p * m + j] += av * G[i * m + j];
          }
      }
    });
  }
  return result;
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t n = a.dim(0), m = a.dim(1);
  std::vector<double> out(n * m);
  const auto A = a.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j * n + i] = A[i * m + j];
  Tensor result({m, n}, std::move(out));
  if (Tape* tape = recording({&a})) {
    record(tape, "transpose", {&a}, result, [a, result, n, m]() mutable {
      if (!result.has_grad()) return;
      const auto G = result.grad();
      auto dA = a.grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) dA[i * m + j] += G[j * n + i];
    });
  }
  return result;
}

namespace {

template <typename Fwd>
Tensor binary_elementwise(const Tensor& a, const Tensor& b, const char* op, Fwd fwd,
                          double sign_b, bool product) {
  require_same_shape(a, b, op);
  const auto A = a.data();
  const auto B = b.data();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = fwd(A[i], B[i]);
  Tensor result(a.shape(), std::move(out));
  if (Tape* tape = recording({&a, &b})) {
    record(tape, op, {&a, &b}, result, [a, b, result, sign_b, product]() mutable {
      if (!result.has_grad()) return;
      const auto G = result.grad();
      if (a.requires_grad()) {
        auto dA = a.grad_buffer();
        const auto B = b.data();
        for (std::size_t i = 0; i < G.size(); ++i) dA[i] += product ? G[i] * B[i] : G[i];
      }
      if (b.requires_grad()) {
        auto dB = b.grad_buffer();
        const auto A = a.data();
        for (std::size_t i = 0; i < G.size(); ++i)
          dB[i] += product ? G[i] * A[i] : sign_b * G[i];
      }
    });
  }
  return result;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_elementwise(a, b, "add", [](double x, double y) { return x + y; }, 1.0, false);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_elementwise(a, b, "sub", [](double x, double y) { return x - y; }, -1.0, false);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_elementwise(a, b, "mul", [](double x, double y) { return x * y; }, 1.0, true);
}

Tensor scale(const Tensor& a, double factor) {
  const auto A = a.data();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] * factor;
  Tensor result(a.shape(), std::move(out));
  if (Tape* tape = recording({&a})) {
    record(tape, "scale", {&a}, result, [a, result, factor]() mutable {
      if (!result.has_grad()) return;
      const auto G = result.grad();
      auto dA = a.grad_buffer();
      for (std::size_t i = 0; i < G.size(); ++i) dA[i] += factor * G[i];
    });
  }
  return result;
}

Tensor add_row(const Tensor& a, const Tensor& bias) {
  require_rank(a, 2, "add_row");
  require_rank(bias, 1, "add_row");
  const std::size_t n = a.dim(0), m = a.dim(1);
  if (bias.dim(0) != m) {
    throw ShapeError("add_row: bias " + shape_string(bias.shape()) + " does not fit rows of " +
                     shape_string(a.shape()));
  }
  const auto A = a.data();
  const auto Bv = bias.data();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = A[i * m + j] + Bv[j];
  Tensor result({n, m}, std::move(out));
  if (Tape* tape = recording({&a, &bias})) {
    record(tape, "add_row", {&a, &bias}, result, [a, bias, result, n, m]() mutable {
      if (!result.has_grad()) return;
      const auto G = result.grad();
      if (a.requires_grad()) {
        auto dA = a.grad_buffer();
        for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i];
      }
      if (bias.requires_grad()) {
        auto dB = bias.grad_buffer();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) dB[j] += G[i * m + j];
      }
    });
  }
  return result;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() == 1) {
    Tensor row = reshape(x, {1, x.dim(0)});
    Tensor out = add_row(matmul(row, w), b);
    return reshape(out, {out.dim(1)});
  }
  return add_row(matmul(x, w), b);
}

Tensor sum(const Tensor& a) {
  const auto A = a.data();
  double acc = 0.0;
  for (double v : A) acc += v;
  Tensor result = Tensor::scalar(acc);
  if (Tape* tape = recording({&a})) {
    record(tape, "sum", {&a}, result, [a, result]() mutable {
      if (!result.has_grad()) return;
      const double g = result.grad()[0];
      for (double& d : a.grad_buffer()) d += g;
    });
  }
  return result;
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor average(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("average of zero tensors");
  Tensor acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = add(acc, parts[i]);
  if (parts.size() == 1) return acc;
  return scale(acc, 1.0 / static_cast<double>(parts.size()));
}

Tensor relu(const Tensor& a) {
  const auto A = a.data();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] > 0.0 ? A[i] : 0.0;
  Tensor result(a.shape(), std::move(out));
  if (Tape* tape = recording({&a})) {
    record(tape, "relu", {&a}, result, [a, result]() mutable {
      if (!result.has_grad()) return;
      const auto G = result.grad();
      const auto A = a.data();
      auto dA = a.grad_buffer();
      for (std::size_t i = 0; i < G.size(); ++i)
        if (A[i] > 0.0) dA[i] += G[i];
    });
  }
  return result;
}

Tensor sigmoid(const Tensor& a) {
  const auto A = a.data();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = stable_sigmoid(A[i]);
  Tensor result(a.shape(), std::move(out));
  if (Tape* tape = recording({&a})) {
    record(tape, "sigmoid", {&a}, result, [a, result]() mutable {
      if (!result.has_grad()) return;
      const auto G = result.grad();
      const auto Y = result.data();
      auto dA = a.grad_buffer();
      for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i] * Y[i] * (1.0 - Y[i]);
    });
  }
  return result;
}

Tensor softmax_rows(const Tensor& a) {
  require_rank(a, 2, "softmax_rows");
  const std::size_t n = a.dim(0), m = a.dim(1);
  const auto A = a.data();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = A.data() + i * m;
    const double hi = *std::max_element(row, row + m);
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      out[i * m + j] = std::exp(row[j] - hi);
      z += out[i * m + j];
    }
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] /= z;
  }
  Tensor result({n, m}, std::move(out));
  if (Tape* tape = recording({&a})) {
    record(tape, "softmax_rows", {&a}, result, [a, result, n, m]() mutable {
      if (!result.has_grad()) return;
      const auto G = result.grad();
      const auto Y = result.data();
      auto dA = a.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < m; ++j) dot += G[i * m + j] * Y[i * m + j];
        for (std::size_t j = 0; j < m; ++j)
          dA[i * m + j] += Y[i * m + j] * (G[i * m + j] - dot);
      }
    });
  }
  return result;
}

Tensor broadcast_expand_mul(const Tensor& att, const Tensor& v) {
  require_rank(att, 2, "broadcast_expand_mul");
  require_rank(v, 2, "broadcast_expand_mul");
  const std::size_t n = att.dim(0), m = att.dim(1), d = v.dim(1);
  if (v.dim(0) != m) {
    throw ShapeError("broadcast_expand_mul: middle extents differ for " +
                     shape_string(att.shape()) + " and " + shape_string(v.shape()));
  }
  const auto W = att.data();
  const auto V = v.data();
  std::vector<double> out(n * m * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double w = W[i * m + j];
      double* dst = out.data() + (i * m + j) * d;
      const double* src = V.data() + j * d;
      for (std::size_t k = 0; k < d; ++k) dst[k] = w * src[k];
    }
  Tensor result({n, m, d}, std::move(out));
  if (Tape* tape = recording({&att, &v})) {
    record(tape, "broadcast_expand_mul", {&att, &v}, result,
           [att, v, result, n, m, d]() mutable {
             if (!result.has_grad()) return;
             const auto G = result.grad();
             if (att.requires_grad()) {
               auto dW = att.grad_buffer();
               const auto V = v.data();
               for (std::size_t i = 0; i < n; ++i)
                 for (std::size_t j = 0; j < m; ++j) {
                   double acc = 0.0;
                   const double* g = G.data() + (i * m + j) * d;
                   for (std::size_t k = 0; k < d; ++k) acc += g[k] * V[j * d + k];
                   dW[i * m + j] += acc;
                 }
             }
             if (v.requires_grad()) {
               auto dV = v.grad_buffer();
               const auto W = att.data();
               for (std::size_t i = 0; i < n; ++i)
                 for (std::size_t j = 0; j < m; ++j) {
                   const double w = W[i * m + j];
                   const double* g = G.data() + (i * m + j) * d;
                   for (std::size_t k = 0; k < d; ++k) dV[j * d + k] += w * g[k];
                 }
             }
           });
  }
  return result;
}

Tensor max_pool_axis1(const Tensor& t) {
  require_rank(t, 3, "max_pool_axis1");
  const std::size_t n = t.dim(0), m = t.dim(1), d = t.dim(2);
  if (m == 0) throw ShapeError("max_pool_axis1: pooling over an empty axis");
  const auto T = t.data();
  std::vector<double> out(n * d);
  std::vector<std::size_t> arg(n * d, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      double best = T[(i * m) * d + k];
      std::size_t best_j = 0;
      for (std::size_t j = 1; j < m; ++j) {
        const double v = T[(i * m + j) * d + k];
        if (v > best) {
          best = v;
          best_j = j;
        }
      }
      out[i * d + k] = best;
      arg[i * d + k] = best_j;
    }
  Tensor result({n, d}, std::move(out));
  if (Tape* tape = recording({&t})) {
    record(tape, "max_pool_axis1", {&t}, result,
           [t, result, arg = std::move(arg), n, m, d]() mutable {
             if (!result.has_grad()) return;
             const auto G = result.grad();
             auto dT = t.grad_buffer();
             for (std::size_t i = 0; i < n; ++i)
               for (std::size_t k = 0; k < d; ++k)
                 dT[(i * m + arg[i * d + k]) * d + k] += G[i * d + k];
           });
  }
  return result;
}

Tensor conv2d(const Tensor& img, const Tensor& kernels, const Tensor& bias,
              std::size_t stride) {
  require_rank(img, 3, "conv2d");
  require_rank(kernels, 4, "conv2d");
  const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
  const std::size_t f = kernels.dim(0), k = kernels.dim(2);
  if (kernels.dim(1) != c || kernels.dim(3) != k) {
    throw ShapeError("conv2d: kernels " + shape_string(kernels.shape()) +
                     " do not match image " + shape_string(img.shape()));
  }
  if (k > h || k > w) {
    throw ShapeError("conv2d: kernel " + shape_string(kernels.shape()) +
                     " larger than image " + shape_string(img.shape()));
  }
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != f)) {
    throw ShapeError("conv2d: bias " + shape_string(bias.shape()) + " for " +
                     std::to_string(f) + " filters");
  }
  const std::size_t oh = (h - k) / stride + 1, ow = (w - k) / stride + 1;
  const std::size_t n = oh * ow;
  // Input samples under kernel tap (ci, ky, kx), laid out as one output plane.
  auto gather = [=](std::span<const double> X, std::size_t ci, std::size_t ky, std::size_t kx, double* patch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      const double* src = X.data() + (ci * h + oy * stride + ky) * w + kx;
      for (std::size_t ox = 0; ox < ow; ++ox) patch[oy * ow + ox] = src[ox * stride];
    }
  };
  const auto X = img.data();
  const auto K = kernels.data();
  std::vector<double> out(f * n, 0.0);
  if (bias.defined()) {
    for (std::size_t fi = 0; fi < f; ++fi) std::fill_n(out.data() + fi * n, n, bias.data()[fi]);
  }
  std::vector<double> patch(n);
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t ky = 0; ky < k; ++ky)
      for (std::size_t kx = 0; kx < k; ++kx) {
        gather(X, ci, ky, kx, patch.data());
        for (std::size_t fi = 0; fi < f; ++fi) {
          const double wv = K[((fi * c + ci) * k + ky) * k + kx];
          if (wv == 0.0) continue;
          double* plane = out.data() + fi * n;
          for (std::size_t p = 0; p < n; ++p) plane[p] += wv * patch[p];
        }
      }
  Tensor result({f, oh, ow}, std::move(out));
  if (Tape* tape = recording({&img, &kernels, &bias})) {
    record(tape, "conv2d", {&img, &kernels, &bias}, result,
           [img, kernels, bias, result, c, h, w, f, k, stride, oh, ow, n, gather]() mutable {
             if (!result.has_grad()) return;
             const auto G = result.grad();
             if (bias.defined() && bias.requires_grad()) {
               auto dB = bias.grad_buffer();
               for (std::size_t fi = 0; fi < f; ++fi) {
                 double acc = 0.0;
                 for (std::size_t p = 0; p < n; ++p) acc += G[fi * n + p];
                 dB[fi] += acc;
               }
             }
             std::vector<double> patch(n);
             if (kernels.requires_grad()) {
               auto dK = kernels.grad_buffer();
               const auto X = img.data();
               for (std::size_t ci = 0; ci < c; ++ci)
                 for (std::size_t ky = 0; ky < k; ++ky)
                   for (std::size_t kx = 0; kx < k; ++kx) {
                     gather(X, ci, ky, kx, patch.data());
                     for (std::size_t fi = 0; fi < f; ++fi) {
                       const double* g = G.data() + fi * n;
                       double acc = 0.0;
                       for (std::size_t p = 0; p < n; ++p) acc += g[p] * patch[p];
                       dK[((fi * c + ci) * k + ky) * k + kx] += acc;
                     }
                   }
             }
             if (img.requires_grad()) {
               auto dX = img.grad_buffer();
               const auto K = kernels.data();
               for (std::size_t ci = 0; ci < c; ++ci)
                 for (std::size_t ky = 0; ky < k; ++ky)
                   for (std::size_t kx = 0; kx < k; ++kx) {
                     std::fill(patch.begin(), patch.end(), 0.0);
                     for (std::size_t fi = 0; fi < f; ++fi) {
                       const double wv = K[((fi * c + ci) * k + ky) * k + kx];
                       const double* g = G.data() + fi * n;
                       for (std::size_t p = 0; p < n; ++p) patch[p] += wv * g[p];
                     }
                     for (std::size_t oy = 0; oy < oh; ++oy) {
                       double* dst = dX.data() + (ci * h + oy * stride + ky) * w + kx;
                       for (std::size_t ox = 0; ox < ow; ++ox) dst[ox * stride] += patch[oy * ow + ox];
                     }
                   }
             }
           });
  }
  return result;
}

Tensor conv2d(const Tensor& img, const Tensor& kernels, std::size_t stride) {
  return conv2d(img, kernels, Tensor(), stride);
}

Tensor bce(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "bce");
  const auto P = pred.data();
  const auto T = target.data();
  if (P.empty()) throw ShapeError("bce: empty input");
  const double lo = kBceEpsilon, hi = 1.0 - kBceEpsilon;
  double acc = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (T[i] != 0.0 && T[i] != 1.0) {
      throw DataError("bce: target value " + std::to_string(T[i]) + " is not 0 or 1");
    }
    const double p = std::clamp(P[i], lo, hi);
    acc -= T[i] == 1.0 ? std::log(p) : std::log(1.0 - p);
  }
  const double count = static_cast<double>(P.size());
  Tensor result = Tensor::scalar(acc / count);
  if (Tape* tape = recording({&pred})) {
    record(tape, "bce", {&pred}, result, [pred, target, result, count, lo, hi]() mutable {
      if (!result.has_grad()) return;
      const double g = result.grad()[0] / count;
      const auto P = pred.data();
      const auto T = target.data();
      auto dP = pred.grad_buffer();
      for (std::size_t i = 0; i < P.size(); ++i) {
        if (P[i] < lo || P[i] > hi) continue;
        dP[i] += g * (T[i] == 1.0 ? -1.0 / P[i] : 1.0 / (1.0 - P[i]));
      }
    });
  }
  return result;
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: cannot view " + shape_string(a.shape()) + " as " +
                     shape_string(shape));
  }
  Tensor result(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()));
  if (Tape* tape = recording({&a})) {
    record(tape, "reshape", {&a}, result, [a, result]() mutable {
      if (!result.has_grad()) return;
      const auto G = result.grad();
      auto dA = a.grad_buffer();
      for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i];
    });
  }
  return result;
}

Tensor flatten(const Tensor& a) { return reshape(a, {a.numel()}); }

Tensor concat_last_axis(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_last_axis: nothing to concatenate");
  const std::size_t rank = parts[0].rank();
  if (rank != 1 && rank != 2) throw ShapeError("concat_last_axis: rank must be 1 or 2");
  const std::size_t rows = rank == 1 ? 1 : parts[0].dim(0);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != rank || (rank == 2 && p.dim(0) != rows)) {
      throw ShapeError("concat_last_axis: incompatible part " + shape_string(p.shape()) +
                       " after " + shape_string(parts[0].shape()));
    }
    widths.push_back(p.shape().back());
    total += p.shape().back();
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const auto P = parts[pi].data();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(P.data() + r * widths[pi], widths[pi], out.data() + r * total + offset);
    offset += widths[pi];
  }
  Shape shape = rank == 1 ? Shape{total} : Shape{rows, total};
  Tensor result(std::move(shape), std::move(out));
  Tape* tape = active_tape();
  const bool any = std::any_of(parts.begin(), parts.end(),
                               [](const Tensor& t) { return t.requires_grad(); });
  if (tape && any) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    result.set_requires_grad(true);
    Tape::Node node;
    node.op = "concat_last_axis";
    for (const auto& t : inputs) node.inputs.push_back(t.id());
    node.output = result.id();
    node.backward = [inputs, widths, result, rows, total]() mutable {
      if (!result.has_grad()) return;
      const auto G = result.grad();
      std::size_t offset = 0;
      for (std::size_t pi = 0; pi < inputs.size(); ++pi) {
        if (inputs[pi].requires_grad()) {
          auto dP = inputs[pi].grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < widths[pi]; ++c)
              dP[r * widths[pi] + c] += G[r * total + offset + c];
        }
        offset += widths[pi];
      }
    };
    tape->record(std::move(node));
  }
  return result;
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: nothing to concatenate");
  const std::size_t cols = parts[0].shape().back();
  std::size_t rows = 0;
  std::vector<std::size_t> counts;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.dim(1) != cols) {
      throw ShapeError("concat_rows: incompatible part " + shape_string(p.shape()) +
                       " after " + shape_string(parts[0].shape()));
    }
    counts.push_back(p.dim(0));
    rows += p.dim(0);
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  Tensor result({rows, cols}, std::move(out));
  Tape* tape = active_tape();
  const bool any = std::any_of(parts.begin(), parts.end(),
                               [](const Tensor& t) { return t.requires_grad(); });
  if (tape && any) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    result.set_requires_grad(true);
    Tape::Node node;
    node.op = "concat_rows";
    for (const auto& t : inputs) node.inputs.push_back(t.id());
    node.output = result.id();
    node.backward = [inputs, result]() mutable {
      if (!result.has_grad()) return;
      const auto G = result.grad();
      std::size_t offset = 0;
      for (auto& in : inputs) {
        const std::size_t n = in.numel();
        if (in.requires_grad()) {
          auto dP = in.grad_buffer();
          for (std::size_t i = 0; i < n; ++i) dP[i] += G[offset + i];
        }
        offset += n;
      }
    };
    tape->record(std::move(node));
  }
  return result;
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
  require_rank(a, 2, "slice_cols");
  const std::size_t n = a.dim(0), m = a.dim(1);
  if (begin + count > m) {
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " +
                     shape_string(a.shape()));
  }
  const auto A = a.data();
  std::vector<double> out(n * count);
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(A.data() + i * m + begin, count, out.data() + i * count);
  Tensor result({n, count}, std::move(out));
  if (Tape* tape = recording({&a})) {
    record(tape, "slice_cols", {&a}, result, [a, result, n, m, begin, count]() mutable {
      if (!result.has_grad()) return;
      const auto G = result.grad();
      auto dA = a.grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < count; ++j) dA[i * m + begin + j] += G[i * count + j];
    });
  }
  return result;
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
  require_rank(a, 2, "gather_rows");
  const std::size_t n = a.dim(0), m = a.dim(1);
  const auto A = a.data();
  std::vector<double> out(rows.size() * m);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n) {
      throw ShapeError("gather_rows: row " + std::to_string(rows[r]) + " out of range for " +
                       shape_string(a.shape()));
    }
    std::copy_n(A.data() + rows[r] * m, m, out.data() + r * m);
  }
  Tensor result({rows.size(), m}, std::move(out));
  if (Tape* tape = recording({&a})) {
    std::vector<std::size_t> index(rows.begin(), rows.end());
    record(tape, "gather_rows", {&a}, result, [a, result, index, m]() mutable {
      if (!result.has_grad()) return;
      const auto G = result.grad();
      auto dA = a.grad_buffer();
      for (std::size_t r = 0; r < index.size(); ++r)
        for (std::size_t j = 0; j < m; ++j) dA[index[r] * m + j] += G[r * m + j];
    });
  }
  return result;
}

Tensor uniform_init(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = dist(rng);
  return Tensor(std::move(shape), std::move(data), true);
}

}  // namespace hoi::ops
