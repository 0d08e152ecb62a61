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
#include <cmath>
#include <limits>
#include <random>

#include "attention_oracle.hpp"
#include "doctest.h"
#include "gradient_suite.hpp"
#include "fixtures.hpp"
#include "geometry_oracle.hpp"
#include "gradcheck.hpp"
#include "hoi/errors.hpp"
#include "hoi/ops.hpp"
#include "hoi/optim.hpp"
#include "hoi/tensor.hpp"

using namespace hoi;
using hoi::testing::check_gradients;
using hoi::testing::random_tensor;

namespace {

Tensor param(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  return random_tensor(std::move(shape), rng, lo, hi, true);
}

// Values kept away from relu's kink so central differences stay on one side.
Tensor away_from_zero(Shape shape, std::mt19937_64& rng) {
  Tensor t = param(std::move(shape), rng);
  for (double& v : t.mutable_data()) v = v >= 0 ? v + 0.05 : v - 0.05;
  return t;
}

}  // namespace

TEST_CASE("tensor construction and shape bookkeeping") {
  const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.numel() == 6);
  CHECK(t.rank() == 2);
  CHECK(t.at(1, 2) == 6);
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(Tensor({0, 2}, {}), ShapeError);
  CHECK(Tensor::zeros({3}).data()[2] == 0.0);
  CHECK(Tensor::full({2}, 1.5).at(1) == 1.5);
  CHECK(Tensor::matrix({{1, 2}, {3, 4}}).at(1, 0) == 3);
}

TEST_CASE("handles share storage and detached copies do not") {
  Tensor a = Tensor::vector({1, 2, 3});
  Tensor b = a;
  b.mutable_data()[0] = 9;
  CHECK(a.at(0) == 9);
  Tensor c = a.detached_copy();
  c.mutable_data()[0] = 0;
  CHECK(a.at(0) == 9);
  CHECK(a.id() == b.id());
  CHECK(a.id() != c.id());
}

TEST_CASE("matmul") {
  const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
  SUBCASE("identity") {
    const Tensor r = ops::matmul(Tensor::matrix({{1, 0}, {0, 1}}), m);
    CHECK(std::vector<double>(r.data().begin(), r.data().end()) == std::vector<double>{1, 2, 3, 4});
  }
  SUBCASE("matches a triple-loop reference") {
    const Tensor r = ops::matmul(m, Tensor::matrix({{5}, {6}}));
    const auto ref = hoi::testing::naive_matmul({{1, 2}, {3, 4}}, {{5}, {6}});
    CHECK(r.at(0, 0) == ref[0][0]);
    CHECK(r.at(1, 0) == ref[1][0]);
    CHECK(ref[0][0] == 17);
    CHECK(ref[1][0] == 39);
  }
  SUBCASE("zero matrix") {
    const Tensor r = ops::matmul(Tensor::zeros({3, 2}), m);
    for (double v : r.data()) CHECK(v == 0.0);
  }
  SUBCASE("random shapes match the reference") {
    std::mt19937_64 rng(3);
    const Tensor a = random_tensor({4, 7}, rng), b = random_tensor({7, 5}, rng);
    CHECK(hoi::testing::max_abs_diff(ops::matmul(a, b),
                                      hoi::testing::naive_matmul(hoi::testing::to_matrix(a),
                                                                 hoi::testing::to_matrix(b))) < 1e-14);
  }
  SUBCASE("inner extents must agree and the error names both shapes") {
    try {
      ops::matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
      FAIL("expected a shape error");
    } catch (const ShapeError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[2x3]") != std::string::npos);
    }
  }
}

TEST_CASE("softmax_rows") {
  SUBCASE("constant row is uniform") {
    const Tensor s = ops::softmax_rows(Tensor::matrix({{2.5, 2.5, 2.5}}));
    for (double v : s.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("singleton row") { CHECK(ops::softmax_rows(Tensor::matrix({{-7.0}})).item() == 1.0); }
  SUBCASE("row [0, ln 2]") {
    const Tensor s = ops::softmax_rows(Tensor::matrix({{0.0, std::log(2.0)}}));
    CHECK(std::abs(s.at(0, 0) - 1.0 / 3.0) < 1e-15);
    CHECK(std::abs(s.at(0, 1) - 2.0 / 3.0) < 1e-15);
  }
  SUBCASE("rows sum to one and ignore a constant shift, even for large logits") {
    std::mt19937_64 rng(5);
    const Tensor a = random_tensor({6, 9}, rng, -300, 300);
    const Tensor s = ops::softmax_rows(a);
    Tensor shifted = a.detached_copy();
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 9; ++j) shifted.mutable_data()[i * 9 + j] += 17.0 * static_cast<double>(i);
    const Tensor t = ops::softmax_rows(shifted);
    for (std::size_t i = 0; i < 6; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < 9; ++j) {
        total += s.at(i, j);
        CHECK(s.at(i, j) >= 0.0);
        CHECK(std::abs(s.at(i, j) - t.at(i, j)) < 1e-12);
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("sigmoid") {
  CHECK(ops::sigmoid(Tensor::scalar(0.0)).item() == 0.5);
  CHECK(std::abs(ops::sigmoid(Tensor::scalar(std::log(3.0))).item() - 0.75) < 1e-15);
  SUBCASE("derivative at zero") {
    Tensor x = Tensor::scalar(0.0, true);
    Tape tape;
    Tensor y;
    {
      TapeScope scope(tape);
      y = ops::sigmoid(x);
    }
    tape.backward(y);
    CHECK(x.grad()[0] == 0.25);
  }
  SUBCASE("outputs stay strictly inside (0, 1)") {
    const Tensor s = ops::sigmoid(Tensor::vector({-1000, -40, 0, 40, 1000}));
    for (double v : s.data()) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("broadcast_expand_mul") {
  SUBCASE("all-ones attention copies v") {
    const Tensor v = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}});
    const Tensor out = ops::broadcast_expand_mul(Tensor::full({2, 3}, 1.0), v);
    CHECK(out.shape() == Shape{2, 3, 2});
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t k = 0; k < 2; ++k) CHECK(out.at(i, j, k) == v.at(j, k));
  }
  SUBCASE("scalar case") {
    const Tensor out = ops::broadcast_expand_mul(Tensor::matrix({{2}}), Tensor::matrix({{3, 4}}));
    CHECK(out.at(0, 0, 0) == 6);
    CHECK(out.at(0, 0, 1) == 8);
  }
  SUBCASE("zero attention row zeroes its slice") {
    const Tensor out = ops::broadcast_expand_mul(Tensor::matrix({{0, 0}, {1, 2}}), Tensor::matrix({{1}, {1}}));
    CHECK(out.at(0, 0, 0) == 0.0);
    CHECK(out.at(0, 1, 0) == 0.0);
    CHECK(out.at(1, 1, 0) == 2.0);
  }
  CHECK_THROWS_AS(ops::broadcast_expand_mul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
}

TEST_CASE("max_pool_axis1") {
  auto pooled_grad = [](const Tensor& t) {
    Tensor x = Tensor(t.shape(), std::vector<double>(t.data().begin(), t.data().end()), true);
    Tape tape;
    Tensor loss;
    {
      TapeScope scope(tape);
      loss = ops::sum(ops::max_pool_axis1(x));
    }
    tape.backward(loss);
    return std::vector<double>(x.grad().begin(), x.grad().end());
  };
  SUBCASE("singleton axis") {
    const Tensor t({2, 1, 3}, {1, 2, 3, 4, 5, 6});
    const Tensor out = ops::max_pool_axis1(t);
    CHECK(std::vector<double>(out.data().begin(), out.data().end()) == std::vector<double>{1, 2, 3, 4, 5, 6});
  }
  SUBCASE("maximum and routed gradient") {
    const Tensor t({1, 3, 1}, {1, 5, 3});
    CHECK(ops::max_pool_axis1(t).item() == 5);
    CHECK(pooled_grad(t) == std::vector<double>{0, 1, 0});
  }
  SUBCASE("ties route to the lowest index") {
    CHECK(pooled_grad(Tensor({1, 3, 1}, {2, 2, 2})) == std::vector<double>{1, 0, 0});
  }
  SUBCASE("gradient mass is preserved per output cell") {
    std::mt19937_64 rng(9);
    const Tensor t = random_tensor({3, 4, 5}, rng);
    const auto g = pooled_grad(t);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 5; ++k) {
        double mass = 0.0;
        for (std::size_t j = 0; j < 4; ++j) mass += g[(i * 4 + j) * 5 + k];
        CHECK(mass == 1.0);
      }
  }
  CHECK_THROWS_AS(ops::max_pool_axis1(Tensor::zeros({2, 2})), ShapeError);
}

TEST_CASE("conv2d") {
  SUBCASE("1x1 unit kernel is the identity per channel") {
    std::mt19937_64 rng(1);
    const Tensor img = random_tensor({1, 4, 5}, rng);
    const Tensor out = ops::conv2d(img, Tensor({1, 1, 1, 1}, {1.0}), 1);
    CHECK(out.shape() == img.shape());
    for (std::size_t i = 0; i < img.numel(); ++i) CHECK(out.data()[i] == img.data()[i]);
  }
  SUBCASE("2x2 ones kernel sums the image") {
    const Tensor out = ops::conv2d(Tensor({1, 2, 2}, {1, 2, 3, 4}), Tensor::full({1, 1, 2, 2}, 1.0), 1);
    const auto ref = hoi::testing::direct_conv({1, 2, 3, 4}, 1, 2, 2, {1, 1, 1, 1}, 1, 2, 1, {});
    CHECK(out.item() == ref[0]);
    CHECK(ref[0] == 10);
  }
  SUBCASE("zero kernel") {
    std::mt19937_64 rng(2);
    const Tensor out = ops::conv2d(random_tensor({2, 6, 6}, rng), Tensor::zeros({3, 2, 3, 3}), 2);
    for (double v : out.data()) CHECK(v == 0.0);
  }
  SUBCASE("strided output size and values match direct summation") {
    std::mt19937_64 rng(4);
    const Tensor img = random_tensor({2, 11, 9}, rng);
    const Tensor k = random_tensor({3, 2, 5, 5}, rng);
    const Tensor b = random_tensor({3}, rng);
    const Tensor out = ops::conv2d(img, k, b, 2);
    CHECK(out.shape() == Shape{3, 4, 3});
    const auto ref = hoi::testing::direct_conv({img.data().begin(), img.data().end()}, 2, 11, 9,
                                               {k.data().begin(), k.data().end()}, 3, 5, 2,
                                               {b.data().begin(), b.data().end()});
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(out.data()[i] - ref[i]) < 1e-13);
  }
  CHECK_THROWS_AS(ops::conv2d(Tensor::zeros({1, 3, 3}), Tensor::zeros({1, 1, 4, 4}), 1), ShapeError);
  CHECK_THROWS_AS(ops::conv2d(Tensor::zeros({1, 5, 5}), Tensor::zeros({1, 1, 3, 3}), 0), ShapeError);
}

TEST_CASE("bce") {
  const double ln2 = std::log(2.0);
  CHECK(ops::bce(Tensor::vector({1.0, 0.0}), Tensor::vector({1.0, 0.0})).item() < 1e-6);
  CHECK(std::abs(ops::bce(Tensor::vector({0.5}), Tensor::vector({1.0})).item() - ln2) < 1e-15);
  CHECK(std::abs(ops::bce(Tensor::vector({0.5, 0.5, 0.5}), Tensor::vector({0.0, 1.0, 0.0})).item() - ln2) < 1e-15);
  CHECK_THROWS_AS(ops::bce(Tensor::vector({0.5}), Tensor::vector({0.5, 1.0})), ShapeError);
  CHECK_THROWS_AS(ops::bce(Tensor::vector({0.5}), Tensor::vector({0.5})), DataError);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor p = random_tensor({7}, rng, 0.0, 1.0);
    Tensor t = random_tensor({7}, rng, 0.0, 1.0);
    for (double& v : t.mutable_data()) v = v < 0.5 ? 0.0 : 1.0;
    CHECK(ops::bce(p, t).item() >= 0.0);
  }
}

TEST_CASE("backward") {
  SUBCASE("sum gives a ones gradient") {
    Tensor x = Tensor::vector({1, -2, 3}, true);
    Tape tape;
    Tensor loss;
    {
      TapeScope scope(tape);
      loss = ops::sum(x);
    }
    tape.backward(loss);
    for (double g : x.grad()) CHECK(g == 1.0);
  }
  SUBCASE("gradients accumulate over repeated uses") {
    Tensor x = Tensor::vector({1, 2}, true);
    Tape tape;
    Tensor loss;
    {
      TapeScope scope(tape);
      loss = ops::sum(ops::add(ops::mul(x, x), x));
    }
    tape.backward(loss);
    CHECK(x.grad()[0] == 3.0);
    CHECK(x.grad()[1] == 5.0);
  }
  SUBCASE("non-scalar loss is rejected") {
    Tensor x = Tensor::vector({1, 2}, true);
    Tape tape;
    Tensor y;
    {
      TapeScope scope(tape);
      y = ops::scale(x, 2.0);
    }
    CHECK_THROWS_AS(tape.backward(y), ShapeError);
  }
  SUBCASE("nothing is recorded without an active tape or a gradient-requiring input") {
    Tape tape;
    {
      TapeScope scope(tape);
      ops::add(Tensor::vector({1}), Tensor::vector({2}));
    }
    CHECK(tape.size() == 0);
    ops::add(Tensor::vector({1}, true), Tensor::vector({2}));
    CHECK(tape.size() == 0);
  }
  SUBCASE("tape is topologically ordered") {
    Tensor x = Tensor::vector({1, 2}, true);
    Tape tape;
    {
      TapeScope scope(tape);
      ops::sum(ops::sigmoid(ops::scale(x, 3.0)));
    }
    const auto& nodes = tape.nodes();
    for (std::size_t i = 1; i < nodes.size(); ++i) CHECK(nodes[i].inputs[0] == nodes[i - 1].output);
  }
}

TEST_CASE("every differentiable op matches central differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (const auto& c : hoi::testing::op_gradient_cases(seed)) {
      CAPTURE(seed);
      CAPTURE(c.name);
      CHECK(c.error < 1e-4);
    }
  }
}

TEST_CASE("parameter initialization") {
  std::mt19937_64 rng(12), again(12);
  const Tensor w = ops::uniform_init({20, 30}, 16, rng);
  CHECK(w.requires_grad());
  for (double v : w.data()) CHECK(std::abs(v) <= 0.25);
  const Tensor w2 = ops::uniform_init({20, 30}, 16, again);
  CHECK(std::equal(w.data().begin(), w.data().end(), w2.data().begin()));
}

TEST_CASE("sgd_step") {
  SUBCASE("plain gradient step") {
    Tensor p = Tensor::scalar(1.0, true);
    p.grad_buffer()[0] = 0.5;
    SgdOptimizer opt(0.1, 0.0, 0.0);
    Tensor params[] = {p};
    opt.step(params);
    CHECK(std::abs(p.item() - 0.95) < 1e-15);
    CHECK(opt.velocity().empty());
  }
  SUBCASE("zero gradient and velocity leave the parameter unchanged") {
    Tensor p = Tensor::scalar(3.0, true);
    SgdOptimizer opt(0.1, 0.9, 0.0);
    Tensor params[] = {p};
    opt.step(params);
    CHECK(p.item() == 3.0);
    CHECK(opt.velocity().size() == 1);
  }
  SUBCASE("momentum recurrence on a constant gradient") {
    const double lr = 0.1, g = 0.5;
    Tensor p = Tensor::scalar(1.0, true);
    SgdOptimizer opt(lr, 0.9, 0.0);
    Tensor params[] = {p};
    p.grad_buffer()[0] = g;
    opt.step(params);
    CHECK(std::abs(p.item() - (1.0 - lr * g)) < 1e-15);
    opt.step(params);
    CHECK(std::abs(p.item() - (1.0 - lr * g - lr * 1.9 * g)) < 1e-15);
  }
  SUBCASE("weight decay adds to the update") {
    Tensor p = Tensor::scalar(2.0, true);
    SgdOptimizer opt(0.5, 0.0, 0.1);
    Tensor params[] = {p};
    opt.step(params);
    CHECK(std::abs(p.item() - (2.0 - 0.5 * 0.2)) < 1e-15);
  }
  CHECK_THROWS_AS(SgdOptimizer(0.1, 1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(SgdOptimizer(-0.1, 0.0, 0.0), ConfigError);
}

TEST_CASE("identical seeds give bit-identical results") {
  auto run = [] {
    std::mt19937_64 rng(77);
    const Tensor a = random_tensor({5, 6}, rng), b = random_tensor({6, 4}, rng);
    return ops::softmax_rows(ops::matmul(a, b));
  };
  const Tensor x = run(), y = run();
  CHECK(std::equal(x.data().begin(), x.data().end(), y.data().begin()));
}
