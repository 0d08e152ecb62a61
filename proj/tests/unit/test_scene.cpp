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
#include <algorithm>
#include <random>

#include "doctest.h"
#include "geometry_oracle.hpp"
#include "hoi/errors.hpp"
#include "hoi/knowledge.hpp"
#include "hoi/pairs.hpp"
#include "hoi/scene.hpp"

using namespace hoi;

namespace {

BoundingBox random_box(std::mt19937_64& rng, double extent) {
  std::uniform_real_distribution<double> u(0.0, extent);
  double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
  if (a > b) std::swap(a, b);
  if (c > d) std::swap(c, d);
  return {a, c, b + 1.0, d + 1.0};
}

Keypoints all_at(double x, double y) {
  Keypoints kp{};
  for (auto& p : kp) p = {x, y};
  return kp;
}

std::size_t lit(const Tensor& t) {
  return static_cast<std::size_t>(std::count(t.data().begin(), t.data().end(), 1.0));
}

double cell(const Tensor& t, std::size_t channel, std::size_t row, std::size_t col) {
  return t.data()[(channel * kMapSize + row) * kMapSize + col];
}

Instance person(int id, double score, BoundingBox box = {10, 10, 60, 150}) {
  Instance h;
  h.id = id;
  h.is_human = true;
  h.class_id = kHumanClass;
  h.box = box;
  h.score = score;
  return h;
}

Instance thing(int id, double score, int cls = 1, BoundingBox box = {100, 40, 140, 90}) {
  Instance o;
  o.id = id;
  o.class_id = cls;
  o.box = box;
  o.score = score;
  return o;
}

Scene small_scene() {
  Scene s;
  s.scene_id = 4;
  s.image_width = 400;
  s.image_height = 300;
  s.humans = {person(3, 0.9), person(1, 0.5, {200, 20, 260, 200})};
  s.objects = {thing(7, 0.3), thing(2, 0.8, 2, {50, 100, 90, 160}), thing(5, 0.15, 1, {300, 200, 350, 260})};
  return s;
}

}  // namespace

TEST_CASE("position_code") {
  SUBCASE("full-image box") {
    const auto c = position_code({0, 0, 100, 100}, 100, 100);
    CHECK(c == PositionCode{0, 0, 1, 1, 1});
  }
  SUBCASE("box (10,20,30,60) in 100x100") {
    const auto c = position_code({10, 20, 30, 60}, 100, 100);
    const PositionCode want{0.1, 0.2, 0.2, 0.4, 0.08};
    for (std::size_t i = 0; i < 5; ++i) CHECK(c[i] == doctest::Approx(want[i]).epsilon(1e-15));
  }
  SUBCASE("horizontal translation changes only the first entry") {
    const auto a = position_code({10, 20, 30, 60}, 128, 100);
    const auto b = position_code({26, 20, 46, 60}, 128, 100);
    CHECK(b[0] - a[0] == 16.0 / 128.0);
    for (std::size_t i = 1; i < 5; ++i) CHECK(a[i] == b[i]);
  }
  SUBCASE("entries stay in [0, 1] and follow the formula") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
      const BoundingBox b = random_box(rng, 300);
      const auto c = position_code(b, 320, 320);
      for (double v : c) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      CHECK(c[4] == doctest::Approx(b.area() / (320.0 * 320.0)).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(position_code({10, 10, 10, 20}, 100, 100), DataError);
  CHECK_THROWS_AS(position_code({150, 10, 200, 20}, 100, 100), DataError);
}

TEST_CASE("iou") {
  const BoundingBox a{0, 0, 2, 2}, b{1, 1, 3, 3};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, {5, 5, 6, 6}) == 0.0);
  CHECK(iou(a, {2, 0, 4, 2}) == 0.0);
  CHECK(std::abs(iou(a, b) - 1.0 / 7.0) < 1e-15);
  CHECK(std::abs(iou(a, b) - hoi::testing::rasterized_iou(a, b, 1.0 / 64)) < 1e-3);
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const BoundingBox x = random_box(rng, 10), y = random_box(rng, 10);
    const double v = iou(x, y);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == iou(y, x));
    CHECK(iou(x, x) == 1.0);
    if (trial < 20) CHECK(std::abs(v - hoi::testing::rasterized_iou(x, y, 1.0 / 32)) < 0.02);
  }
}

TEST_CASE("render_spatial_map") {
  SUBCASE("identical boxes fill both channels") {
    const auto m = render_spatial_map({5, 5, 37, 90}, {5, 5, 37, 90});
    CHECK(lit(m.grid) == 2 * kMapSize * kMapSize);
  }
  SUBCASE("human on the left half lights columns 0..31") {
    const auto m = render_spatial_map({0, 0, 64, 64}, {64, 0, 128, 64});
    for (std::size_t r = 0; r < kMapSize; ++r)
      for (std::size_t c = 0; c < kMapSize; ++c) {
        // Cell centers sit at 2c+1 in box units.
        const double center = 2.0 * static_cast<double>(c) + 1.0;
        CHECK(cell(m.grid, 0, r, c) == (center <= 64.0 ? 1.0 : 0.0));
        CHECK(cell(m.grid, 1, r, c) == (center >= 64.0 ? 1.0 : 0.0));
      }
    CHECK(lit(m.grid) == kMapSize * kMapSize);
  }
  SUBCASE("disjoint boxes never share a cell") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 30; ++trial) {
      const BoundingBox h = random_box(rng, 100);
      const BoundingBox o = h.translated(h.width() + 1.0, 0.0);
      const auto m = render_spatial_map(h, o);
      for (std::size_t i = 0; i < kMapSize * kMapSize; ++i)
        CHECK(m.grid.data()[i] * m.grid.data()[kMapSize * kMapSize + i] == 0.0);
    }
  }
  SUBCASE("translating both boxes leaves the map unchanged") {
    const BoundingBox h{12, 30, 76, 222}, o{60, 100, 108, 132};
    const auto a = render_spatial_map(h, o);
    const auto b = render_spatial_map(h.translated(128, -16), o.translated(128, -16));
    CHECK(std::equal(a.grid.data().begin(), a.grid.data().end(), b.grid.data().begin()));
  }
}

TEST_CASE("render_pose_map") {
  const BoundingBox frame{0, 0, 64, 64};
  SUBCASE("missing keypoints give an empty map and a flag") {
    const auto m = render_pose_map(std::nullopt, frame);
    CHECK(m.keypoints_missing);
    CHECK(lit(m.grid) == 0);
  }
  SUBCASE("coincident joints light a single cell") {
    const auto m = render_pose_map(all_at(10.5, 20.5), frame);
    CHECK_FALSE(m.keypoints_missing);
    CHECK(lit(m.grid) == 1);
    CHECK(cell(m.grid, 0, 20, 10) == 1.0);
  }
  SUBCASE("horizontal edge across the frame lights one full row") {
    // Joint 15 only touches joint 13, so one edge spans the frame.
    Keypoints kp = all_at(0.5, 33.5);
    kp[15] = {63.5, 33.5};
    const auto m = render_pose_map(kp, frame);
    CHECK(lit(m.grid) == kMapSize);
    for (std::size_t c = 0; c < kMapSize; ++c) CHECK(cell(m.grid, 0, 33, c) == 1.0);
  }
  SUBCASE("diagonal edge matches a reference line walk") {
    Keypoints kp = all_at(0.5, 0.5);
    kp[15] = {63.5, 63.5};
    const auto m = render_pose_map(kp, frame);
    CHECK(lit(m.grid) == kMapSize);
    for (std::size_t i = 0; i < kMapSize; ++i) CHECK(cell(m.grid, 0, i, i) == 1.0);
  }
  SUBCASE("joints outside the frame are clipped") {
    Keypoints kp = all_at(-500, 10.5);
    kp[15] = {500, 10.5};
    const auto m = render_pose_map(kp, frame);
    CHECK(lit(m.grid) == kMapSize);
  }
  SUBCASE("translation covariance") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 64);
    Keypoints kp{};
    for (auto& p : kp) p = {std::round(u(rng)), std::round(u(rng))};
    Keypoints moved = kp;
    for (auto& p : moved) p = {p.x + 256, p.y + 64};
    const auto a = render_pose_map(kp, frame);
    const auto b = render_pose_map(moved, frame.translated(256, 64));
    CHECK(std::equal(a.grid.data().begin(), a.grid.data().end(), b.grid.data().begin()));
  }
  SUBCASE("skeleton edges form a tree over all joints") {
    std::vector<int> parent(kNumKeypoints);
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
    auto root = [&](int x) {
      while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
      return x;
    };
    for (const auto& [a, b] : kSkeletonEdges) {
      CHECK(root(a) != root(b));
      parent[static_cast<std::size_t>(root(a))] = root(b);
    }
  }
}

TEST_CASE("pair_proposals") {
  const Scene s = small_scene();
  SUBCASE("counts and order") {
    const auto pairs = pair_proposals(s, {0.4, 0.1});
    REQUIRE(pairs.size() == 6);
    CHECK(pairs[0].human_id == 1);
    CHECK(pairs[0].object_id == 2);
    CHECK(pairs[1].object_id == 5);
    CHECK(pairs[2].object_id == 7);
    CHECK(pairs[3].human_id == 3);
    for (const auto& p : pairs) {
      CHECK(s.humans[p.human_index].id == p.human_id);
      CHECK(s.objects[p.object_index].id == p.object_id);
      CHECK(p.spatial.grid.shape() == Shape{2, kMapSize, kMapSize});
      CHECK(p.pose.grid.shape() == Shape{1, kMapSize, kMapSize});
      CHECK(p.pose.keypoints_missing);
    }
  }
  SUBCASE("thresholds filter each group") {
    CHECK(pair_proposals(s, {0.6, 0.1}).size() == 3);
    CHECK(pair_proposals(s, {0.4, 0.2}).size() == 4);
    CHECK(pair_proposals(s, {0.95, 0.1}).empty());
  }
  SUBCASE("preset thresholds") {
    CHECK(kVcocoThresholds.human == 0.4);
    CHECK(kVcocoThresholds.object == 0.1);
    CHECK(kHicoThresholds.human == 0.6);
    CHECK(kHicoThresholds.object == 0.1);
  }
  SUBCASE("count is the product of qualifying group sizes") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
      Scene r;
      r.image_width = r.image_height = 400;
      int id = 0;
      std::size_t nh = 0, no = 0;
      for (int i = 0; i < 3; ++i) {
        r.humans.push_back(person(id++, u(rng)));
        nh += r.humans.back().score >= 0.4;
      }
      for (int i = 0; i < 4; ++i) {
        r.objects.push_back(thing(id++, u(rng)));
        no += r.objects.back().score >= 0.1;
      }
      CHECK(pair_proposals(r, kVcocoThresholds).size() == nh * no);
    }
  }
}

TEST_CASE("validate_scene") {
  Scene s = small_scene();
  CHECK_NOTHROW(validate_scene(s));
  SUBCASE("duplicate ids") {
    s.objects[0].id = 3;
    CHECK_THROWS_AS(validate_scene(s), DataError);
  }
  SUBCASE("degenerate box") {
    s.humans[0].box = {10, 10, 10, 50};
    CHECK_THROWS_AS(validate_scene(s), DataError);
  }
  SUBCASE("score out of range") {
    s.objects[1].score = 1.5;
    CHECK_THROWS_AS(validate_scene(s), DataError);
  }
  SUBCASE("appearance length") {
    for (auto& h : s.humans) h.appearance.assign(4, 0.0);
    for (auto& o : s.objects) o.appearance.assign(4, 0.0);
    CHECK_NOTHROW(validate_scene(s, 4));
    s.objects[2].appearance.pop_back();
    CHECK_THROWS_AS(validate_scene(s, 4), DataError);
  }
  SUBCASE("objects cannot use the human class") {
    s.objects[0].class_id = kHumanClass;
    CHECK_THROWS_AS(validate_scene(s), DataError);
  }
  CHECK(s.find(2) != nullptr);
  CHECK(s.find(99) == nullptr);
}

TEST_CASE("union and clamp") {
  CHECK(union_box({0, 0, 2, 2}, {1, 1, 3, 5}) == BoundingBox{0, 0, 3, 5});
  CHECK(clamp_box({-5, -5, 50, 500}, 40, 100) == BoundingBox{0, 0, 40, 100});
}

TEST_CASE("knowledge base") {
  const KnowledgeBase kb(8, 4, {{}, {7, 2, 5, 2}, {0, 1, 2, 3, 4, 5, 6, 7}, {}});
  CHECK(kb.verbs_for_object(1) == std::vector<int>{2, 5, 7});
  CHECK(kb.verbs_for_object(2).size() == 8);
  CHECK(kb.cooccurs(1, 5));
  CHECK_FALSE(kb.cooccurs(1, 4));
  CHECK_FALSE(kb.cooccurs(9, 4));
  try {
    kb.verbs_for_object(3);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("empty co-occurrence") != std::string::npos);
  }
  CHECK_THROWS_AS(kb.verbs_for_object(4), DataError);
  CHECK_THROWS_AS(kb.verbs_for_object(-1), DataError);
  CHECK(kb.object_embed().shape() == Shape{4, kEmbeddingDim});
  CHECK(kb.verb_embed().shape() == Shape{8, kEmbeddingDim});
  CHECK_FALSE(kb.object_embed().requires_grad());
  CHECK(kb.verb_embedding(3).shape() == Shape{kEmbeddingDim});
  CHECK(kb.verb_embedding(3).at(5) == kb.verb_embed().at(3, 5));

  const KnowledgeBase same(8, 4, {{}, {2, 5, 7}, {0, 1, 2, 3, 4, 5, 6, 7}, {}});
  CHECK(std::equal(kb.verb_embed().data().begin(), kb.verb_embed().data().end(),
                   same.verb_embed().data().begin()));
  const KnowledgeBase other(8, 4, {}, kDefaultEmbeddingSeed + 1);
  CHECK_FALSE(std::equal(kb.verb_embed().data().begin(), kb.verb_embed().data().end(),
                         other.verb_embed().data().begin()));
  CHECK_THROWS_AS(KnowledgeBase(0, 4, {}), DataError);
  CHECK_THROWS_AS(KnowledgeBase(3, 1, {}), DataError);
}
