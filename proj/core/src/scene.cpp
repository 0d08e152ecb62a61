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
#include "hoi/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "hoi/errors.hpp"

namespace hoi {

BoundingBox union_box(const BoundingBox& a, const BoundingBox& b) {
  return {std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2),
          std::max(a.y2, b.y2)};
}

BoundingBox clamp_box(const BoundingBox& box, int image_width, int image_height) {
  const double w = image_width, h = image_height;
  return {std::clamp(box.x1, 0.0, w), std::clamp(box.y1, 0.0, h), std::clamp(box.x2, 0.0, w),
          std::clamp(box.y2, 0.0, h)};
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

PositionCode position_code(const BoundingBox& box, int image_width, int image_height) {
  if (image_width <= 0 || image_height <= 0) throw DataError("image extents must be positive");
  const BoundingBox b = clamp_box(box, image_width, image_height);
  if (!b.valid()) throw DataError("position_code: degenerate box");
  const double w = image_width, h = image_height;
  return {b.x1 / w, b.y1 / h, b.width() / w, b.height() / h, b.area() / (w * h)};
}

const Instance* Scene::find(int id) const {
  for (const auto& i : humans)
    if (i.id == id) return &i;
  for (const auto& i : objects)
    if (i.id == id) return &i;
  return nullptr;
}

void validate_scene(const Scene& scene, std::optional<std::size_t> appearance_dim) {
  const std::string where = "scene " + std::to_string(scene.scene_id) + ": ";
  if (scene.image_width <= 0 || scene.image_height <= 0) {
    throw DataError(where + "image extents must be positive");
  }
  std::set<int> ids;
  auto check = [&](const Instance& inst, bool human) {
    const std::string who = where + "instance " + std::to_string(inst.id) + ": ";
    if (!ids.insert(inst.id).second) throw DataError(where + "duplicate id " + std::to_string(inst.id));
    if (inst.is_human != human) throw DataError(who + "listed in the wrong group");
    if (human && inst.class_id != kHumanClass) throw DataError(who + "humans must use class 0");
    if (!human && inst.class_id <= kHumanClass) throw DataError(who + "objects need a class id >= 1");
    if (!inst.box.valid() || !clamp_box(inst.box, scene.image_width, scene.image_height).valid()) {
      throw DataError(who + "degenerate box");
    }
    if (!(inst.score >= 0.0 && inst.score <= 1.0)) throw DataError(who + "score outside [0, 1]");
    if (appearance_dim && inst.appearance.size() != *appearance_dim) {
      throw DataError(who + "appearance has " + std::to_string(inst.appearance.size()) +
                      " values, expected " + std::to_string(*appearance_dim));
    }
    for (double v : inst.appearance)
      if (!std::isfinite(v)) throw DataError(who + "non-finite appearance value");
    if (!human && inst.keypoints) throw DataError(who + "only humans carry keypoints");
  };
  for (const auto& h : scene.humans) check(h, true);
  for (const auto& o : scene.objects) check(o, false);
  for (const auto& t : scene.gt_triplets) {
    if (!t.human_box.valid() || !t.object_box.valid()) throw DataError(where + "degenerate gt box");
    if (t.verb < 0) throw DataError(where + "negative verb id");
  }
}

}  // namespace hoi
