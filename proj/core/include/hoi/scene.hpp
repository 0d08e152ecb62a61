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

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "hoi/tensor.hpp"

namespace hoi {

// Axis-aligned box in image pixel coordinates.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const { return x1 < x2 && y1 < y2; }
  BoundingBox translated(double dx, double dy) const {
    return {x1 + dx, y1 + dy, x2 + dx, y2 + dy};
  }
  bool operator==(const BoundingBox&) const = default;
};

BoundingBox union_box(const BoundingBox& a, const BoundingBox& b);
BoundingBox clamp_box(const BoundingBox& box, int image_width, int image_height);

// Intersection over union; 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

using PositionCode = std::array<double, 5>;

// [x1/w, y1/h, box_w/w, box_h/h, box_area/(w*h)] of the box clamped to the
// image. Throws DataError when the clamped box is degenerate.
PositionCode position_code(const BoundingBox& box, int image_width, int image_height);

inline constexpr std::size_t kNumKeypoints = 17;
inline constexpr int kHumanClass = 0;

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
};
using Keypoints = std::array<Keypoint, kNumKeypoints>;

struct Instance {
  int id = 0;
  bool is_human = false;
  int class_id = 0;
  BoundingBox box;
  double score = 1.0;
  std::vector<double> appearance;
  std::optional<Keypoints> keypoints;
};

struct GtTriplet {
  BoundingBox human_box;
  BoundingBox object_box;
  int object_class = 0;
  int verb = 0;
};

struct Scene {
  int scene_id = 0;
  int image_width = 0;
  int image_height = 0;
  std::vector<Instance> humans;
  std::vector<Instance> objects;
  std::vector<GtTriplet> gt_triplets;

  const Instance* find(int id) const;
};

// Checks ids, boxes, scores, appearance lengths and keypoint counts. Throws
// DataError describing the first violation.
void validate_scene(const Scene& scene, std::optional<std::size_t> appearance_dim = {});

}  // namespace hoi
