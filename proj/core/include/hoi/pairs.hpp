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
#include <optional>
#include <utility>
#include <vector>

#include "hoi/scene.hpp"
#include "hoi/tensor.hpp"

namespace hoi {

// Side length of the rasterized pose and spatial maps.
inline constexpr std::size_t kMapSize = 64;

// Joint pairs of the 17-keypoint skeleton (nose, eyes, ears, shoulders,
// elbows, wrists, hips, knees, ankles); a tree over all joints.
inline constexpr std::array<std::pair<int, int>, 16> kSkeletonEdges{{
    {0, 1}, {0, 2}, {1, 3}, {2, 4}, {0, 5}, {0, 6}, {5, 7}, {7, 9},
    {6, 8}, {8, 10}, {5, 11}, {6, 12}, {11, 13}, {13, 15}, {12, 14}, {14, 16},
}};

// Skeleton line drawing, [1×64×64] with values in {0, 1}.
struct PoseMap {
  Tensor grid;
  bool keypoints_missing = false;
};

// Human footprint (channel 0) and object footprint (channel 1), [2×64×64].
struct SpatialMap {
  Tensor grid;
};

// A grid cell is set iff its center lies inside the box (closed interval),
// with the grid spanning the union of both boxes.
SpatialMap render_spatial_map(const BoundingBox& human, const BoundingBox& object);

// Draws every skeleton edge with integer line rasterization in the frame of
// union_box. Cells outside the frame are dropped.
PoseMap render_pose_map(const std::optional<Keypoints>& keypoints, const BoundingBox& union_box);

struct PairProposal {
  int human_id = 0;
  int object_id = 0;
  std::size_t human_index = 0;   // into Scene::humans
  std::size_t object_index = 0;  // into Scene::objects
  PoseMap pose;
  SpatialMap spatial;
  PositionCode human_code{};
  PositionCode object_code{};
};

struct ProposalThresholds {
  double human = 0.4;
  double object = 0.1;
};

inline constexpr ProposalThresholds kVcocoThresholds{0.4, 0.1};
inline constexpr ProposalThresholds kHicoThresholds{0.6, 0.1};

// Every human with score >= thresholds.human paired with every object with
// score >= thresholds.object, ordered by (human id, object id).
std::vector<PairProposal> pair_proposals(const Scene& scene, ProposalThresholds thresholds);

PairProposal make_pair(const Scene& scene, std::size_t human_index, std::size_t object_index);

}  // namespace hoi
