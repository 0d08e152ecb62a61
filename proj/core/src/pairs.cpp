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
#include "hoi/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "hoi/errors.hpp"

namespace hoi {

namespace {

constexpr int kGrid = static_cast<int>(kMapSize);

void light(std::vector<double>& grid, int row, int col) {
  if (row < 0 || row >= kGrid || col < 0 || col >= kGrid) return;
  grid[static_cast<std::size_t>(row * kGrid + col)] = 1.0;
}

// Bresenham over integer cells, visiting both endpoints.
void draw_line(std::vector<double>& grid, int r0, int c0, int r1, int c1) {
  const int dc = std::abs(c1 - c0), sc = c0 < c1 ? 1 : -1;
  const int dr = -std::abs(r1 - r0), sr = r0 < r1 ? 1 : -1;
  int err = dc + dr;
  while (true) {
    light(grid, r0, c0);
    if (r0 == r1 && c0 == c1) break;
    const int e2 = 2 * err;
    if (e2 >= dr) {
      err += dr;
      c0 += sc;
    }
    if (e2 <= dc) {
      err += dc;
      r0 += sr;
    }
  }
}

int to_cell(double v, double origin, double extent) {
  const double cell = std::floor((v - origin) / extent * static_cast<double>(kGrid));
  // Far-away joints are pinned just outside the frame to bound line length.
  return static_cast<int>(std::clamp(cell, -1.0 - kGrid, 2.0 * kGrid));
}

}  // namespace

SpatialMap render_spatial_map(const BoundingBox& human, const BoundingBox& object) {
  const BoundingBox u = union_box(human, object);
  std::vector<double> grid(2 * kMapSize * kMapSize, 0.0);
  const double cw = u.width() / kGrid, ch = u.height() / kGrid;
  for (int r = 0; r < kGrid; ++r) {
    const double cy = u.y1 + (r + 0.5) * ch;
    for (int c = 0; c < kGrid; ++c) {
      const double cx = u.x1 + (c + 0.5) * cw;
      const std::size_t cell = static_cast<std::size_t>(r * kGrid + c);
      if (cx >= human.x1 && cx <= human.x2 && cy >= human.y1 && cy <= human.y2) grid[cell] = 1.0;
      if (cx >= object.x1 && cx <= object.x2 && cy >= object.y1 && cy <= object.y2) {
        grid[kMapSize * kMapSize + cell] = 1.0;
      }
    }
  }
  return {Tensor({2, kMapSize, kMapSize}, std::move(grid))};
}

PoseMap render_pose_map(const std::optional<Keypoints>& keypoints, const BoundingBox& union_box) {
  std::vector<double> grid(kMapSize * kMapSize, 0.0);
  if (!keypoints) return {Tensor({1, kMapSize, kMapSize}, std::move(grid)), true};
  const auto& kp = *keypoints;
  for (const auto& [a, b] : kSkeletonEdges) {
    const int c0 = to_cell(kp[a].x, union_box.x1, union_box.width());
    const int r0 = to_cell(kp[a].y, union_box.y1, union_box.height());
    const int c1 = to_cell(kp[b].x, union_box.x1, union_box.width());
    const int r1 = to_cell(kp[b].y, union_box.y1, union_box.height());
    draw_line(grid, r0, c0, r1, c1);
  }
  return {Tensor({1, kMapSize, kMapSize}, std::move(grid)), false};
}

PairProposal make_pair(const Scene& scene, std::size_t human_index, std::size_t object_index) {
  const Instance& h = scene.humans.at(human_index);
  const Instance& o = scene.objects.at(object_index);
  PairProposal p;
  p.human_id = h.id;
  p.object_id = o.id;
  p.human_index = human_index;
  p.object_index = object_index;
  p.spatial = render_spatial_map(h.box, o.box);
  p.pose = render_pose_map(h.keypoints, union_box(h.box, o.box));
  p.human_code = position_code(h.box, scene.image_width, scene.image_height);
  p.object_code = position_code(o.box, scene.image_width, scene.image_height);
  return p;
}

std::vector<PairProposal> pair_proposals(const Scene& scene, ProposalThresholds thresholds) {
  auto qualifying = [](const std::vector<Instance>& group, double t) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < group.size(); ++i)
      if (group[i].score >= t) idx.push_back(i);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return group[a].id < group[b].id; });
    return idx;
  };
  const auto humans = qualifying(scene.humans, thresholds.human);
  const auto objects = qualifying(scene.objects, thresholds.object);
  std::vector<PairProposal> out;
  out.reserve(humans.size() * objects.size());
  for (auto h : humans)
    for (auto o : objects) out.push_back(make_pair(scene, h, o));
  return out;
}

}  // namespace hoi
