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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hoi/evaluation.hpp"
#include "hoi/fusion.hpp"
#include "hoi/knowledge.hpp"
#include "hoi/scene.hpp"

namespace hoi {

/// Scene documents hold image_width, image_height, instances and gt_triplets,
/// plus an optional scene_id. Instances list id, is_human, class_id,
/// box [x1,y1,x2,y2], score, appearance and optional keypoints as 17 [x,y]
/// pairs. A missing scene_id defaults to the record's position in its file.
std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text, int default_id = 0);

// Accepts a single scene object, a JSON array of scenes, or one scene per
// line. Throws DataError on unreadable files or malformed records.
std::vector<Scene> read_scenes(const std::filesystem::path& path);
// One scene per line.
void write_scenes(const std::filesystem::path& path, std::span<const Scene> scenes);

// {num_verbs, num_object_classes, cooccur: {class_id: [verb ids]}}; classes
// absent from cooccur have no verbs.
std::string knowledge_to_json(const KnowledgeBase& kb);
KnowledgeBase knowledge_from_json(const std::string& text);
KnowledgeBase read_knowledge(const std::filesystem::path& path);
void write_knowledge(const std::filesystem::path& path, const KnowledgeBase& kb);

std::string triplet_to_json(const ScoredTriplet& triplet);
ScoredTriplet triplet_from_json(const std::string& text);
std::vector<ScoredTriplet> read_detections(const std::filesystem::path& path);
void write_detections(const std::filesystem::path& path, std::span<const ScoredTriplet> triplets);

std::string report_to_json(const ApReport& report);

std::string read_text(const std::filesystem::path& path);
// Writes through a temporary file renamed into place.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace hoi
