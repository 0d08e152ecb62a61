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

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hoi/fusion.hpp"
#include "hoi/scene.hpp"

namespace hoi {

inline constexpr double kMatchIou = 0.5;

struct MatchResult {
  std::vector<bool> true_positive;               // one flag per detection, input order
  std::map<int, std::size_t> gt_count_per_verb;  // over all scenes
};

/// Greedy matching of score-sorted detections to ground truth.
///
/// A detection is a true positive iff its scene still holds an unconsumed
/// ground-truth triplet with the same verb and object class whose human and
/// object boxes both reach iou >= iou_threshold. Among eligible triplets the
/// one with the largest min(human iou, object iou) is consumed. Throws
/// DataError if detections are not sorted by non-increasing score.
MatchResult match_triplets(std::span<const ScoredTriplet> detections,
                           const std::map<int, std::vector<GtTriplet>>& gt_by_scene,
                           double iou_threshold = kMatchIou);

// Non-interpolated area under the precision/recall step curve of detections
// flagged in score order. Returns nullopt when num_gt is 0.
std::optional<double> average_precision(const std::vector<bool>& flags, std::size_t num_gt);

struct VerbResult {
  int verb = 0;
  std::vector<bool> flags;  // score order
  std::size_t num_gt = 0;
};

struct VerbAp {
  int verb = 0;
  double ap = 0.0;
  std::size_t num_gt = 0;
  std::size_t detections = 0;
  std::size_t true_positives = 0;
};

struct ApReport {
  std::vector<VerbAp> per_verb;  // verbs with at least one ground truth, ascending id
  double mean_ap = 0.0;
  std::size_t detections = 0;
  std::size_t ground_truths = 0;
};

// Mean AP over verbs that have ground truth; throws DataError("empty
// evaluation") when none has.
ApReport role_map(std::span<const VerbResult> results);

// Sorts detections, matches them against the scenes' ground truth and
// reports per-verb AP.
ApReport evaluate_detections(std::vector<ScoredTriplet> detections, std::span<const Scene> scenes,
                             double iou_threshold = kMatchIou);

std::string format_report(const ApReport& report);

}  // namespace hoi
