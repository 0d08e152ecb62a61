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
#include "hoi/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <tuple>

#include "hoi/errors.hpp"

namespace hoi {

MatchResult match_triplets(std::span<const ScoredTriplet> detections,
                           const std::map<int, std::vector<GtTriplet>>& gt_by_scene,
                           double iou_threshold) {
  for (std::size_t i = 1; i < detections.size(); ++i) {
    if (detections[i].score > detections[i - 1].score) {
      throw DataError("match_triplets: detections are not sorted by descending score");
    }
  }
  MatchResult result;
  std::map<int, std::vector<bool>> consumed;
  for (const auto& [scene, gts] : gt_by_scene) {
    consumed[scene].assign(gts.size(), false);
    for (const auto& g : gts) ++result.gt_count_per_verb[g.verb];
  }
  result.true_positive.reserve(detections.size());
  for (const auto& det : detections) {
    bool hit = false;
    const auto it = gt_by_scene.find(det.scene_id);
    if (it != gt_by_scene.end()) {
      const auto& gts = it->second;
      auto& used = consumed[det.scene_id];
      double best = -1.0;
      std::size_t best_index = 0;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (used[g] || gts[g].verb != det.verb || gts[g].object_class != det.object_class) continue;
        const double hi = iou(det.human_box, gts[g].human_box);
        const double oi = iou(det.object_box, gts[g].object_box);
        if (hi < iou_threshold || oi < iou_threshold) continue;
        const double overlap = std::min(hi, oi);
        if (overlap > best) {
          best = overlap;
          best_index = g;
        }
      }
      if (best >= 0.0) {
        used[best_index] = true;
        hit = true;
      }
    }
    result.true_positive.push_back(hit);
  }
  return result;
}

std::optional<double> average_precision(const std::vector<bool>& flags, std::size_t num_gt) {
  if (num_gt == 0) return std::nullopt;
  // Double-double accumulation so the result is the correctly rounded area.
  double hi = 0.0, lo = 0.0;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < flags.size(); ++k) {
    if (!flags[k]) continue;
    ++tp;
    // Recall rises by 1/num_gt at every true positive.
    const double n = static_cast<double>(tp), d = static_cast<double>(k + 1);
    const double q = n / d;
    const double q_err = std::fma(-q, d, n) / d;
    const double s = hi + q;
    const double b = s - hi;
    lo += (hi - (s - b)) + (q - b) + q_err;
    hi = s;
  }
  const double g = static_cast<double>(num_gt);
  const double q = hi / g;
  const double r = std::fma(-q, g, hi) + lo;
  return q + r / g;
}

ApReport role_map(std::span<const VerbResult> results) {
  ApReport report;
  std::vector<VerbResult> sorted(results.begin(), results.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const VerbResult& a, const VerbResult& b) { return a.verb < b.verb; });
  double total = 0.0;
  for (const auto& r : sorted) {
    report.detections += r.flags.size();
    report.ground_truths += r.num_gt;
    const auto ap = average_precision(r.flags, r.num_gt);
    if (!ap) continue;
    VerbAp entry;
    entry.verb = r.verb;
    entry.ap = *ap;
    entry.num_gt = r.num_gt;
    entry.detections = r.flags.size();
    entry.true_positives = static_cast<std::size_t>(std::count(r.flags.begin(), r.flags.end(), true));
    report.per_verb.push_back(entry);
    total += *ap;
  }
  if (report.per_verb.empty()) throw DataError("empty evaluation");
  report.mean_ap = total / static_cast<double>(report.per_verb.size());
  return report;
}

ApReport evaluate_detections(std::vector<ScoredTriplet> detections, std::span<const Scene> scenes,
                             double iou_threshold) {
  std::stable_sort(detections.begin(), detections.end(),
                   [](const ScoredTriplet& a, const ScoredTriplet& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return std::tie(a.scene_id, a.human_id, a.object_id, a.verb) <
                            std::tie(b.scene_id, b.human_id, b.object_id, b.verb);
                   });
  std::map<int, std::vector<GtTriplet>> gt_by_scene;
  for (const auto& s : scenes) {
    if (gt_by_scene.count(s.scene_id)) {
      throw DataError("duplicate scene id " + std::to_string(s.scene_id) + " in evaluation set");
    }
    gt_by_scene[s.scene_id] = s.gt_triplets;
  }
  const MatchResult match = match_triplets(detections, gt_by_scene, iou_threshold);
  std::map<int, VerbResult> by_verb;
  for (const auto& [verb, count] : match.gt_count_per_verb) {
    by_verb[verb].verb = verb;
    by_verb[verb].num_gt = count;
  }
  for (std::size_t i = 0; i < detections.size(); ++i) {
    auto& r = by_verb[detections[i].verb];
    r.verb = detections[i].verb;
    r.flags.push_back(match.true_positive[i]);
  }
  std::vector<VerbResult> results;
  for (auto& [verb, r] : by_verb) results.push_back(std::move(r));
  return role_map(results);
}

std::string format_report(const ApReport& report) {
  std::ostringstream out;
  char line[128];
  out << "verb      AP   #gt  #det   #tp\n";
  for (const auto& v : report.per_verb) {
    std::snprintf(line, sizeof line, "%4d  %6.4f  %4zu  %4zu  %4zu\n", v.verb, v.ap, v.num_gt,
                  v.detections, v.true_positives);
    out << line;
  }
  std::snprintf(line, sizeof line, "mAP %.4f over %zu verbs (%zu detections, %zu ground truths)\n",
                report.mean_ap, report.per_verb.size(), report.detections, report.ground_truths);
  out << line;
  return out.str();
}

}  // namespace hoi
