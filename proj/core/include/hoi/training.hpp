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

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hoi/evaluation.hpp"
#include "hoi/model.hpp"
#include "hoi/optim.hpp"
#include "hoi/pairs.hpp"
#include "hoi/scene.hpp"

namespace hoi {

struct PairLabels {
  std::vector<double> l;  // length V, entries 0 or 1
  bool interactive = false;
};

// l_v = 1 iff a ground-truth triplet with verb v and the pair's object class
// overlaps both boxes with iou >= iou_threshold.
PairLabels make_labels(const BoundingBox& human, const BoundingBox& object, int object_class,
                       std::span<const GtTriplet> gt, int num_verbs,
                       double iou_threshold = kMatchIou);
PairLabels make_labels(const Scene& scene, const PairProposal& pair, int num_verbs,
                       double iou_threshold = kMatchIou);

// [N_obj×M_hum] in selection order; entry (i, j) is 1 iff the pair of
// selected human j and selected object i is interactive.
Tensor build_gt_matrix(const Scene& scene, const InstanceSelection& selection, int num_verbs,
                       double iou_threshold = kMatchIou);

/// Everything about one training scene that does not depend on parameters.
struct SceneBatch {
  const Scene* scene = nullptr;
  InstanceSelection selection;
  std::vector<PairProposal> pairs;
  std::vector<PairLabels> labels;  // aligned with pairs
  Tensor gt_matrix;                // [N×M]
  Tensor verb_targets;             // [P×V]
};

SceneBatch prepare_scene(const Scene& scene, int num_verbs, ProposalThresholds thresholds);

struct LossBreakdown {
  Tensor total;  // scalar, differentiable when recorded on a tape
  double interactiveness = 0.0;
  double s_c = 0.0;
  double s_r = 0.0;
};

// Per-pair mean of bce(s_c, l) + sum over Verb_o of bce(s_r[v], l_v), plus
// the interactiveness loss of the scene. A scene without pairs yields 0.
LossBreakdown scene_loss(const Model& model, const SceneBatch& batch);

struct TrainConfig {
  std::size_t iterations = 3000;
  double learning_rate = 1e-2;
  // Iterations after which the learning rate is multiplied by lr_decay.
  std::vector<std::size_t> lr_decay_steps;
  double lr_decay = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  // Gradients are rescaled to this global L2 norm when they exceed it; 0 disables.
  double grad_clip = 1.0;
  std::size_t batch_size = 1;  // scenes per step
  std::size_t log_interval = 10;
  std::size_t eval_interval = 0;  // 0 disables validation during training
  std::uint64_t seed = 1;
  ProposalThresholds thresholds = kVcocoThresholds;

  void validate() const;
  double learning_rate_at(std::size_t iteration) const;
};

// "vcoco": lr 1e-3, weight decay 5e-4. "desk": lr 1e-2, weight decay 1e-4.
TrainConfig train_preset(const std::string& name);

struct MetricsRow {
  std::size_t iteration = 0;
  double loss = 0.0;
  double interactiveness_loss = 0.0;
  double s_c_loss = 0.0;
  double s_r_loss = 0.0;
  double lr = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

struct TrainHooks {
  // Called once per log interval with the interval's mean losses.
  std::function<void(const MetricsRow&)> on_log;
  // Called when the validation loss improves on its best value so far.
  std::function<void(std::size_t iteration, double validation_loss)> on_best;
};

struct TrainResult {
  std::size_t iteration = 0;  // last completed iteration
  std::vector<MetricsRow> log;
  std::optional<double> best_validation_loss;
};

/// Runs iterations start_iteration+1 .. config.iterations.
///
/// Scenes are visited in epochs, each a permutation seeded by (seed, epoch),
/// so a run resumed from iteration k sees the same scenes as an uninterrupted
/// one. Throws NumericError when the loss stops being finite.
TrainResult train(Model& model, SgdOptimizer& optimizer, std::span<const Scene> train_scenes,
                  std::span<const Scene> val_scenes, const TrainConfig& config,
                  std::size_t start_iteration = 0, const TrainHooks& hooks = {});

// Rescales all gradients so their joint L2 norm is at most max_norm and
// returns the norm before rescaling.
double clip_gradients(std::span<Tensor> params, double max_norm);

// Mean loss over scenes, computed without recording gradients.
MetricsRow dataset_loss(const Model& model, std::span<const Scene> scenes,
                        ProposalThresholds thresholds = kVcocoThresholds);

}  // namespace hoi
