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
#include "hoi/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "hoi/errors.hpp"
#include "hoi/ops.hpp"

namespace hoi {

PairLabels make_labels(const BoundingBox& human, const BoundingBox& object, int object_class,
                       std::span<const GtTriplet> gt, int num_verbs, double iou_threshold) {
  PairLabels labels;
  labels.l.assign(static_cast<std::size_t>(num_verbs), 0.0);
  for (const auto& g : gt) {
    if (g.object_class != object_class) continue;
    if (g.verb < 0 || g.verb >= num_verbs) {
      throw DataError("ground-truth verb " + std::to_string(g.verb) + " outside vocabulary of " +
                      std::to_string(num_verbs));
    }
    if (iou(human, g.human_box) >= iou_threshold && iou(object, g.object_box) >= iou_threshold) {
      labels.l[static_cast<std::size_t>(g.verb)] = 1.0;
      labels.interactive = true;
    }
  }
  return labels;
}

PairLabels make_labels(const Scene& scene, const PairProposal& pair, int num_verbs,
                       double iou_threshold) {
  const Instance& h = scene.humans.at(pair.human_index);
  const Instance& o = scene.objects.at(pair.object_index);
  return make_labels(h.box, o.box, o.class_id, scene.gt_triplets, num_verbs, iou_threshold);
}

Tensor build_gt_matrix(const Scene& scene, const InstanceSelection& selection, int num_verbs,
                       double iou_threshold) {
  const std::size_t n = selection.objects.size(), m = selection.humans.size();
  std::vector<double> gt(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Instance& o = scene.objects.at(selection.objects[i]);
    for (std::size_t j = 0; j < m; ++j) {
      const Instance& h = scene.humans.at(selection.humans[j]);
      const auto labels =
          make_labels(h.box, o.box, o.class_id, scene.gt_triplets, num_verbs, iou_threshold);
      gt[i * m + j] = labels.interactive ? 1.0 : 0.0;
    }
  }
  if (n == 0 || m == 0) return {};
  return Tensor({n, m}, std::move(gt));
}

SceneBatch prepare_scene(const Scene& scene, int num_verbs, ProposalThresholds thresholds) {
  SceneBatch batch;
  batch.scene = &scene;
  batch.selection = select_instances(scene, thresholds);
  batch.pairs = pair_proposals(scene, thresholds);
  if (batch.pairs.empty()) return batch;
  const auto v = static_cast<std::size_t>(num_verbs);
  std::vector<double> targets;
  targets.reserve(batch.pairs.size() * v);
  for (const auto& p : batch.pairs) {
    batch.labels.push_back(make_labels(scene, p, num_verbs));
    targets.insert(targets.end(), batch.labels.back().l.begin(), batch.labels.back().l.end());
  }
  batch.verb_targets = Tensor({batch.pairs.size(), v}, std::move(targets));
  batch.gt_matrix = build_gt_matrix(scene, batch.selection, num_verbs);
  return batch;
}

LossBreakdown scene_loss(const Model& model, const SceneBatch& batch) {
  LossBreakdown out;
  if (batch.pairs.empty()) {
    out.total = Tensor::scalar(0.0);
    return out;
  }
  const SceneEncoding encoding = model.encode(*batch.scene, batch.selection);
  const PairScores scores = model.score_pairs(*batch.scene, encoding, batch.pairs);
  std::vector<Tensor> terms;
  if (!encoding.m_att.empty()) {
    terms.push_back(interactiveness_loss(encoding.m_att, batch.gt_matrix));
    out.interactiveness = terms.back().item();
  }
  terms.push_back(ops::bce(scores.s_c, batch.verb_targets));
  out.s_c = terms.back().item();
  const std::size_t rows = scores.row_verb.size();
  if (rows > 0) {
    std::vector<double> targets(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      targets[r] = batch.labels[scores.row_pair[r]].l[static_cast<std::size_t>(scores.row_verb[r])];
    }
    // Mean over rows rescaled to a per-pair sum over each pair's verbs.
    const double per_pair = static_cast<double>(rows) / static_cast<double>(batch.pairs.size());
    terms.push_back(ops::scale(ops::bce(scores.s_r, Tensor({rows}, std::move(targets))), per_pair));
    out.s_r = terms.back().item();
  }
  Tensor total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) total = ops::add(total, terms[i]);
  out.total = total;
  return out;
}

void TrainConfig::validate() const {
  if (learning_rate < 0.0 || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and nonnegative");
  }
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be nonnegative");
  if (grad_clip < 0.0) throw ConfigError("grad_clip must be nonnegative");
  if (lr_decay <= 0.0) throw ConfigError("lr_decay must be positive");
  if (iterations == 0) throw ConfigError("iterations must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (log_interval == 0) throw ConfigError("log_interval must be positive");
  if (!std::is_sorted(lr_decay_steps.begin(), lr_decay_steps.end())) {
    throw ConfigError("lr_decay_steps must be ascending");
  }
  for (double t : {thresholds.human, thresholds.object}) {
    if (t < 0.0 || t > 1.0) throw ConfigError("detection thresholds must lie in [0, 1]");
  }
}

double TrainConfig::learning_rate_at(std::size_t iteration) const {
  double lr = learning_rate;
  for (auto step : lr_decay_steps)
    if (iteration > step) lr *= lr_decay;
  return lr;
}

TrainConfig train_preset(const std::string& name) {
  TrainConfig config;
  if (name == "vcoco") {
    config.learning_rate = 1e-3;
    config.weight_decay = 5e-4;
  } else if (name == "desk") {
    config.learning_rate = 1e-2;
    config.weight_decay = 1e-4;
  } else {
    throw ConfigError("unknown training preset '" + name + "'");
  }
  return config;
}

std::string metrics_csv_header() { return "iteration,loss,interactiveness_loss,s_c_loss,s_r_loss,lr"; }

std::string metrics_csv_row(const MetricsRow& row) {
  char line[256];
  std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g", row.iteration, row.loss,
                row.interactiveness_loss, row.s_c_loss, row.s_r_loss, row.lr);
  return line;
}

namespace {

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace

TrainResult train(Model& model, SgdOptimizer& optimizer, std::span<const Scene> train_scenes,
                  std::span<const Scene> val_scenes, const TrainConfig& config,
                  std::size_t start_iteration, const TrainHooks& hooks) {
  config.validate();
  if (train_scenes.empty()) throw DataError("training set is empty");
  const int num_verbs = model.knowledge().num_verbs();
  std::vector<SceneBatch> batches;
  batches.reserve(train_scenes.size());
  for (const auto& s : train_scenes) batches.push_back(prepare_scene(s, num_verbs, config.thresholds));

  TrainResult result;
  result.iteration = start_iteration;
  std::vector<Tensor> params = model.parameters().tensors();
  const std::size_t n = batches.size();
  std::size_t cached_epoch = static_cast<std::size_t>(-1);
  std::vector<std::size_t> order;
  MetricsRow window;
  std::size_t window_count = 0;

  for (std::size_t k = start_iteration + 1; k <= config.iterations; ++k) {
    for (auto& p : params) p.zero_grad();
    Tape tape;
    std::vector<Tensor> totals;
    double inter = 0.0, sc = 0.0, sr = 0.0;
    {
      TapeScope scope(tape);
      for (std::size_t b = 0; b < config.batch_size; ++b) {
        const std::size_t pos = (k - 1) * config.batch_size + b;
        if (pos / n != cached_epoch) {
          cached_epoch = pos / n;
          order = epoch_order(n, config.seed, cached_epoch);
        }
        const LossBreakdown loss = scene_loss(model, batches[order[pos % n]]);
        totals.push_back(loss.total);
        inter += loss.interactiveness;
        sc += loss.s_c;
        sr += loss.s_r;
      }
    }
    const Tensor total = ops::average(totals);
    const double value = total.item();
    if (!std::isfinite(value)) {
      throw NumericError("loss became non-finite (" + std::to_string(value) + ") at iteration " +
                         std::to_string(k));
    }
    if (total.requires_grad()) tape.backward(total);
    if (config.grad_clip > 0.0) clip_gradients(params, config.grad_clip);
    const double lr = config.learning_rate_at(k);
    optimizer.set_learning_rate(lr);
    optimizer.step(params);
    result.iteration = k;

    const double batch = static_cast<double>(config.batch_size);
    window.loss += value;
    window.interactiveness_loss += inter / batch;
    window.s_c_loss += sc / batch;
    window.s_r_loss += sr / batch;
    ++window_count;
    if (k % config.log_interval == 0) {
      const double c = static_cast<double>(window_count);
      MetricsRow row{k, window.loss / c, window.interactiveness_loss / c, window.s_c_loss / c,
                     window.s_r_loss / c, lr};
      result.log.push_back(row);
      if (hooks.on_log) hooks.on_log(row);
      window = MetricsRow{};
      window_count = 0;
    }
    if (config.eval_interval > 0 && !val_scenes.empty() && k % config.eval_interval == 0) {
      const double val = dataset_loss(model, val_scenes, config.thresholds).loss;
      if (!result.best_validation_loss || val < *result.best_validation_loss) {
        result.best_validation_loss = val;
        if (hooks.on_best) hooks.on_best(k, val);
      }
    }
  }
  return result;
}

double clip_gradients(std::span<Tensor> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.grad_buffer()) g *= factor;
    }
  }
  return norm;
}

MetricsRow dataset_loss(const Model& model, std::span<const Scene> scenes,
                        ProposalThresholds thresholds) {
  MetricsRow row;
  std::size_t counted = 0;
  const int num_verbs = model.knowledge().num_verbs();
  for (const auto& s : scenes) {
    const SceneBatch batch = prepare_scene(s, num_verbs, thresholds);
    if (batch.pairs.empty()) continue;
    const LossBreakdown loss = scene_loss(model, batch);
    row.loss += loss.total.item();
    row.interactiveness_loss += loss.interactiveness;
    row.s_c_loss += loss.s_c;
    row.s_r_loss += loss.s_r;
    ++counted;
  }
  if (counted > 0) {
    const double c = static_cast<double>(counted);
    row.loss /= c;
    row.interactiveness_loss /= c;
    row.s_c_loss /= c;
    row.s_r_loss /= c;
  }
  return row;
}

}  // namespace hoi
