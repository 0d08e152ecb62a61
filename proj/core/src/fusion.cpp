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
#include "hoi/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "hoi/errors.hpp"
#include "hoi/model.hpp"
#include "hoi/ops.hpp"

namespace hoi {

ComplementaryStreamParams ComplementaryStreamParams::create(ParameterStore& store,
                                                            const std::string& prefix,
                                                            std::size_t appearance_dim,
                                                            std::size_t hidden_dim,
                                                            std::size_t num_verbs,
                                                            std::mt19937_64& rng) {
  ComplementaryStreamParams p;
  p.spatial = ConvStackParams::create(store, prefix + ".spatial", 2, rng);
  const std::size_t in = 2 * appearance_dim + kMapFeatureDim;
  p.hidden_weight = store.add_uniform(prefix + ".hidden_weight", {in, hidden_dim}, in, rng);
  p.hidden_bias = store.add_zeros(prefix + ".hidden_bias", {hidden_dim});
  p.output_weight =
      store.add_uniform(prefix + ".output_weight", {hidden_dim, num_verbs}, hidden_dim, rng);
  p.output_bias = store.add_zeros(prefix + ".output_bias", {num_verbs});
  return p;
}

Tensor complementary_scores(const Tensor& human_appearance, const Tensor& object_appearance,
                            std::span<const Tensor> spatial_maps,
                            const ComplementaryStreamParams& params) {
  const std::size_t pairs = spatial_maps.size();
  if (human_appearance.rank() != 2 || object_appearance.rank() != 2 ||
      human_appearance.dim(0) != pairs || object_appearance.dim(0) != pairs) {
    throw ShapeError("complementary_scores: " + std::to_string(pairs) + " spatial maps for " +
                     shape_string(human_appearance.shape()) + " and " +
                     shape_string(object_appearance.shape()) + " appearance");
  }
  std::vector<Tensor> spatial_rows;
  spatial_rows.reserve(pairs);
  for (const auto& map : spatial_maps) {
    spatial_rows.push_back(ops::reshape(conv_features(map, params.spatial), {1, kMapFeatureDim}));
  }
  const Tensor spatial = pairs == 1 ? spatial_rows[0] : ops::concat_rows(spatial_rows);
  const Tensor parts[] = {human_appearance, object_appearance, spatial};
  const Tensor hidden =
      ops::relu(ops::linear(ops::concat_last_axis(parts), params.hidden_weight, params.hidden_bias));
  return ops::sigmoid(ops::linear(hidden, params.output_weight, params.output_bias));
}

double fuse(double s_h, double s_o, double s_r, double s_c) {
  for (double v : {s_h, s_o, s_r, s_c}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DataError("fuse: score " + std::to_string(v) + " outside [0, 1]");
    }
  }
  // Exact sum and products carried as value plus error term, then rounded once.
  const double sum = s_r + s_c;
  const double sum_b = sum - s_r;
  const double sum_err = (s_r - (sum - sum_b)) + (s_c - sum_b);
  const double prod = s_h * s_o;
  const double prod_err = std::fma(s_h, s_o, -prod);
  const double head = prod * sum;
  const double head_err = std::fma(prod, sum, -head);
  const double tail = head_err + prod * sum_err + prod_err * sum + prod_err * sum_err;
  return (head + tail) / 2.0;
}

std::vector<std::size_t> suppress(const Tensor& m_att, std::span<const std::size_t> object_rows,
                                  std::span<const std::size_t> human_rows, double threshold) {
  if (object_rows.size() != human_rows.size()) {
    throw ShapeError("suppress: row lists differ in length");
  }
  if (m_att.rank() != 2) throw ShapeError("suppress: interactiveness matrix must be rank 2");
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < object_rows.size(); ++k) {
    if (object_rows[k] >= m_att.dim(0) || human_rows[k] >= m_att.dim(1)) {
      throw ShapeError("suppress: pair (" + std::to_string(object_rows[k]) + ", " +
                       std::to_string(human_rows[k]) + ") outside " + shape_string(m_att.shape()));
    }
    if (m_att.at(object_rows[k], human_rows[k]) >= threshold) kept.push_back(k);
  }
  return kept;
}

bool triplet_order(const ScoredTriplet& a, const ScoredTriplet& b) {
  if (a.score != b.score) return a.score > b.score;
  return std::tie(a.human_id, a.object_id, a.verb) < std::tie(b.human_id, b.object_id, b.verb);
}

DetectResult detect(const Scene& scene, const Model& model, const InferenceConfig& config,
                    const DetectOptions& options) {
  DetectResult result;
  validate_scene(scene, model.config().appearance_dim);
  for (const auto& o : scene.objects) {
    if (o.class_id >= model.knowledge().num_object_classes()) {
      throw DataError("scene " + std::to_string(scene.scene_id) + ": object " + std::to_string(o.id) +
                      " has class " + std::to_string(o.class_id) + " outside the model's " +
                      std::to_string(model.knowledge().num_object_classes()) + " classes");
    }
  }
  const std::vector<PairProposal> proposals = pair_proposals(scene, config.thresholds);
  result.proposals = proposals.size();
  if (proposals.empty()) return result;

  const InstanceSelection selection = select_instances(scene, config.thresholds);
  const SceneEncoding encoding = model.encode(scene, selection);

  std::vector<PairProposal> kept;
  if (encoding.m_att.empty()) {
    kept = proposals;
  } else {
    std::vector<std::size_t> object_rows;
    std::vector<std::size_t> human_rows;
    for (const auto& p : proposals) {
      object_rows.push_back(encoding.object_row(p.object_index));
      human_rows.push_back(encoding.human_row(p.human_index));
    }
    for (auto k : suppress(encoding.m_att.back(), object_rows, human_rows,
                           config.suppression_threshold)) {
      kept.push_back(proposals[k]);
    }
  }
  result.retained = kept.size();
  if (kept.empty()) return result;

  const bool dump = options.dump_pair.has_value();
  const PairScores scores = model.score_pairs(scene, encoding, kept, dump);
  const std::size_t num_verbs = static_cast<std::size_t>(model.knowledge().num_verbs());
  for (std::size_t r = 0; r < scores.row_verb.size(); ++r) {
    const PairProposal& pair = kept[scores.row_pair[r]];
    const Instance& h = scene.humans[pair.human_index];
    const Instance& o = scene.objects[pair.object_index];
    ScoredTriplet t;
    t.scene_id = scene.scene_id;
    t.human_id = h.id;
    t.human_box = h.box;
    t.human_score = h.score;
    t.object_id = o.id;
    t.object_box = o.box;
    t.object_class = o.class_id;
    t.object_score = o.score;
    t.verb = scores.row_verb[r];
    t.s_r = scores.s_r.at(r);
    t.s_c = scores.s_c.data()[scores.row_pair[r] * num_verbs + static_cast<std::size_t>(t.verb)];
    t.score = fuse(t.human_score, t.object_score, t.s_r, t.s_c);
    result.triplets.push_back(t);

    if (dump && options.dump_pair->first == h.id && options.dump_pair->second == o.id) {
      for (std::size_t l = 0; l < scores.trace.layers.size(); ++l) {
        const auto& heads = scores.trace.layers[l].weights;
        for (std::size_t hd = 0; hd < heads.size(); ++hd) {
          const std::size_t keys = heads[hd].dim(1);
          for (std::size_t k = 0; k < keys; ++k) {
            result.attention_dump.push_back(
                {t.verb, l, hd, encoding.row_ids[k], heads[hd].at(r, k)});
          }
        }
      }
    }
  }
  std::sort(result.triplets.begin(), result.triplets.end(), triplet_order);
  return result;
}

}  // namespace hoi
