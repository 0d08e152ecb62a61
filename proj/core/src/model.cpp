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
#include "hoi/model.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "hoi/errors.hpp"
#include "hoi/ops.hpp"

namespace hoi {

void ModelConfig::validate() const {
  if (model_dim == 0 || heads == 0) throw ConfigError("model_dim and heads must be positive");
  if (model_dim % heads != 0) {
    throw ConfigError("model_dim " + std::to_string(model_dim) + " is not divisible by heads " +
                      std::to_string(heads));
  }
  if (appearance_dim == 0) throw ConfigError("appearance_dim must be positive");
  if (hidden_dim == 0) throw ConfigError("hidden_dim must be positive");
}

InstanceSelection select_instances(const Scene& scene, ProposalThresholds thresholds) {
  InstanceSelection sel;
  for (std::size_t i = 0; i < scene.humans.size(); ++i)
    if (scene.humans[i].score >= thresholds.human) sel.humans.push_back(i);
  for (std::size_t i = 0; i < scene.objects.size(); ++i)
    if (scene.objects[i].score >= thresholds.object) sel.objects.push_back(i);
  return sel;
}

std::size_t SceneEncoding::human_row(std::size_t scene_index) const {
  const auto it = std::find(selection.humans.begin(), selection.humans.end(), scene_index);
  if (it == selection.humans.end()) {
    throw DataError("human " + std::to_string(scene_index) + " was not encoded");
  }
  return static_cast<std::size_t>(it - selection.humans.begin());
}

std::size_t SceneEncoding::object_row(std::size_t scene_index) const {
  const auto it = std::find(selection.objects.begin(), selection.objects.end(), scene_index);
  if (it == selection.objects.end()) {
    throw DataError("object " + std::to_string(scene_index) + " was not encoded");
  }
  return static_cast<std::size_t>(it - selection.objects.begin());
}

Model::Model(ModelConfig config, KnowledgeBase kb, std::uint64_t seed)
    : config_(config), kb_(std::move(kb)), seed_(seed) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d = config_.model_dim;
  input = EncoderInputParams::create(store_, "input", config_.appearance_dim, d, rng);
  for (std::size_t l = 0; l < config_.encoder_layers; ++l) {
    encoder.push_back(GpmLayerParams::create(store_, "encoder." + std::to_string(l), d, rng));
  }
  query = QueryBuilderParams::create(store_, "query", d, rng);
  for (std::size_t l = 0; l < config_.decoder_layers; ++l) {
    decoder.push_back(DecoderLayerParams::create(store_, "decoder." + std::to_string(l), d, rng));
  }
  const auto num_verbs = static_cast<std::size_t>(kb_.num_verbs());
  classifiers = VerbClassifierBank::create(store_, "classifiers", num_verbs, d, rng);
  complementary = ComplementaryStreamParams::create(store_, "complementary", config_.appearance_dim,
                                                    config_.hidden_dim, num_verbs, rng);
}

SceneEncoding Model::encode(const Scene& scene, const InstanceSelection& selection,
                            bool keep_trace) const {
  SceneEncoding enc;
  enc.selection = selection;
  const std::size_t n = selection.humans.size() + selection.objects.size();
  if (n == 0) return enc;
  const std::size_t d_app = config_.appearance_dim;
  std::vector<double> appearance;
  std::vector<double> codes;
  std::vector<bool> is_human;
  appearance.reserve(n * d_app);
  codes.reserve(n * 5);
  auto append = [&](const Instance& inst, bool human) {
    if (inst.appearance.size() != d_app) {
      throw DataError("instance " + std::to_string(inst.id) + " has " +
                      std::to_string(inst.appearance.size()) + " appearance values, model expects " +
                      std::to_string(d_app));
    }
    appearance.insert(appearance.end(), inst.appearance.begin(), inst.appearance.end());
    const auto code = position_code(inst.box, scene.image_width, scene.image_height);
    codes.insert(codes.end(), code.begin(), code.end());
    is_human.push_back(human);
    enc.row_ids.push_back(inst.id);
  };
  for (auto i : selection.humans) append(scene.humans.at(i), true);
  for (auto i : selection.objects) append(scene.objects.at(i), false);

  const Tensor x = encoder_input(Tensor({n, d_app}, std::move(appearance)),
                                 Tensor({n, 5}, std::move(codes)), input);
  if (encoder.empty()) {
    enc.features = x;
    return enc;
  }
  EncoderOutput out = encoder_forward(x, is_human, encoder, config_.heads, keep_trace);
  enc.features = out.features;
  enc.m_att = std::move(out.m_att);
  enc.trace = std::move(out.layers);
  return enc;
}

PairScores Model::score_pairs(const Scene& scene, const SceneEncoding& encoding,
                              std::span<const PairProposal> pairs, bool keep_trace) const {
  PairScores out;
  if (pairs.empty()) return out;
  if (!encoding.features.defined()) throw DataError("score_pairs: scene encoding is empty");
  const std::size_t d_app = config_.appearance_dim;
  std::vector<Tensor> bases;
  std::vector<double> human_app;
  std::vector<double> object_app;
  std::vector<Tensor> spatial_maps;
  bases.reserve(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const PairProposal& pair = pairs[p];
    const Instance& h = scene.humans.at(pair.human_index);
    const Instance& o = scene.objects.at(pair.object_index);
    bases.push_back(ops::reshape(build_base_query(pair, o.class_id, kb_, query), {1, kBaseQueryDim}));
    if (o.class_id < 0 || o.class_id >= kb_.num_object_classes()) {
      throw DataError("object " + std::to_string(o.id) + " has unknown class " +
                      std::to_string(o.class_id));
    }
    for (int v : kb_.cooccur()[static_cast<std::size_t>(o.class_id)]) {
      out.row_pair.push_back(p);
      out.row_verb.push_back(v);
    }
    human_app.insert(human_app.end(), h.appearance.begin(), h.appearance.end());
    object_app.insert(object_app.end(), o.appearance.begin(), o.appearance.end());
    spatial_maps.push_back(pair.spatial.grid);
  }
  const std::size_t num_pairs = pairs.size();
  if (human_app.size() != num_pairs * d_app || object_app.size() != num_pairs * d_app) {
    throw DataError("score_pairs: appearance width does not match the model");
  }
  if (!out.row_verb.empty()) {
    const Tensor base = bases.size() == 1 ? bases[0] : ops::concat_rows(bases);
    Tensor clues = augment_queries(base, out.row_pair, out.row_verb, kb_, query,
                                   config_.knowledge_augmentation);
    if (!decoder.empty()) {
      clues = decoder_forward(clues, encoding.features, decoder, config_.heads,
                              keep_trace ? &out.trace : nullptr);
    }
    out.s_r = verb_scores(clues, out.row_verb, classifiers);
  }
  out.s_c = complementary_scores(Tensor({num_pairs, d_app}, std::move(human_app)),
                                 Tensor({num_pairs, d_app}, std::move(object_app)), spatial_maps,
                                 complementary);
  return out;
}

}  // namespace hoi
