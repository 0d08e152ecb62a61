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
#include "hoi/synth.hpp"

#include <algorithm>
#include <cmath>

#include "hoi/errors.hpp"

namespace hoi {

namespace {

// Upright skeleton in box-normalized coordinates.
constexpr std::array<std::array<double, 2>, kNumKeypoints> kTemplate{{
    {0.50, 0.08}, {0.45, 0.06}, {0.55, 0.06}, {0.40, 0.08}, {0.60, 0.08}, {0.35, 0.22},
    {0.65, 0.22}, {0.28, 0.38}, {0.72, 0.38}, {0.25, 0.52}, {0.75, 0.52}, {0.40, 0.55},
    {0.60, 0.55}, {0.40, 0.75}, {0.60, 0.75}, {0.40, 0.95}, {0.60, 0.95},
}};
constexpr int kRightShoulder = 6;
constexpr int kRightElbow = 8;
constexpr int kRightWrist = 10;

std::vector<double> normal_vector(std::mt19937_64& rng, std::size_t n, double stddev) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = stddev * dist(rng);
  return v;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Shifts a box of fixed size so it lies inside the image.
BoundingBox fit_inside(double cx, double cy, double w, double h, int image_w, int image_h) {
  const double x1 = std::clamp(cx - w / 2.0, 0.0, image_w - w);
  const double y1 = std::clamp(cy - h / 2.0, 0.0, image_h - h);
  return {x1, y1, x1 + w, y1 + h};
}

}  // namespace

void SynthConfig::validate() const {
  if (min_humans < 1 || max_humans < min_humans) throw ConfigError("invalid humans-per-scene range");
  if (min_objects < 1 || max_objects < min_objects) throw ConfigError("invalid objects-per-scene range");
  if (num_object_classes < 2) throw ConfigError("num_object_classes must be at least 2");
  if (num_verbs < 1) throw ConfigError("num_verbs must be at least 1");
  if (cooccur_density <= 0.0 || cooccur_density > 1.0) throw ConfigError("cooccur_density must lie in (0, 1]");
  if (interaction_prob < 0.0 || interaction_prob > 1.0) throw ConfigError("interaction_prob must lie in [0, 1]");
  if (second_verb_prob < 0.0 || second_verb_prob > 1.0) throw ConfigError("second_verb_prob must lie in [0, 1]");
  if (appearance_dim == 0) throw ConfigError("appearance_dim must be positive");
  if (snr < 0.0) throw ConfigError("snr must be nonnegative");
  if (image_width < 320 || image_height < 320) throw ConfigError("image must be at least 320x320");
}

double snr_preset(const std::string& name) {
  if (name == "low") return 0.75;
  if (name == "medium") return 2.0;
  if (name == "high") return 8.0;
  throw ConfigError("unknown snr preset '" + name + "'");
}

SyntheticWorld make_synthetic_world(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::bernoulli_distribution include(config.cooccur_density);
  std::vector<std::vector<int>> cooccur(static_cast<std::size_t>(config.num_object_classes));
  for (int c = 1; c < config.num_object_classes; ++c) {
    auto& verbs = cooccur[static_cast<std::size_t>(c)];
    for (int v = 0; v < config.num_verbs; ++v)
      if (include(rng)) verbs.push_back(v);
    if (verbs.empty()) verbs.push_back(uniform_int(rng, 0, config.num_verbs - 1));
  }
  SyntheticWorld world;
  world.kb = KnowledgeBase(config.num_verbs, config.num_object_classes, std::move(cooccur));
  for (int c = 0; c < config.num_object_classes; ++c) {
    world.class_prototypes.push_back(normal_vector(rng, config.appearance_dim, 1.0));
  }
  for (int v = 0; v < config.num_verbs; ++v) {
    world.human_offsets.push_back(normal_vector(rng, config.appearance_dim, 1.0));
    world.object_offsets.push_back(normal_vector(rng, config.appearance_dim, 1.0));
    world.layouts.push_back({uniform(rng, -1.0, 1.0), uniform(rng, -0.6, 0.6)});
  }
  return world;
}

Scene generate_synthetic_scene(std::mt19937_64& rng, const SynthConfig& config,
                               const SyntheticWorld& world, int scene_id) {
  const int W = config.image_width, H = config.image_height;
  const double noise = config.snr > 0.0 ? 1.0 / config.snr : 0.0;
  Scene scene;
  scene.scene_id = scene_id;
  scene.image_width = W;
  scene.image_height = H;

  const int num_humans = uniform_int(rng, config.min_humans, config.max_humans);
  const int num_objects = uniform_int(rng, config.min_objects, config.max_objects);
  int next_id = 0;
  for (int i = 0; i < num_humans; ++i) {
    Instance h;
    h.id = next_id++;
    h.is_human = true;
    h.class_id = kHumanClass;
    const double w = uniform(rng, 60.0, 120.0), hh = uniform(rng, 150.0, 260.0);
    const double x1 = uniform(rng, 0.0, W - w), y1 = uniform(rng, 0.0, H - hh);
    h.box = {x1, y1, x1 + w, y1 + hh};
    h.score = uniform(rng, 0.5, 1.0);
    scene.humans.push_back(std::move(h));
  }

  // Verbs each human performs, and the object center its wrist reaches for.
  std::vector<std::vector<int>> human_verbs(static_cast<std::size_t>(num_humans));
  std::vector<std::optional<std::array<double, 2>>> reach(static_cast<std::size_t>(num_humans));
  std::bernoulli_distribution interacts(config.interaction_prob);
  std::bernoulli_distribution second(config.second_verb_prob);
  for (int j = 0; j < num_objects; ++j) {
    Instance o;
    o.id = next_id++;
    o.class_id = uniform_int(rng, 1, config.num_object_classes - 1);
    o.score = uniform(rng, 0.5, 1.0);
    const double w = uniform(rng, 30.0, 90.0), hh = uniform(rng, 30.0, 90.0);
    std::vector<int> verbs;
    if (interacts(rng)) {
      const auto hi = static_cast<std::size_t>(uniform_int(rng, 0, num_humans - 1));
      const auto& options = world.kb.verbs_for_object(o.class_id);
      const int first = options[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(options.size()) - 1))];
      verbs.push_back(first);
      if (options.size() > 1 && second(rng)) {
        int extra = first;
        while (extra == first) {
          extra = options[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(options.size()) - 1))];
        }
        verbs.push_back(extra);
      }
      const BoundingBox& hb = scene.humans[hi].box;
      const auto& layout = world.layouts[static_cast<std::size_t>(first)];
      const double cx = (hb.x1 + hb.x2) / 2.0 + layout[0] * hb.width() + uniform(rng, -0.1, 0.1) * w;
      const double cy = (hb.y1 + hb.y2) / 2.0 + layout[1] * hb.height() + uniform(rng, -0.1, 0.1) * hh;
      o.box = fit_inside(cx, cy, w, hh, W, H);
      for (int v : verbs) {
        scene.gt_triplets.push_back({hb, o.box, o.class_id, v});
        human_verbs[hi].push_back(v);
      }
      reach[hi] = std::array<double, 2>{(o.box.x1 + o.box.x2) / 2.0, (o.box.y1 + o.box.y2) / 2.0};
    } else {
      o.box = fit_inside(uniform(rng, 0.0, W), uniform(rng, 0.0, H), w, hh, W, H);
    }
    o.appearance = world.class_prototypes[static_cast<std::size_t>(o.class_id)];
    for (int v : verbs) {
      const auto& off = world.object_offsets[static_cast<std::size_t>(v)];
      for (std::size_t k = 0; k < off.size(); ++k) o.appearance[k] += off[k];
    }
    const auto n = normal_vector(rng, config.appearance_dim, noise);
    for (std::size_t k = 0; k < n.size(); ++k) o.appearance[k] += n[k];
    scene.objects.push_back(std::move(o));
  }

  for (std::size_t i = 0; i < scene.humans.size(); ++i) {
    Instance& h = scene.humans[i];
    h.appearance = world.class_prototypes[kHumanClass];
    for (int v : human_verbs[i]) {
      const auto& off = world.human_offsets[static_cast<std::size_t>(v)];
      for (std::size_t k = 0; k < off.size(); ++k) h.appearance[k] += off[k];
    }
    const auto n = normal_vector(rng, config.appearance_dim, noise);
    for (std::size_t k = 0; k < n.size(); ++k) h.appearance[k] += n[k];

    Keypoints kp{};
    for (std::size_t j = 0; j < kNumKeypoints; ++j) {
      kp[j].x = h.box.x1 + (kTemplate[j][0] + uniform(rng, -0.02, 0.02)) * h.box.width();
      kp[j].y = h.box.y1 + (kTemplate[j][1] + uniform(rng, -0.02, 0.02)) * h.box.height();
    }
    if (reach[i]) {
      const auto& target = *reach[i];
      const Keypoint shoulder = kp[kRightShoulder];
      kp[kRightWrist] = {shoulder.x + 0.7 * (target[0] - shoulder.x),
                         shoulder.y + 0.7 * (target[1] - shoulder.y)};
      kp[kRightElbow] = {shoulder.x + 0.35 * (target[0] - shoulder.x),
                         shoulder.y + 0.35 * (target[1] - shoulder.y)};
      for (int j : {kRightElbow, kRightWrist}) {
        auto& k = kp[static_cast<std::size_t>(j)];
        k = {std::clamp(k.x, h.box.x1, h.box.x2), std::clamp(k.y, h.box.y1, h.box.y2)};
      }
    }
    h.keypoints = kp;
  }
  return scene;
}

SyntheticDataset generate_dataset(const SynthConfig& config) {
  SyntheticDataset data;
  data.world = make_synthetic_world(config);
  std::mt19937_64 rng(config.seed);
  int id = 0;
  for (std::size_t i = 0; i < config.train_scenes; ++i)
    data.train.push_back(generate_synthetic_scene(rng, config, data.world, id++));
  for (std::size_t i = 0; i < config.val_scenes; ++i)
    data.val.push_back(generate_synthetic_scene(rng, config, data.world, id++));
  for (std::size_t i = 0; i < config.test_scenes; ++i)
    data.test.push_back(generate_synthetic_scene(rng, config, data.world, id++));
  return data;
}

}  // namespace hoi
