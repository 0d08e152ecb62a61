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
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hoi/knowledge.hpp"
#include "hoi/scene.hpp"

namespace hoi {

struct SynthConfig {
  std::size_t train_scenes = 20;
  std::size_t val_scenes = 0;
  std::size_t test_scenes = 0;
  int min_humans = 1;
  int max_humans = 2;
  int min_objects = 1;
  int max_objects = 3;
  // Includes the reserved human class 0.
  int num_object_classes = 6;
  int num_verbs = 5;
  // Probability that a verb co-occurs with a given object class.
  double cooccur_density = 0.5;
  // Probability that an object interacts with some human.
  double interaction_prob = 0.6;
  // Probability of a second verb on an interacting pair.
  double second_verb_prob = 0.2;
  std::size_t appearance_dim = 16;
  // Appearance noise has standard deviation 1/snr; 0 disables noise.
  double snr = 2.0;
  int image_width = 640;
  int image_height = 480;
  std::uint64_t seed = 1;

  void validate() const;
};

// Named signal-to-noise presets: "low", "medium", "high".
double snr_preset(const std::string& name);

/// Fixed latent structure shared by every scene of one synthetic dataset:
/// the knowledge base, appearance prototypes per class, verb-conditioned
/// appearance offsets, and a preferred object placement per verb.
struct SyntheticWorld {
  KnowledgeBase kb;
  std::vector<std::vector<double>> class_prototypes;  // [O][d_app]
  std::vector<std::vector<double>> human_offsets;     // [V][d_app]
  std::vector<std::vector<double>> object_offsets;    // [V][d_app]
  std::vector<std::array<double, 2>> layouts;         // [V], object center offset in human-box units
};

SyntheticWorld make_synthetic_world(const SynthConfig& config);

/// Samples one scene. Interacting objects are placed at their verb's layout
/// relative to the chosen human, both participants carry that verb's
/// appearance offset, and the human's wrist reaches toward the object.
Scene generate_synthetic_scene(std::mt19937_64& rng, const SynthConfig& config,
                               const SyntheticWorld& world, int scene_id);

struct SyntheticDataset {
  SyntheticWorld world;
  std::vector<Scene> train;
  std::vector<Scene> val;
  std::vector<Scene> test;
};

// Scene ids run consecutively over train, val and test.
SyntheticDataset generate_dataset(const SynthConfig& config);

}  // namespace hoi
