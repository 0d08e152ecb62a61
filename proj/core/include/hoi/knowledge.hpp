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
#include <vector>

#include "hoi/tensor.hpp"

namespace hoi {

inline constexpr std::size_t kEmbeddingDim = 32;
inline constexpr std::uint64_t kDefaultEmbeddingSeed = 0x6b62616e;

/// Verb and object vocabularies, verb-object co-occurrence sets, and fixed
/// word-embedding tables.
///
/// Class 0 is reserved for humans; object classes are 1..num_object_classes-1.
/// The embedding tables are drawn from a seeded normal distribution and never
/// trained.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  // cooccur[c] lists the verbs seen with object class c; it is sorted and
  // deduplicated on construction.
  KnowledgeBase(int num_verbs, int num_object_classes, std::vector<std::vector<int>> cooccur,
                std::uint64_t embedding_seed = kDefaultEmbeddingSeed);

  int num_verbs() const { return num_verbs_; }
  int num_object_classes() const { return num_object_classes_; }
  std::uint64_t embedding_seed() const { return embedding_seed_; }
  const std::vector<std::vector<int>>& cooccur() const { return cooccur_; }

  // Verb_o in ascending verb-id order. Throws DataError for unknown classes
  // and for classes with an empty co-occurrence set.
  const std::vector<int>& verbs_for_object(int class_id) const;
  bool cooccurs(int class_id, int verb) const;

  const Tensor& object_embed() const { return object_embed_; }
  const Tensor& verb_embed() const { return verb_embed_; }

  // Row of the embedding table as a rank-1 tensor.
  Tensor object_embedding(int class_id) const;
  Tensor verb_embedding(int verb) const;

 private:
  int num_verbs_ = 0;
  int num_object_classes_ = 0;
  std::uint64_t embedding_seed_ = kDefaultEmbeddingSeed;
  std::vector<std::vector<int>> cooccur_;
  Tensor object_embed_;
  Tensor verb_embed_;
};

}  // namespace hoi
