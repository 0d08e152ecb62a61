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
#include "hoi/knowledge.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "hoi/errors.hpp"

namespace hoi {

namespace {

Tensor embedding_table(std::size_t rows, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> data(rows * kEmbeddingDim);
  for (double& v : data) v = dist(rng);
  return Tensor({rows, kEmbeddingDim}, std::move(data));
}

}  // namespace

KnowledgeBase::KnowledgeBase(int num_verbs, int num_object_classes,
                             std::vector<std::vector<int>> cooccur, std::uint64_t embedding_seed)
    : num_verbs_(num_verbs),
      num_object_classes_(num_object_classes),
      embedding_seed_(embedding_seed),
      cooccur_(std::move(cooccur)) {
  if (num_verbs < 1) throw DataError("knowledge base needs at least one verb");
  if (num_object_classes < 2) {
    throw DataError("knowledge base needs at least one object class besides the human class");
  }
  if (cooccur_.size() > static_cast<std::size_t>(num_object_classes)) {
    throw DataError("co-occurrence table lists more classes than num_object_classes");
  }
  cooccur_.resize(static_cast<std::size_t>(num_object_classes));
  for (auto& verbs : cooccur_) {
    std::sort(verbs.begin(), verbs.end());
    verbs.erase(std::unique(verbs.begin(), verbs.end()), verbs.end());
    for (int v : verbs)
      if (v < 0 || v >= num_verbs) throw DataError("co-occurrence verb id " + std::to_string(v) + " out of range");
  }
  std::mt19937_64 rng(embedding_seed);
  object_embed_ = embedding_table(static_cast<std::size_t>(num_object_classes), rng);
  verb_embed_ = embedding_table(static_cast<std::size_t>(num_verbs), rng);
}

const std::vector<int>& KnowledgeBase::verbs_for_object(int class_id) const {
  if (class_id < 0 || class_id >= num_object_classes_) {
    throw DataError("unknown object class " + std::to_string(class_id));
  }
  const auto& verbs = cooccur_[static_cast<std::size_t>(class_id)];
  if (verbs.empty()) {
    throw DataError("empty co-occurrence for object class " + std::to_string(class_id));
  }
  return verbs;
}

bool KnowledgeBase::cooccurs(int class_id, int verb) const {
  if (class_id < 0 || class_id >= num_object_classes_) return false;
  const auto& verbs = cooccur_[static_cast<std::size_t>(class_id)];
  return std::binary_search(verbs.begin(), verbs.end(), verb);
}

Tensor KnowledgeBase::object_embedding(int class_id) const {
  if (class_id < 0 || class_id >= num_object_classes_) {
    throw DataError("unknown object class " + std::to_string(class_id));
  }
  const auto row = object_embed_.data().subspan(static_cast<std::size_t>(class_id) * kEmbeddingDim,
                                                kEmbeddingDim);
  return Tensor::vector({row.begin(), row.end()});
}

Tensor KnowledgeBase::verb_embedding(int verb) const {
  if (verb < 0 || verb >= num_verbs_) throw DataError("unknown verb " + std::to_string(verb));
  const auto row =
      verb_embed_.data().subspan(static_cast<std::size_t>(verb) * kEmbeddingDim, kEmbeddingDim);
  return Tensor::vector({row.begin(), row.end()});
}

}  // namespace hoi
