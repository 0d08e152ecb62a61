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
#include "hoi/params.hpp"

#include "hoi/errors.hpp"
#include "hoi/ops.hpp"

namespace hoi {

Tensor ParameterStore::add(const std::string& name, Tensor tensor) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  tensor.set_requires_grad(true);
  entries_.emplace_back(name, tensor);
  return tensor;
}

Tensor ParameterStore::add_uniform(const std::string& name, Shape shape, std::size_t fan_in,
                                   std::mt19937_64& rng) {
  return add(name, ops::uniform_init(std::move(shape), fan_in, rng));
}

Tensor ParameterStore::add_zeros(const std::string& name, Shape shape) {
  return add(name, Tensor::zeros(std::move(shape)));
}

bool ParameterStore::contains(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return true;
  return false;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return t;
  throw DataError("no parameter named '" + name + "'");
}

std::vector<Tensor> ParameterStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& [n, t] : entries_) out.push_back(t);
  return out;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [n, t] : entries_) t.zero_grad();
}

}  // namespace hoi
