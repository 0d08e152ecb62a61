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

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hoi/tensor.hpp"

namespace hoi {

// Named trainable tensors in registration order. Handles returned by add()
// share storage with the store, so updates through either are visible to both.
class ParameterStore {
 public:
  Tensor add(const std::string& name, Tensor tensor);
  // Uniform fan-in initialization drawn from rng.
  Tensor add_uniform(const std::string& name, Shape shape, std::size_t fan_in,
                     std::mt19937_64& rng);
  Tensor add_zeros(const std::string& name, Shape shape);

  bool contains(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;

  std::size_t parameter_count() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

}  // namespace hoi
