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

#include <span>
#include <vector>

#include "hoi/tensor.hpp"

namespace hoi {

/// SGD with heavy-ball momentum and L2 weight decay.
///
///   v <- momentum * v + grad + weight_decay * param
///   param <- param - learning_rate * v
///
/// Velocity buffers are kept only when momentum > 0; they are created lazily
/// on the first step and indexed like the parameter list.
class SgdOptimizer {
 public:
  SgdOptimizer(double learning_rate, double momentum, double weight_decay);

  double learning_rate() const { return learning_rate_; }
  void set_learning_rate(double lr);
  double momentum() const { return momentum_; }
  double weight_decay() const { return weight_decay_; }

  // Parameters without a gradient buffer are treated as having zero gradient.
  void step(std::span<Tensor> params);

  const std::vector<std::vector<double>>& velocity() const { return velocity_; }
  void set_velocity(std::vector<std::vector<double>> velocity);

 private:
  double learning_rate_;
  double momentum_;
  double weight_decay_;
  std::vector<std::vector<double>> velocity_;
};

}  // namespace hoi
