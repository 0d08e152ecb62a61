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
#include "hoi/optim.hpp"

#include "hoi/errors.hpp"

namespace hoi {

SgdOptimizer::SgdOptimizer(double learning_rate, double momentum, double weight_decay)
    : learning_rate_(learning_rate), momentum_(momentum), weight_decay_(weight_decay) {
  if (learning_rate < 0.0) throw ConfigError("learning rate must be nonnegative");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be nonnegative");
}

void SgdOptimizer::set_learning_rate(double lr) {
  if (lr < 0.0) throw ConfigError("learning rate must be nonnegative");
  learning_rate_ = lr;
}

void SgdOptimizer::step(std::span<Tensor> params) {
  const bool use_velocity = momentum_ > 0.0;
  if (use_velocity && velocity_.empty()) {
    velocity_.reserve(params.size());
    for (const auto& p : params) velocity_.emplace_back(p.numel(), 0.0);
  }
  if (use_velocity && velocity_.size() != params.size()) {
    throw ShapeError("optimizer velocity tracks " + std::to_string(velocity_.size()) +
                     " parameters, step got " + std::to_string(params.size()));
  }
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    auto values = p.mutable_data();
    const auto grad = p.grad();
    const bool has_grad = !grad.empty();
    for (std::size_t i = 0; i < values.size(); ++i) {
      double update = (has_grad ? grad[i] : 0.0) + weight_decay_ * values[i];
      if (use_velocity) {
        double& v = velocity_[pi][i];
        v = momentum_ * v + update;
        update = v;
      }
      values[i] -= learning_rate_ * update;
    }
  }
}

void SgdOptimizer::set_velocity(std::vector<std::vector<double>> velocity) {
  velocity_ = std::move(velocity);
}

}  // namespace hoi
