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

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hoi {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Dense row-major tensor of doubles with an optional gradient buffer.
///
/// Copies are shallow: a Tensor is a handle, and two handles obtained from the
/// same construction refer to the same storage. Values are fixed once an
/// operation has produced them; only parameters are mutated, and only by the
/// optimizer or checkpoint loading through mutable_data().
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t i) const { return data()[i]; }
  double at(std::size_t i, std::size_t j) const;
  double at(std::size_t i, std::size_t j, std::size_t k) const;

  bool requires_grad() const;
  void set_requires_grad(bool value);

  bool has_grad() const;
  std::span<const double> grad() const;
  // Allocates a zero gradient buffer on first use.
  std::span<double> grad_buffer() const;
  void zero_grad() const;

  // Identity of the underlying storage; equal for handles sharing storage.
  const void* id() const { return impl_.get(); }

  // Deep copy without gradient history.
  Tensor detached_copy() const;

 private:
  struct Impl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

/// Records backward rules for operations executed while it is active.
///
/// Nodes are appended in execution order, so the tape is topologically
/// sorted by construction; backward() replays it in reverse exactly once.
class Tape {
 public:
  struct Node {
    std::string op;
    std::vector<const void*> inputs;
    const void* output = nullptr;
    std::function<void()> backward;
  };

  void record(Node node) { nodes_.push_back(std::move(node)); }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  void clear() { nodes_.clear(); }

  // Seeds d(loss)/d(loss) = 1 and propagates to every recorded ancestor.
  void backward(const Tensor& loss);

 private:
  std::vector<Node> nodes_;
};

/// Makes a tape the recording target on the current thread for its lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Tape active on this thread, or nullptr when operations are not recorded.
Tape* active_tape();

}  // namespace hoi
