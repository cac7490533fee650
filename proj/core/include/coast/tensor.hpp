// Copyright (c) 2026 The coast Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace coast {

#ifdef COAST_FLOAT32
using Scalar = float;
#else
using Scalar = double;
#endif

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

namespace detail {

// One recorded value in the gradient graph. `seq` is the position on the
// owning thread's tape; backward visits nodes in decreasing `seq`.
struct Node {
  Shape shape;
  std::vector<Scalar> value;
  std::vector<Scalar> grad;  // empty until something accumulates into it
  bool requires_grad = false;
  std::uint64_t seq = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(const Node&)> backward;

  std::vector<Scalar>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), Scalar{0});
    return grad;
  }
};

}  // namespace detail

bool grad_enabled();

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Scalar value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<Scalar> values, bool requires_grad = false);
  static Tensor scalar(Scalar value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const Scalar> values() const;
  // Leaf tensors only: parameters are updated in place by optimizers.
  std::span<Scalar> mutable_values();
  Scalar item() const;

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const Scalar> grad() const;
  void zero_grad();

  // Seeds d(self)/d(self) = 1; self must hold exactly one element.
  void backward() const;

  // Same values, no history, no gradient.
  Tensor detach() const;

  // Independent leaf copy with its own buffer.
  Tensor clone(bool requires_grad = false) const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

  // Builds an op result. When recording is off or no input needs a gradient
  // the inputs and backward closure are dropped.
  static Tensor make_result(Shape shape, std::vector<Scalar> value,
                            std::vector<Tensor> inputs,
                            std::function<void(const detail::Node&)> backward);

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;
};

// Reverse execution order of every node reachable from a root that needs a
// gradient. Each node appears once regardless of how many consumers it has.
class Tape {
 public:
  explicit Tape(const Tensor& root);

  std::size_t size() const { return order_.size(); }
  // Runs the recorded backward closures; `seed` has the root's shape.
  void backward(std::span<const Scalar> seed) const;

 private:
  std::vector<std::shared_ptr<detail::Node>> order_;
};

// Integer class map for a batch, laid out [N,H,W].
struct LabelBatch {
  std::size_t batch = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::int32_t> values;

  std::size_t pixels() const { return batch * height * width; }
};

// Keeps freed tensor buffers in the process heap instead of returning them
// to the OS; a training step reallocates the same sizes every iteration.
// No effect outside glibc.
void retain_freed_memory();

}  // namespace coast
