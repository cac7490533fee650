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

#include "coast/tensor.hpp"

#include <algorithm>
#include <climits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "coast/errors.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace coast {
namespace {

thread_local bool t_grad_enabled = true;
thread_local std::uint64_t t_next_seq = 1;

std::shared_ptr<detail::Node> new_node(Shape shape, std::vector<Scalar> value) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->seq = t_next_seq++;
  return node;
}

}  // namespace

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), Scalar{0}, requires_grad);
}

Tensor Tensor::full(Shape shape, Scalar value, bool requires_grad) {
  std::vector<Scalar> v(coast::numel(shape), value);
  return from_values(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<Scalar> values, bool requires_grad) {
  if (coast::numel(shape) != values.size()) {
    throw InvalidShape("tensor shape " + to_string(shape) + " does not match buffer of " +
                       std::to_string(values.size()) + " values");
  }
  auto node = new_node(std::move(shape), std::move(values));
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(Scalar value) { return from_values({}, {value}); }

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= node_->shape.size()) {
    throw InvalidShape("axis " + std::to_string(axis) + " out of range for " + to_string(shape()));
  }
  return node_->shape[axis];
}

std::size_t Tensor::numel() const { return node_->value.size(); }

std::span<const Scalar> Tensor::values() const { return node_->value; }

std::span<Scalar> Tensor::mutable_values() {
  if (!is_leaf()) throw InvalidArgument("only leaf tensors can be modified in place");
  return node_->value;
}

Scalar Tensor::item() const {
  if (numel() != 1) throw InvalidShape("item() on tensor of shape " + to_string(shape()));
  return node_->value.front();
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::is_leaf() const { return node_ && !node_->backward; }

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const Scalar> Tensor::grad() const { return node_->grad; }

void Tensor::zero_grad() {
  if (node_) std::fill(node_->grad.begin(), node_->grad.end(), Scalar{0});
}

void Tensor::backward() const {
  if (numel() != 1) {
    throw InvalidShape("backward() needs a single-element output, got " + to_string(shape()));
  }
  const Scalar one{1};
  Tape(*this).backward(std::span<const Scalar>(&one, 1));
}

Tensor Tensor::detach() const {
  auto node = new_node(node_->shape, node_->value);
  return Tensor(std::move(node));
}

Tensor Tensor::clone(bool requires_grad) const {
  return from_values(node_->shape, node_->value, requires_grad);
}

Tensor Tensor::make_result(Shape shape, std::vector<Scalar> value, std::vector<Tensor> inputs,
                           std::function<void(const detail::Node&)> backward) {
  auto node = new_node(std::move(shape), std::move(value));
  if (t_grad_enabled &&
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); })) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node_);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

Tape::Tape(const Tensor& root) {
  if (!root.requires_grad()) return;
  std::unordered_set<const detail::Node*> seen;
  std::vector<std::shared_ptr<detail::Node>> stack{root.node()};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto node = std::move(stack.back());
    stack.pop_back();
    for (const auto& in : node->inputs) {
      if (in->requires_grad && seen.insert(in.get()).second) stack.push_back(in);
    }
    order_.push_back(std::move(node));
  }
  std::sort(order_.begin(), order_.end(),
            [](const auto& a, const auto& b) { return a->seq > b->seq; });
}

void Tape::backward(std::span<const Scalar> seed) const {
  if (order_.empty()) return;
  auto& root = *order_.front();
  if (seed.size() != root.value.size()) throw InvalidShape("backward seed does not match root shape");
  auto& g = root.grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];
  for (const auto& node : order_) {
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

void retain_freed_memory() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, INT_MAX);
  mallopt(M_TOP_PAD, 64 << 20);
#endif
}

}  // namespace coast
