// Copyright 2026 The dualres Authors. All Rights Reserved.
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

// Dense tensors and a reverse-mode differentiation tape.
//
// A Tensor is a shared handle to an immutable buffer (parameters are the one
// exception: the optimizer writes them in place between steps). Operators in
// ops.h take an optional Tape*; when a tape is supplied and any input
// requires a gradient, the operator appends a backward rule to it. Passing a
// null tape runs inference without recording.
//
// Scalar type is a template parameter: float for training, double for the
// verification paths (gradient and round-trip checks).

#ifndef DUALRES_TENSOR_H_
#define DUALRES_TENSOR_H_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dualres/errors.h"

namespace dualres {

using Shape = std::vector<int>;

inline std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string ShapeString(const Shape& shape);

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> data;
  bool requires_grad = false;
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false)
      : node_(std::make_shared<TensorNode<T>>()) {
    if (NumElements(shape) != data.size()) {
      throw ArgumentError("tensor data length " + std::to_string(data.size()) +
                          " does not match shape " + ShapeString(shape));
    }
    node_->shape = std::move(shape);
    node_->data = std::move(data);
    node_->requires_grad = requires_grad;
  }

  static Tensor Zeros(Shape shape, bool requires_grad = false) {
    std::vector<T> data(NumElements(shape), T(0));
    return Tensor(std::move(shape), std::move(data), requires_grad);
  }
  static Tensor Full(Shape shape, T value, bool requires_grad = false) {
    std::vector<T> data(NumElements(shape), value);
    return Tensor(std::move(shape), std::move(data), requires_grad);
  }
  // Rank-0 tensor holding one value.
  static Tensor Scalar(T value, bool requires_grad = false) {
    return Tensor(Shape{}, std::vector<T>{value}, requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape.at(static_cast<std::size_t>(i)); }
  std::size_t numel() const { return node_->data.size(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  std::span<const T> data() const { return node_->data; }
  // Writable view. Reserved for parameter updates and test setup; never
  // mutate a tensor that a live tape still references.
  std::span<T> mutable_data() { return node_->data; }
  T item() const {
    if (numel() != 1) {
      throw ArgumentError("item() on tensor of shape " + ShapeString(shape()));
    }
    return node_->data[0];
  }

  const TensorNode<T>* node() const { return node_.get(); }
  bool SameNode(const Tensor& other) const { return node_ == other.node_; }

  // Deep copy with a fresh identity.
  Tensor Clone(bool requires_grad) const {
    return Tensor(shape(), node_->data, requires_grad);
  }

 private:
  std::shared_ptr<TensorNode<T>> node_;
};

// Gradient buffers keyed by tensor identity. A tensor with no entry is
// disconnected from the loss and its gradient is zero.
template <typename T>
class Gradients {
 public:
  bool Has(const Tensor<T>& t) const { return grads_.count(t.node()) != 0; }

  std::vector<T> Get(const Tensor<T>& t) const {
    auto it = grads_.find(t.node());
    if (it == grads_.end()) return std::vector<T>(t.numel(), T(0));
    return it->second;
  }

  std::span<const T> View(const Tensor<T>& t) const {
    auto it = grads_.find(t.node());
    if (it == grads_.end()) return {};
    return it->second;
  }

  // Removes and returns the buffer for node (empty if absent).
  std::vector<T> Release(const TensorNode<T>* node) {
    auto it = grads_.find(node);
    if (it == grads_.end()) return {};
    std::vector<T> out = std::move(it->second);
    grads_.erase(it);
    return out;
  }

  std::vector<T>& Buffer(const TensorNode<T>* node) {
    auto it = grads_.find(node);
    if (it == grads_.end()) {
      it = grads_.emplace(node, std::vector<T>(node->data.size(), T(0))).first;
    }
    return it->second;
  }

 private:
  std::unordered_map<const TensorNode<T>*, std::vector<T>> grads_;
};

// Ordered record of differentiable operations. Each entry owns its inputs and
// output, so activations stay alive until Backward releases them.
template <typename T>
class Tape {
 public:
  // grad_out is the gradient flowing into the op's output; input_grads[i] is
  // the accumulator for input i, or null when input i needs no gradient.
  using BackwardFn =
      std::function<void(std::span<const T> grad_out,
                         std::span<T* const> input_grads)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool consumed() const { return consumed_; }
  std::size_t size() const { return entries_.size(); }

  void Record(std::vector<Tensor<T>> inputs, const Tensor<T>& output,
              BackwardFn backward) {
    if (consumed_) {
      throw UsageError("tape already consumed by a backward pass; record a new one");
    }
    entries_.push_back({std::move(inputs), output, std::move(backward)});
  }

  // Reverse-mode sweep from a scalar loss. Accumulation runs in reverse
  // recording order, so results are bit-reproducible. The tape is consumed.
  Gradients<T> Backward(const Tensor<T>& loss) {
    if (consumed_) {
      throw UsageError("backward called twice on one tape");
    }
    if (!loss.defined() || loss.numel() != 1) {
      throw UsageError("backward needs a scalar loss, got shape " +
                       (loss.defined() ? ShapeString(loss.shape())
                                       : std::string("<undefined>")));
    }
    consumed_ = true;
    Gradients<T> grads;
    if (!loss.requires_grad()) {
      entries_.clear();
      return grads;
    }
    bool found = false;
    for (const auto& e : entries_) {
      if (e.output.SameNode(loss)) {
        found = true;
        break;
      }
    }
    if (!found) {
      entries_.clear();
      throw UsageError("loss was not recorded on this tape");
    }
    grads.Buffer(loss.node())[0] = T(1);
    std::vector<T*> input_grads;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
      if (!grads.Has(it->output)) continue;
      input_grads.assign(it->inputs.size(), nullptr);
      for (std::size_t i = 0; i < it->inputs.size(); ++i) {
        const Tensor<T>& in = it->inputs[i];
        if (in.defined() && in.requires_grad()) {
          input_grads[i] = grads.Buffer(in.node()).data();
        }
      }
      // Intermediate gradients are dropped once propagated; only leaves
      // keep their buffers.
      const std::vector<T> grad_out = grads.Release(it->output.node());
      it->backward(grad_out, input_grads);
      *it = Entry{};
    }
    entries_.clear();
    return grads;
  }

 private:
  struct Entry {
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
  bool consumed_ = false;
};

// Debug dump: 4-byte magic "DRTN", uint32 element size (4 or 8), uint32 rank,
// rank x int64 dims, then the raw little-endian elements.
template <typename T>
void WriteTensorDump(const Tensor<T>& t, const std::filesystem::path& path);
template <typename T>
Tensor<T> ReadTensorDump(const std::filesystem::path& path);

}  // namespace dualres

#endif  // DUALRES_TENSOR_H_
