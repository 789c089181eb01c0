// Copyright 2026 The CSRN Authors
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

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "csrn/ops.hpp"
#include "csrn/tensor.hpp"

namespace csrn {

template <typename Scalar>
class Tape;

namespace detail {

template <typename Scalar>
struct Node {
  Tensor<Scalar> value;
  std::optional<Tensor<Scalar>> grad;
  bool requires_grad = false;
  bool leaf = false;
  long id = -1;
  Tape<Scalar>* tape = nullptr;
  /// Reads `grad` of this node and accumulates into its inputs.
  std::function<void(const Tensor<Scalar>&)> backward;

  void accumulate(const Tensor<Scalar>& g) {
    if (!requires_grad) return;
    if (grad) {
      grad->array() += g.array();
    } else {
      grad = g;
    }
  }
  /// Mutable zero-initialized gradient buffer for kernels that accumulate in place.
  Tensor<Scalar>& grad_buffer() {
    if (!grad) grad = Tensor<Scalar>::zeros(value.shape());
    return *grad;
  }
};

}  // namespace detail

/// Handle to a value, optionally recorded on a Tape for reverse-mode differentiation.
/// A Var without a tape is an inference-mode value: operations on it record nothing.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<Scalar> value)
      : node_(std::make_shared<detail::Node<Scalar>>()) {
    node_->value = std::move(value);
  }

  const Tensor<Scalar>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  long id() const { return node_->id; }
  Tape<Scalar>* tape() const { return node_->tape; }
  bool requires_grad() const { return node_->requires_grad; }
  bool valid() const { return static_cast<bool>(node_); }

  const std::shared_ptr<detail::Node<Scalar>>& node() const { return node_; }

 private:
  friend class Tape<Scalar>;
  explicit Var(std::shared_ptr<detail::Node<Scalar>> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node<Scalar>> node_;
};

/// Gradients keyed by tape node id.
template <typename Scalar>
class Gradients {
 public:
  const Tensor<Scalar>& at(const Var<Scalar>& v) const { return grads_.at(v.id()); }
  const Tensor<Scalar>& at(long id) const { return grads_.at(id); }
  bool contains(long id) const { return grads_.count(id) != 0; }
  std::size_t size() const { return grads_.size(); }
  const std::map<long, Tensor<Scalar>>& all() const { return grads_; }

 private:
  friend class Tape<Scalar>;
  std::map<long, Tensor<Scalar>> grads_;
};

/// Ordered record of differentiable operations for one forward pass.
/// Nodes are appended in execution order, so the record is topologically sorted.
template <typename Scalar>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives a gradient (a trainable parameter or a grad-checked input).
  Var<Scalar> parameter(Tensor<Scalar> value) { return make_leaf(std::move(value), true); }

  /// Leaf that is recorded but never differentiated (e.g. the input image).
  Var<Scalar> constant(Tensor<Scalar> value) { return make_leaf(std::move(value), false); }

  /// Appends an operation result. `backward` receives the node's gradient.
  Var<Scalar> record(Tensor<Scalar> value, bool requires_grad,
                     std::function<void(const Tensor<Scalar>&)> backward) {
    auto node = std::make_shared<detail::Node<Scalar>>();
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    node->backward = std::move(backward);
    return push(std::move(node));
  }

  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a scalar loss. Every leaf parameter on the tape gets an entry;
  /// leaves the loss does not reach get zeros.
  Gradients<Scalar> backward(const Var<Scalar>& loss) {
    if (loss.shape() != Shape{}) {
      throw RankError("backward: loss must be a 1x1x1x1 scalar, got " + loss.shape().str());
    }
    if (loss.tape() != this) {
      throw ConsistencyError("backward: loss is not recorded on this tape");
    }
    for (auto& node : nodes_) node->grad.reset();
    auto& root = *nodes_[static_cast<std::size_t>(loss.id())];
    root.grad = Tensor<Scalar>::scalar(Scalar(1));
    for (long i = loss.id(); i >= 0; --i) {
      auto& node = *nodes_[static_cast<std::size_t>(i)];
      if (node.grad && node.backward) node.backward(*node.grad);
    }
    Gradients<Scalar> out;
    for (auto& node : nodes_) {
      if (!node->leaf || !node->requires_grad) continue;
      out.grads_.emplace(node->id, node->grad ? *node->grad : Tensor<Scalar>::zeros(node->value.shape()));
    }
    return out;
  }

 private:
  Var<Scalar> make_leaf(Tensor<Scalar> value, bool requires_grad) {
    auto node = std::make_shared<detail::Node<Scalar>>();
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    node->leaf = true;
    return push(std::move(node));
  }

  Var<Scalar> push(std::shared_ptr<detail::Node<Scalar>> node) {
    node->id = static_cast<long>(nodes_.size());
    node->tape = this;
    nodes_.push_back(node);
    return Var<Scalar>(std::move(node));
  }

  std::vector<std::shared_ptr<detail::Node<Scalar>>> nodes_;
};

// Differentiable operations. Results are recorded when any input is on a tape and
// requires a gradient; otherwise they are plain inference values.

template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& input, const Var<Scalar>& weight,
                   const Var<Scalar>* bias, const ConvSpec& spec);

template <typename Scalar>
Var<Scalar> pixel_shuffle(const Var<Scalar>& input, Index upscale);

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& input);

template <typename Scalar>
Var<Scalar> concat_channels(std::span<const Var<Scalar>> inputs);

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b);

/// Scalar mean of squared differences.
template <typename Scalar>
Var<Scalar> mse(const Var<Scalar>& a, const Var<Scalar>& b);

/// Scalar sum of squared differences.
template <typename Scalar>
Var<Scalar> sse(const Var<Scalar>& a, const Var<Scalar>& b);

/// Scalar Σ a ⊙ weights; projects a tensor output to a scalar for gradient checks.
template <typename Scalar>
Var<Scalar> weighted_sum(const Var<Scalar>& a, const Tensor<Scalar>& weights);

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar factor);

// Finite-difference verification of tape gradients.

struct GradCheckReport {
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  std::size_t checked = 0;
  bool passed = false;
};

/// Builds a scalar from `inputs` on a tape.
using GradCheckFn = std::function<Var<double>(Tape<double>&, std::span<const Var<double>>)>;

/// Relative error per element is |g_tape − g_fd| / max(|g_tape|, |g_fd|, 1e-6).
/// `gradient_scale` multiplies the tape gradient before comparison (negative controls use 2).
GradCheckReport grad_check(const GradCheckFn& fn, const std::vector<TensorD>& inputs,
                           double epsilon = 1e-4, double tolerance = 1e-5,
                           double gradient_scale = 1.0);

}  // namespace csrn
