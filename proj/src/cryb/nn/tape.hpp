// Copyright 2026 The cryb Authors.
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
#include <string>
#include <utility>
#include <vector>

#include "cryb/nn/tensor.hpp"

namespace cryb::nn {

/// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
};

/// Reverse-mode autodiff record. Each op pushes its output together with a
/// closure that reads the output gradient and accumulates into its inputs.
/// A non-recording tape only evaluates (no closures are kept), which is what
/// inference uses.
template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, Var self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return record_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Borrowed value without gradient. `value` must outlive the tape.
  Var constant(const Tensor<T>& value) {
    Node n;
    n.ref = &value;
    return add(std::move(n));
  }

  Var input(Tensor<T> value, bool requires_grad = false) {
    Node n;
    n.owned = std::move(value);
    n.needs_grad = requires_grad && record_;
    return add(std::move(n));
  }

  /// Borrowed parameter; backward() accumulates into p.grad.
  Var param(Parameter<T>& p) {
    Node n;
    n.ref = &p.value;
    n.param = record_ ? &p : nullptr;
    n.needs_grad = record_;
    return add(std::move(n));
  }

  const Tensor<T>& value(Var v) const {
    const Node& n = node(v);
    return n.ref ? *n.ref : n.owned;
  }

  bool needs_grad(Var v) const { return node(v).needs_grad; }

  /// Gradient buffer of `v`, allocated as zeros on first access.
  Tensor<T>& grad(Var v) {
    Node& n = node(v);
    if (n.grad.empty()) n.grad = Tensor<T>(value(v).shape());
    return n.grad;
  }

  bool has_grad(Var v) const { return !node(v).grad.empty(); }

  /// Records an op output. `backward` is dropped unless the tape records and
  /// some input needs a gradient.
  Var push(Tensor<T> value, bool inputs_need_grad, Backward backward) {
    Node n;
    n.owned = std::move(value);
    n.needs_grad = record_ && inputs_need_grad;
    if (n.needs_grad) n.backward = std::move(backward);
    return add(std::move(n));
  }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every recorded input.
  void backward(Var loss) {
    if (!record_ || nodes_.empty() || loss.id < 0 || loss.id >= static_cast<int>(nodes_.size()))
      fail(Errc::NoForwardRecorded, "backward() needs a recorded forward pass");
    require(value(loss).numel() == 1, Errc::ShapeMismatch, "loss must be a scalar");
    grad(loss).fill(T(1));
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.grad.empty()) continue;
      if (n.backward) n.backward(*this, Var{i});
      if (n.param) {
        auto& pg = n.param->grad.storage();
        const auto& g = n.grad.storage();
        for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += g[k];
      }
    }
  }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* ref = nullptr;
    Tensor<T> grad;
    Parameter<T>* param = nullptr;
    bool needs_grad = false;
    Backward backward;
  };

  Var add(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Node& node(Var v) {
    require(v.id >= 0 && v.id < static_cast<int>(nodes_.size()), Errc::InvalidArgument, "stale tape handle");
    return nodes_[static_cast<std::size_t>(v.id)];
  }
  const Node& node(Var v) const {
    require(v.id >= 0 && v.id < static_cast<int>(nodes_.size()), Errc::InvalidArgument, "stale tape handle");
    return nodes_[static_cast<std::size_t>(v.id)];
  }

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace cryb::nn
