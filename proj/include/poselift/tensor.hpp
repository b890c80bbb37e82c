// Copyright 2026 The poselift Authors.
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
#include <deque>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "poselift/pose_core.hpp"

namespace poselift::nn {

// Row-major dense tensor. Operations treat it as a matrix whose column count
// is the last dimension and whose row count is the product of the others.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, T fill = T(0))
      : shape(std::move(s)), data(count(shape), fill) {}
  Tensor(std::vector<int> s, std::vector<T> values)
      : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != count(shape)) throw Error("tensor data length does not match shape");
  }

  static std::size_t count(const std::vector<int>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  }

  std::size_t size() const { return data.size(); }
  int cols() const { return shape.empty() ? 1 : shape.back(); }
  int rows() const { return cols() == 0 ? 0 : static_cast<int>(size() / cols()); }
  T& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  T operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }
  bool operator==(const Tensor&) const = default;

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }
};

template <typename T>
std::string shape_string(const Tensor<T>& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(t.shape[i]);
  }
  return s + "]";
}

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Nodes live in a deque so references to earlier values
// stay valid while new nodes are appended.
template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor<T>& out_grad)>;

  Var constant(Tensor<T> value) { return push(std::move(value), nullptr, false); }
  Var leaf(Tensor<T> value) { return push(std::move(value), nullptr, true); }

  Var push(Tensor<T> value, Backward backward, bool requires_grad) {
    nodes_.push_back(Node{std::move(value), Tensor<T>{}, std::move(backward), requires_grad});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  // Gradient of the last backward() target with respect to v; zeros when v
  // did not influence the target.
  const Tensor<T>& grad(Var v) {
    Node& n = nodes_.at(v.id);
    if (n.grad.data.empty()) n.grad = Tensor<T>(n.value.shape);
    return n.grad;
  }

  // Accumulation target for backward closures; null when v needs no gradient.
  T* grad_buffer(Var v) {
    Node& n = nodes_[v.id];
    if (!n.requires_grad) return nullptr;
    if (n.grad.data.empty()) n.grad = Tensor<T>(n.value.shape);
    return n.grad.data.data();
  }

  void backward(Var target) {
    Node& out = nodes_.at(target.id);
    if (out.value.size() != 1) throw Error("backward target must be a scalar");
    for (auto& n : nodes_) n.grad = Tensor<T>{};
    out.grad = Tensor<T>(out.value.shape, T(1));
    for (int i = target.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.data.empty()) continue;
      n.backward(*this, n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    Backward backward;
    bool requires_grad;
  };
  std::deque<Node> nodes_;
};

}  // namespace poselift::nn
