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

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poselift/tensor.hpp"

namespace poselift::nn {

namespace detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

template <typename T>
ConstMapMat<T> view(const Tensor<T>& t) {
  return ConstMapMat<T>(t.data.data(), t.rows(), t.cols(), Eigen::OuterStride<>(t.cols()));
}
template <typename T>
MapMat<T> view(T* data, int rows, int cols) {
  return MapMat<T>(data, rows, cols, Eigen::OuterStride<>(cols));
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(what);
}

template <typename T>
bool any_grad(Tape<T>& tape, std::initializer_list<Var> vars) {
  for (Var v : vars)
    if (tape.requires_grad(v)) return true;
  return false;
}

}  // namespace detail

// a[n x k] * b[k x m]
template <typename T>
Var matmul(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& av = tape.value(a);
  const Tensor<T>& bv = tape.value(b);
  detail::require(av.cols() == bv.rows(), "matmul: inner dimensions differ (" +
                                              shape_string(av) + " * " + shape_string(bv) + ")");
  Tensor<T> out({av.rows(), bv.cols()});
  detail::view(out.data.data(), out.rows(), out.cols()).noalias() =
      detail::view(av) * detail::view(bv);
  return tape.push(
      std::move(out),
      [a, b](Tape<T>& tp, const Tensor<T>& g) {
        const Tensor<T>& av = tp.value(a);
        const Tensor<T>& bv = tp.value(b);
        if (T* ga = tp.grad_buffer(a))
          detail::view(ga, av.rows(), av.cols()).noalias() +=
              detail::view(g) * detail::view(bv).transpose();
        if (T* gb = tp.grad_buffer(b))
          detail::view(gb, bv.rows(), bv.cols()).noalias() +=
              detail::view(av).transpose() * detail::view(g);
      },
      detail::any_grad(tape, {a, b}));
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& av = tape.value(a);
  const Tensor<T>& bv = tape.value(b);
  detail::require(av.size() == bv.size() && av.cols() == bv.cols(),
                  "add: shape mismatch " + shape_string(av) + " vs " + shape_string(bv));
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += bv.data[i];
  return tape.push(
      std::move(out),
      [a, b](Tape<T>& tp, const Tensor<T>& g) {
        for (Var v : {a, b})
          if (T* gv = tp.grad_buffer(v))
            for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g.data[i];
      },
      detail::any_grad(tape, {a, b}));
}

// x[n x m] + bias[m] broadcast over rows.
template <typename T>
Var add_bias(Tape<T>& tape, Var x, Var bias) {
  const Tensor<T>& xv = tape.value(x);
  const Tensor<T>& bv = tape.value(bias);
  detail::require(static_cast<int>(bv.size()) == xv.cols(), "add_bias: bias width mismatch");
  Tensor<T> out = xv;
  const int m = xv.cols();
  for (int r = 0; r < xv.rows(); ++r)
    for (int c = 0; c < m; ++c) out(r, c) += bv.data[c];
  return tape.push(
      std::move(out),
      [x, bias, m](Tape<T>& tp, const Tensor<T>& g) {
        if (T* gx = tp.grad_buffer(x))
          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g.data[i];
        if (T* gb = tp.grad_buffer(bias))
          for (int r = 0; r < g.rows(); ++r)
            for (int c = 0; c < m; ++c) gb[c] += g(r, c);
      },
      detail::any_grad(tape, {x, bias}));
}

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor) {
  Tensor<T> out = tape.value(x);
  for (auto& v : out.data) v *= factor;
  return tape.push(
      std::move(out),
      [x, factor](Tape<T>& tp, const Tensor<T>& g) {
        if (T* gx = tp.grad_buffer(x))
          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g.data[i];
      },
      tape.requires_grad(x));
}

// Same data, new shape. Element count must be preserved.
template <typename T>
Var reshape(Tape<T>& tape, Var x, std::vector<int> shape) {
  Tensor<T> out = tape.value(x);
  detail::require(Tensor<T>::count(shape) == out.size(), "reshape: element count changes");
  out.shape = std::move(shape);
  return tape.push(
      std::move(out),
      [x](Tape<T>& tp, const Tensor<T>& g) {
        if (T* gx = tp.grad_buffer(x))
          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g.data[i];
      },
      tape.requires_grad(x));
}

// Population-variance layer norm over the last dimension.
template <typename T>
Var layer_norm(Tape<T>& tape, Var x, Var gamma, Var beta, T eps = T(1e-5)) {
  const Tensor<T>& xv = tape.value(x);
  const int n = xv.rows();
  const int m = xv.cols();
  detail::require(static_cast<int>(tape.value(gamma).size()) == m &&
                      static_cast<int>(tape.value(beta).size()) == m,
                  "layer_norm: gamma/beta must match the last dimension");
  const Tensor<T>& gv = tape.value(gamma);
  const Tensor<T>& bv = tape.value(beta);
  auto normalized = std::make_shared<Tensor<T>>(xv.shape);
  auto inv_std = std::make_shared<std::vector<T>>(n);
  Tensor<T> out(xv.shape);
  for (int r = 0; r < n; ++r) {
    T mean = 0;
    for (int c = 0; c < m; ++c) mean += xv(r, c);
    mean /= m;
    T var = 0;
    for (int c = 0; c < m; ++c) var += (xv(r, c) - mean) * (xv(r, c) - mean);
    var /= m;
    const T is = T(1) / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (int c = 0; c < m; ++c) {
      const T xh = (xv(r, c) - mean) * is;
      (*normalized)(r, c) = xh;
      out(r, c) = xh * gv.data[c] + bv.data[c];
    }
  }
  return tape.push(
      std::move(out),
      [x, gamma, beta, normalized, inv_std, n, m](Tape<T>& tp, const Tensor<T>& g) {
        const Tensor<T>& gv = tp.value(gamma);
        const Tensor<T>& xh = *normalized;
        if (T* gg = tp.grad_buffer(gamma))
          for (int r = 0; r < n; ++r)
            for (int c = 0; c < m; ++c) gg[c] += g(r, c) * xh(r, c);
        if (T* gb = tp.grad_buffer(beta))
          for (int r = 0; r < n; ++r)
            for (int c = 0; c < m; ++c) gb[c] += g(r, c);
        T* gx = tp.grad_buffer(x);
        if (!gx) return;
        for (int r = 0; r < n; ++r) {
          T mean_d = 0;
          T mean_dx = 0;
          for (int c = 0; c < m; ++c) {
            const T d = g(r, c) * gv.data[c];
            mean_d += d;
            mean_dx += d * xh(r, c);
          }
          mean_d /= m;
          mean_dx /= m;
          for (int c = 0; c < m; ++c) {
            const T d = g(r, c) * gv.data[c];
            gx[static_cast<std::size_t>(r) * m + c] +=
                (*inv_std)[r] * (d - mean_d - xh(r, c) * mean_dx);
          }
        }
      },
      detail::any_grad(tape, {x, gamma, beta}));
}

// Exact Gaussian-CDF GeLU.
template <typename T>
T gelu_value(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * T(std::numbers::sqrt2 / 2)));
}
template <typename T>
T gelu_derivative(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * T(std::numbers::sqrt2 / 2)));
  const T pdf = std::exp(T(-0.5) * x * x) * T(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
  return cdf + x * pdf;
}

template <typename T>
Var gelu(Tape<T>& tape, Var x) {
  Tensor<T> out = tape.value(x);
  for (auto& v : out.data) v = gelu_value(v);
  return tape.push(
      std::move(out),
      [x](Tape<T>& tp, const Tensor<T>& g) {
        T* gx = tp.grad_buffer(x);
        if (!gx) return;
        const Tensor<T>& xv = tp.value(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g.data[i] * gelu_derivative(xv.data[i]);
      },
      tape.requires_grad(x));
}

// Scaled dot-product attention, softmax(Q K^T * scale) V, evaluated
// independently for `groups` contiguous row blocks and `heads` contiguous
// column blocks. Q is [groups*nq x heads*dk], K is [groups*nk x heads*dk],
// V is [groups*nk x heads*dv]; the output is [groups*nq x heads*dv] with
// heads concatenated in order.
template <typename T>
Var sdp_attention(Tape<T>& tape, Var q, Var k, Var v, T scale_factor, int groups = 1,
                  int heads = 1) {
  const Tensor<T>& qv = tape.value(q);
  const Tensor<T>& kv = tape.value(k);
  const Tensor<T>& vv = tape.value(v);
  detail::require(groups >= 1 && heads >= 1, "sdp_attention: groups and heads must be positive");
  detail::require(qv.rows() % groups == 0 && kv.rows() % groups == 0,
                  "sdp_attention: row count not divisible by groups");
  detail::require(kv.rows() == vv.rows(), "sdp_attention: K and V row counts differ");
  detail::require(qv.cols() == kv.cols(), "sdp_attention: Q and K widths differ");
  detail::require(qv.cols() % heads == 0 && vv.cols() % heads == 0,
                  "sdp_attention: width not divisible by heads");
  const int nq = qv.rows() / groups;
  const int nk = kv.rows() / groups;
  detail::require(nk >= 1, "sdp_attention: empty key set");
  const int dk = qv.cols() / heads;
  const int dv = vv.cols() / heads;
  const int qc = qv.cols();
  const int vc = vv.cols();

  // Softmax weights for every (group, head), kept for the backward pass.
  auto weights = std::make_shared<std::vector<T>>(
      static_cast<std::size_t>(groups) * heads * nq * nk);
  Tensor<T> out({groups * nq, heads * dv});
  using detail::ConstMapMat;
  using detail::MapMat;
  for (int gi = 0; gi < groups; ++gi) {
    for (int h = 0; h < heads; ++h) {
      ConstMapMat<T> Q(qv.data.data() + static_cast<std::size_t>(gi) * nq * qc + h * dk, nq, dk,
                       Eigen::OuterStride<>(qc));
      ConstMapMat<T> K(kv.data.data() + static_cast<std::size_t>(gi) * nk * qc + h * dk, nk, dk,
                       Eigen::OuterStride<>(qc));
      ConstMapMat<T> V(vv.data.data() + static_cast<std::size_t>(gi) * nk * vc + h * dv, nk, dv,
                       Eigen::OuterStride<>(vc));
      T* wp = weights->data() + (static_cast<std::size_t>(gi) * heads + h) * nq * nk;
      MapMat<T> A(wp, nq, nk, Eigen::OuterStride<>(nk));
      A.noalias() = (Q * K.transpose()) * scale_factor;
      for (int r = 0; r < nq; ++r) {
        const T mx = A.row(r).maxCoeff();
        A.row(r) = (A.row(r).array() - mx).exp();
        A.row(r) /= A.row(r).sum();
      }
      MapMat<T> O(out.data.data() + static_cast<std::size_t>(gi) * nq * heads * dv + h * dv, nq,
                  dv, Eigen::OuterStride<>(heads * dv));
      O.noalias() = A * V;
    }
  }
  return tape.push(
      std::move(out),
      [q, k, v, weights, scale_factor, groups, heads, nq, nk, dk, dv, qc, vc](
          Tape<T>& tp, const Tensor<T>& g) {
        const Tensor<T>& qv = tp.value(q);
        const Tensor<T>& kv = tp.value(k);
        const Tensor<T>& vv = tp.value(v);
        T* gq = tp.grad_buffer(q);
        T* gk = tp.grad_buffer(k);
        T* gvp = tp.grad_buffer(v);
        detail::RowMat<T> dA(nq, nk);
        for (int gi = 0; gi < groups; ++gi) {
          for (int h = 0; h < heads; ++h) {
            const std::size_t qoff = static_cast<std::size_t>(gi) * nq * qc + h * dk;
            const std::size_t koff = static_cast<std::size_t>(gi) * nk * qc + h * dk;
            const std::size_t voff = static_cast<std::size_t>(gi) * nk * vc + h * dv;
            ConstMapMat<T> Q(qv.data.data() + qoff, nq, dk, Eigen::OuterStride<>(qc));
            ConstMapMat<T> K(kv.data.data() + koff, nk, dk, Eigen::OuterStride<>(qc));
            ConstMapMat<T> V(vv.data.data() + voff, nk, dv, Eigen::OuterStride<>(vc));
            ConstMapMat<T> A(weights->data() + (static_cast<std::size_t>(gi) * heads + h) * nq * nk,
                             nq, nk, Eigen::OuterStride<>(nk));
            ConstMapMat<T> dO(g.data.data() + static_cast<std::size_t>(gi) * nq * heads * dv + h * dv,
                              nq, dv, Eigen::OuterStride<>(heads * dv));
            if (gvp) {
              MapMat<T>(gvp + voff, nk, dv, Eigen::OuterStride<>(vc)).noalias() +=
                  A.transpose() * dO;
            }
            if (!gq && !gk) continue;
            dA.noalias() = dO * V.transpose();
            // Softmax backward: dS = A * (dA - rowsum(dA * A)).
            for (int r = 0; r < nq; ++r) {
              const T dot = (dA.row(r).array() * A.row(r).array()).sum();
              dA.row(r) = (A.row(r).array() * (dA.row(r).array() - dot)) * scale_factor;
            }
            if (gq)
              MapMat<T>(gq + qoff, nq, dk, Eigen::OuterStride<>(qc)).noalias() += dA * K;
            if (gk)
              MapMat<T>(gk + koff, nk, dk, Eigen::OuterStride<>(qc)).noalias() +=
                  dA.transpose() * Q;
          }
        }
      },
      detail::any_grad(tape, {q, k, v}));
}

template <typename T>
Var slice_cols(Tape<T>& tape, Var x, int start, int width) {
  const Tensor<T>& xv = tape.value(x);
  const int m = xv.cols();
  detail::require(start >= 0 && width >= 1 && start + width <= m, "slice_cols: out of range");
  Tensor<T> out({xv.rows(), width});
  for (int r = 0; r < xv.rows(); ++r)
    for (int c = 0; c < width; ++c) out(r, c) = xv(r, start + c);
  return tape.push(
      std::move(out),
      [x, start, width, m](Tape<T>& tp, const Tensor<T>& g) {
        T* gx = tp.grad_buffer(x);
        if (!gx) return;
        for (int r = 0; r < g.rows(); ++r)
          for (int c = 0; c < width; ++c) gx[static_cast<std::size_t>(r) * m + start + c] += g(r, c);
      },
      tape.requires_grad(x));
}

template <typename T>
Var concat_cols(Tape<T>& tape, const std::vector<Var>& parts) {
  detail::require(!parts.empty(), "concat_cols: no inputs");
  const int n = tape.value(parts[0]).rows();
  int total = 0;
  bool needs_grad = false;
  for (Var p : parts) {
    detail::require(tape.value(p).rows() == n, "concat_cols: row counts differ");
    total += tape.value(p).cols();
    needs_grad = needs_grad || tape.requires_grad(p);
  }
  Tensor<T> out({n, total});
  int offset = 0;
  for (Var p : parts) {
    const Tensor<T>& pv = tape.value(p);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < pv.cols(); ++c) out(r, offset + c) = pv(r, c);
    offset += pv.cols();
  }
  return tape.push(
      std::move(out),
      [parts, total](Tape<T>& tp, const Tensor<T>& g) {
        int offset = 0;
        for (Var p : parts) {
          const int w = tp.value(p).cols();
          if (T* gp = tp.grad_buffer(p))
            for (int r = 0; r < g.rows(); ++r)
              for (int c = 0; c < w; ++c) gp[static_cast<std::size_t>(r) * w + c] += g(r, offset + c);
          offset += w;
        }
        (void)total;
      },
      needs_grad);
}

// Rows [start, start + count) of x.
template <typename T>
Var slice_rows(Tape<T>& tape, Var x, int start, int count) {
  const Tensor<T>& xv = tape.value(x);
  const int m = xv.cols();
  detail::require(start >= 0 && count >= 1 && start + count <= xv.rows(), "slice_rows: out of range");
  Tensor<T> out({count, m});
  std::copy_n(xv.data.begin() + static_cast<std::ptrdiff_t>(start) * m,
              static_cast<std::size_t>(count) * m, out.data.begin());
  return tape.push(
      std::move(out),
      [x, start, m](Tape<T>& tp, const Tensor<T>& g) {
        T* gx = tp.grad_buffer(x);
        if (!gx) return;
        for (std::size_t i = 0; i < g.size(); ++i) gx[static_cast<std::size_t>(start) * m + i] += g.data[i];
      },
      tape.requires_grad(x));
}

// Arithmetic mean of equally shaped tensors.
template <typename T>
Var mean_of(Tape<T>& tape, const std::vector<Var>& parts) {
  detail::require(!parts.empty(), "mean_of: no inputs");
  Var acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = add(tape, acc, parts[i]);
  if (parts.size() == 1) return acc;
  return scale(tape, acc, T(1) / static_cast<T>(parts.size()));
}

// x is [rows x joints*3]; subtracts the root joint's xyz from every joint.
template <typename T>
Var subtract_root(Tape<T>& tape, Var x, int joints, int root) {
  const Tensor<T>& xv = tape.value(x);
  detail::require(xv.cols() == joints * 3, "subtract_root: width must be joints*3");
  detail::require(root >= 0 && root < joints, "subtract_root: root out of range");
  Tensor<T> out = xv;
  for (int r = 0; r < xv.rows(); ++r)
    for (int j = 0; j < joints; ++j)
      for (int c = 0; c < 3; ++c) out(r, j * 3 + c) = xv(r, j * 3 + c) - xv(r, root * 3 + c);
  return tape.push(
      std::move(out),
      [x, joints, root](Tape<T>& tp, const Tensor<T>& g) {
        T* gx = tp.grad_buffer(x);
        if (!gx) return;
        const int m = joints * 3;
        for (int r = 0; r < g.rows(); ++r)
          for (int j = 0; j < joints; ++j)
            for (int c = 0; c < 3; ++c) {
              const T d = g(r, j * 3 + c);
              gx[static_cast<std::size_t>(r) * m + j * 3 + c] += d;
              gx[static_cast<std::size_t>(r) * m + root * 3 + c] -= d;
            }
      },
      tape.requires_grad(x));
}

// Smoothed Euclidean distance used by the MPJPE loss; keeps the gradient
// defined when a joint coincides with its target.
inline constexpr double kDistanceSmoothing = 1e-12;

// Mean over rows and joints of the per-joint Euclidean distance between
// pred [rows x joints*3] and the constant target of the same shape.
template <typename T>
Var mean_joint_distance(Tape<T>& tape, Var pred, const Tensor<T>& target) {
  const Tensor<T>& pv = tape.value(pred);
  detail::require(pv.size() == target.size() && pv.cols() == target.cols() && pv.cols() % 3 == 0,
                  "mean_joint_distance: shape mismatch");
  const std::size_t n_points = pv.size() / 3;
  auto dist = std::make_shared<std::vector<T>>(n_points);
  T total = 0;
  for (std::size_t p = 0; p < n_points; ++p) {
    T sq = 0;
    for (int c = 0; c < 3; ++c) {
      const T d = pv.data[p * 3 + c] - target.data[p * 3 + c];
      sq += d * d;
    }
    (*dist)[p] = std::sqrt(sq + T(kDistanceSmoothing));
    total += (*dist)[p];
  }
  Tensor<T> out({1}, {total / static_cast<T>(n_points)});
  return tape.push(
      std::move(out),
      [pred, target, dist, n_points](Tape<T>& tp, const Tensor<T>& g) {
        T* gp = tp.grad_buffer(pred);
        if (!gp) return;
        const Tensor<T>& pv = tp.value(pred);
        const T scale_factor = g.data[0] / static_cast<T>(n_points);
        for (std::size_t p = 0; p < n_points; ++p)
          for (int c = 0; c < 3; ++c)
            gp[p * 3 + c] += scale_factor * (pv.data[p * 3 + c] - target.data[p * 3 + c]) / (*dist)[p];
      },
      tape.requires_grad(pred));
}

// sum(x * weights) with constant weights; a scalar probe for gradient tests.
template <typename T>
Var weighted_sum(Tape<T>& tape, Var x, const Tensor<T>& weights) {
  const Tensor<T>& xv = tape.value(x);
  detail::require(xv.size() == weights.size(), "weighted_sum: size mismatch");
  T total = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) total += xv.data[i] * weights.data[i];
  return tape.push(
      Tensor<T>({1}, {total}),
      [x, weights](Tape<T>& tp, const Tensor<T>& g) {
        if (T* gx = tp.grad_buffer(x))
          for (std::size_t i = 0; i < weights.size(); ++i) gx[i] += g.data[0] * weights.data[i];
      },
      tape.requires_grad(x));
}

// ---------------------------------------------------------------------------
// Composite blocks.

struct LinearVars {
  Var weight;  // [in x out]
  Var bias;    // [out]
};

template <typename T>
Var linear(Tape<T>& tape, Var x, const LinearVars& p) {
  return add_bias(tape, matmul(tape, x, p.weight), p.bias);
}

struct AttentionConfig {
  int n_heads = 8;
  int model_dim = 64;

  int head_dim() const { return model_dim / n_heads; }
  void check() const {
    if (n_heads < 1) throw Error("attention needs at least one head");
    if (model_dim < 1 || model_dim % n_heads != 0)
      throw Error("model_dim " + std::to_string(model_dim) + " is not divisible by n_heads " +
                  std::to_string(n_heads));
  }
};

struct AttentionVars {
  LinearVars query;
  LinearVars key;
  LinearVars value;
  LinearVars output;
};

// h parallel scaled dot-product heads over learned projections of
// (x_q, x_kv, x_kv), concatenated and output-projected. Self-attention when
// x_q and x_kv are the same variable. `groups` splits the rows into
// independent attention problems (e.g. one per frame).
template <typename T>
Var multi_head_attention(Tape<T>& tape, Var x_q, Var x_kv, const AttentionVars& p,
                         const AttentionConfig& cfg, int groups = 1) {
  cfg.check();
  detail::require(tape.value(x_q).cols() == cfg.model_dim && tape.value(x_kv).cols() == cfg.model_dim,
                  "multi_head_attention: feature width differs from model_dim");
  Var q = linear(tape, x_q, p.query);
  Var k = linear(tape, x_kv, p.key);
  Var v = linear(tape, x_kv, p.value);
  const T s = T(1) / std::sqrt(static_cast<T>(cfg.head_dim()));
  Var z = sdp_attention(tape, q, k, v, s, groups, cfg.n_heads);
  return linear(tape, z, p.output);
}

struct MlpVars {
  LinearVars fc1;
  LinearVars fc2;
};

// Linear -> GeLU -> Linear.
template <typename T>
Var mlp_block(Tape<T>& tape, Var x, const MlpVars& p) {
  return linear(tape, gelu(tape, linear(tape, x, p.fc1)), p.fc2);
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checking (64-bit).

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::vector<double> per_param_rel_error;
  std::size_t n_checked = 0;
  double tolerance = 0.0;
  bool passed() const { return max_rel_error < tolerance; }
};

// Builds the scalar objective on a fresh tape from leaf variables holding the
// given parameter tensors.
using ScalarFunction = std::function<Var(Tape<double>&, std::span<const Var>)>;

// Relative error |analytic - numeric| / max(|analytic|, |numeric|, floor * max(1, |f|)).
// The floor keeps entries whose true gradient is ~0 (e.g. attention key
// biases) from reporting pure round-off; it scales with the objective so the
// measure is invariant to rescaling f.
inline constexpr double kGradCheckFloor = 1e-6;

// Optional hook that perturbs analytic gradients; used for negative controls.
using GradientTamper = std::function<void(std::vector<Tensor<double>>&)>;

GradCheckReport gradient_check(const ScalarFunction& f, const std::vector<Tensor<double>>& params,
                               double step = 1e-5, double tol = 1e-4,
                               const GradientTamper& tamper = nullptr,
                               double floor = kGradCheckFloor);

}  // namespace poselift::nn
