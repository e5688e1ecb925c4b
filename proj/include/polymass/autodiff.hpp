/* Copyright 2026 The Polymass Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Tape-based reverse-mode differentiation over row-major matrices.
//
// Each op computes its value eagerly and, when the tape records, pushes a
// closure that maps the output gradient to input gradients. Backward() walks
// the tape in reverse. Parameters are leaves that alias external storage and
// accumulate their gradients into caller-owned matrices.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "polymass/common.hpp"
#include "polymass/tensor.hpp"

namespace polymass {

struct Var {
  int id = -1;
};

template <typename T>
struct AttentionArgs {
  Var q, k, v;
  // Column offsets of the head blocks inside q/k/v (for fused projections).
  std::size_t q_offset = 0, k_offset = 0, v_offset = 0;
  std::size_t batch = 0;
  std::size_t q_len = 0;
  std::size_t k_len = 0;
  std::size_t heads = 1;
  std::size_t width = 0;  // model width; head width = width / heads
  // batch x k_len; 0 marks padded keys.
  std::span<const std::uint8_t> key_valid;
  bool causal = false;
};

struct LossStats {
  double loss = 0.0;  // label-smoothed, averaged over counted rows
  double nll = 0.0;   // plain negative log-likelihood, same averaging
  std::size_t tokens = 0;
};

template <typename T>
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var Constant(Matrix<T> value);
  // `grad` may be null, which makes the leaf a constant.
  Var Parameter(const Matrix<T>& value, Matrix<T>* grad);

  const Matrix<T>& value(Var v) const { return *nodes_[v.id]->value; }

  // y = x W, x: m x k, W: k x n.
  Var MatMul(Var x, Var w);
  // y = x W^T, x: m x k, W: n x k.
  Var MatMulNT(Var x, Var w);
  Var AddBias(Var x, Var bias);
  Var Add(Var a, Var b);
  // Adds a fixed matrix of the same shape (no gradient flows into it).
  Var AddConstant(Var x, const Matrix<T>& c);
  Var LayerNorm(Var x, Var gain, Var bias, T eps);
  // tanh approximation.
  Var Gelu(Var x);
  // Rows of `table` selected by ids, times `scale`.
  Var Embed(Var table, std::span<const TokenId> ids, T scale);
  Var GatherRows(Var x, std::span<const std::size_t> rows);
  Var Dropout(Var x, double p, Rng& rng);
  Var Attention(const AttentionArgs<T>& args);
  // Mean label-smoothed cross-entropy over rows whose mask is 1.
  // `rows_to_targets` maps logits rows to entries of targets/mask; empty
  // means identity. Returns a 1 x 1 loss variable.
  Var CrossEntropy(Var logits, std::span<const TokenId> targets,
                   std::span<const std::uint8_t> mask, T smoothing, LossStats* stats);

  // Seeds d(loss)/d(loss) = seed and propagates to every parameter.
  void Backward(Var loss, T seed = T(1));

 private:
  struct Node {
    const Matrix<T>* value = nullptr;
    Matrix<T> owned_value;
    Matrix<T>* grad = nullptr;
    Matrix<T> owned_grad;
    bool needs_grad = false;
    bool grad_touched = false;
    std::function<void()> backward;
  };

  Var Push(Matrix<T> value, bool needs_grad);
  bool NeedsGrad(Var v) const { return nodes_[v.id]->needs_grad; }
  // Gradient buffer for `v`, zero-initialized on first access.
  Matrix<T>& Grad(Var v);
  Matrix<T>& OutGrad(int id) { return *nodes_[id]->grad; }
  void SetBackward(Var out, std::function<void()> fn);

  bool record_;
  std::vector<std::unique_ptr<Node>> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace polymass
