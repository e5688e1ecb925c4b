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

#include "polymass/autodiff.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <type_traits>

#include "polymass/simd/kernels.hpp"

namespace polymass {

namespace {

// tanh through one exp. Single precision uses expf, which is several times
// cheaper than tanhf; double keeps the library tanh for gradient checks.
template <typename T>
T Tanh(T z) {
  if constexpr (std::is_same_v<T, float>) {
    const float e = std::exp(-2.0f * std::fabs(z));
    return std::copysign((1.0f - e) / (1.0f + e), z);
  } else {
    return std::tanh(z);
  }
}

}  // namespace

template <typename T>
Var Tape<T>::Push(Matrix<T> value, bool needs_grad) {
  auto node = std::make_unique<Node>();
  node->owned_value = std::move(value);
  node->value = &node->owned_value;
  node->needs_grad = record_ && needs_grad;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
Var Tape<T>::Constant(Matrix<T> value) {
  return Push(std::move(value), false);
}

template <typename T>
Var Tape<T>::Parameter(const Matrix<T>& value, Matrix<T>* grad) {
  auto node = std::make_unique<Node>();
  node->value = &value;
  node->needs_grad = record_ && grad != nullptr;
  if (node->needs_grad) {
    if (!grad->SameShape(value)) throw Error("Tape::Parameter: gradient shape mismatch");
    node->grad = grad;
  }
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
Matrix<T>& Tape<T>::Grad(Var v) {
  Node& n = *nodes_[v.id];
  if (n.grad == nullptr) {
    n.owned_grad = Matrix<T>(n.value->rows, n.value->cols);
    n.grad = &n.owned_grad;
  }
  n.grad_touched = true;
  return *n.grad;
}

template <typename T>
void Tape<T>::SetBackward(Var out, std::function<void()> fn) {
  if (record_ && nodes_[out.id]->needs_grad) nodes_[out.id]->backward = std::move(fn);
}

template <typename T>
void Tape<T>::Backward(Var loss, T seed) {
  if (!record_) throw Error("Tape::Backward on a non-recording tape");
  if (!nodes_[loss.id]->needs_grad) return;
  Grad(loss).Fill(seed);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = *nodes_[i];
    if (n.backward && n.grad_touched) n.backward();
  }
}

template <typename T>
Var Tape<T>::MatMul(Var x, Var w) {
  const Matrix<T>& X = value(x);
  const Matrix<T>& W = value(w);
  if (X.cols != W.rows) throw Error("MatMul: inner dimensions differ");
  const std::size_t m = X.rows, k = X.cols, n = W.cols;
  Matrix<T> Y(m, n);
  simd::Gemm<T>(false, false, m, n, k, X.data.data(), k, W.data.data(), n, Y.data.data(), n,
                false);
  Var y = Push(std::move(Y), NeedsGrad(x) || NeedsGrad(w));
  SetBackward(y, [this, x, w, y, m, k, n] {
    const Matrix<T>& dY = OutGrad(y.id);
    if (NeedsGrad(x)) {
      simd::Gemm<T>(false, true, m, k, n, dY.data.data(), n, value(w).data.data(), n,
                    Grad(x).data.data(), k, true);
    }
    if (NeedsGrad(w)) {
      simd::Gemm<T>(true, false, k, n, m, value(x).data.data(), k, dY.data.data(), n,
                    Grad(w).data.data(), n, true);
    }
  });
  return y;
}

template <typename T>
Var Tape<T>::MatMulNT(Var x, Var w) {
  const Matrix<T>& X = value(x);
  const Matrix<T>& W = value(w);
  if (X.cols != W.cols) throw Error("MatMulNT: inner dimensions differ");
  const std::size_t m = X.rows, k = X.cols, n = W.rows;
  Matrix<T> Y(m, n);
  simd::Gemm<T>(false, true, m, n, k, X.data.data(), k, W.data.data(), k, Y.data.data(), n,
                false);
  Var y = Push(std::move(Y), NeedsGrad(x) || NeedsGrad(w));
  SetBackward(y, [this, x, w, y, m, k, n] {
    const Matrix<T>& dY = OutGrad(y.id);
    if (NeedsGrad(x)) {
      simd::Gemm<T>(false, false, m, k, n, dY.data.data(), n, value(w).data.data(), k,
                    Grad(x).data.data(), k, true);
    }
    if (NeedsGrad(w)) {
      simd::Gemm<T>(true, false, n, k, m, dY.data.data(), n, value(x).data.data(), k,
                    Grad(w).data.data(), k, true);
    }
  });
  return y;
}

template <typename T>
Var Tape<T>::AddBias(Var x, Var bias) {
  const Matrix<T>& X = value(x);
  const Matrix<T>& B = value(bias);
  if (B.rows != 1 || B.cols != X.cols) throw Error("AddBias: shape mismatch");
  Matrix<T> Y = X;
  for (std::size_t r = 0; r < Y.rows; ++r) {
    T* yr = Y.row(r);
    for (std::size_t c = 0; c < Y.cols; ++c) yr[c] += B.data[c];
  }
  Var y = Push(std::move(Y), NeedsGrad(x) || NeedsGrad(bias));
  SetBackward(y, [this, x, bias, y] {
    const Matrix<T>& dY = OutGrad(y.id);
    if (NeedsGrad(x)) {
      Matrix<T>& dX = Grad(x);
      for (std::size_t i = 0; i < dY.size(); ++i) dX.data[i] += dY.data[i];
    }
    if (NeedsGrad(bias)) {
      Matrix<T>& dB = Grad(bias);
      for (std::size_t r = 0; r < dY.rows; ++r) {
        const T* g = dY.row(r);
        for (std::size_t c = 0; c < dY.cols; ++c) dB.data[c] += g[c];
      }
    }
  });
  return y;
}

template <typename T>
Var Tape<T>::Add(Var a, Var b) {
  const Matrix<T>& A = value(a);
  const Matrix<T>& B = value(b);
  if (!A.SameShape(B)) throw Error("Add: shape mismatch");
  Matrix<T> Y = A;
  for (std::size_t i = 0; i < Y.size(); ++i) Y.data[i] += B.data[i];
  Var y = Push(std::move(Y), NeedsGrad(a) || NeedsGrad(b));
  SetBackward(y, [this, a, b, y] {
    const Matrix<T>& dY = OutGrad(y.id);
    for (Var in : {a, b}) {
      if (!NeedsGrad(in)) continue;
      Matrix<T>& d = Grad(in);
      for (std::size_t i = 0; i < dY.size(); ++i) d.data[i] += dY.data[i];
    }
  });
  return y;
}

template <typename T>
Var Tape<T>::AddConstant(Var x, const Matrix<T>& c) {
  const Matrix<T>& X = value(x);
  if (!X.SameShape(c)) throw Error("AddConstant: shape mismatch");
  Matrix<T> Y = X;
  for (std::size_t i = 0; i < Y.size(); ++i) Y.data[i] += c.data[i];
  Var y = Push(std::move(Y), NeedsGrad(x));
  SetBackward(y, [this, x, y] {
    const Matrix<T>& dY = OutGrad(y.id);
    Matrix<T>& dX = Grad(x);
    for (std::size_t i = 0; i < dY.size(); ++i) dX.data[i] += dY.data[i];
  });
  return y;
}

template <typename T>
Var Tape<T>::LayerNorm(Var x, Var gain, Var bias, T eps) {
  const Matrix<T>& X = value(x);
  const Matrix<T>& G = value(gain);
  const Matrix<T>& B = value(bias);
  const std::size_t n = X.cols;
  if (G.cols != n || B.cols != n) throw Error("LayerNorm: shape mismatch");
  Matrix<T> Y(X.rows, n);
  Matrix<T> xhat(X.rows, n);
  std::vector<T> inv_std(X.rows);
  for (std::size_t r = 0; r < X.rows; ++r) {
    const T* xr = X.row(r);
    double mean = 0.0;
    for (std::size_t c = 0; c < n; ++c) mean += xr[c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double d = xr[c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const T inv = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
    inv_std[r] = inv;
    T* hr = xhat.row(r);
    T* yr = Y.row(r);
    for (std::size_t c = 0; c < n; ++c) {
      hr[c] = static_cast<T>(xr[c] - mean) * inv;
      yr[c] = hr[c] * G.data[c] + B.data[c];
    }
  }
  const bool needs = NeedsGrad(x) || NeedsGrad(gain) || NeedsGrad(bias);
  Var y = Push(std::move(Y), needs);
  if (record_ && needs) {
    SetBackward(y, [this, x, gain, bias, y, n, xhat = std::move(xhat),
                    inv_std = std::move(inv_std)] {
      const Matrix<T>& dY = OutGrad(y.id);
      const Matrix<T>& Gv = value(gain);
      if (NeedsGrad(gain) || NeedsGrad(bias)) {
        Matrix<T>* dG = NeedsGrad(gain) ? &Grad(gain) : nullptr;
        Matrix<T>* dB = NeedsGrad(bias) ? &Grad(bias) : nullptr;
        for (std::size_t r = 0; r < dY.rows; ++r) {
          const T* g = dY.row(r);
          const T* h = xhat.row(r);
          for (std::size_t c = 0; c < n; ++c) {
            if (dG) dG->data[c] += g[c] * h[c];
            if (dB) dB->data[c] += g[c];
          }
        }
      }
      if (NeedsGrad(x)) {
        Matrix<T>& dX = Grad(x);
        std::vector<T> dh(n);
        for (std::size_t r = 0; r < dY.rows; ++r) {
          const T* g = dY.row(r);
          const T* h = xhat.row(r);
          double mean_dh = 0.0, mean_dh_h = 0.0;
          for (std::size_t c = 0; c < n; ++c) {
            dh[c] = g[c] * Gv.data[c];
            mean_dh += dh[c];
            mean_dh_h += static_cast<double>(dh[c]) * h[c];
          }
          mean_dh /= static_cast<double>(n);
          mean_dh_h /= static_cast<double>(n);
          T* dx = dX.row(r);
          const T inv = inv_std[r];
          for (std::size_t c = 0; c < n; ++c) {
            dx[c] += inv * static_cast<T>(dh[c] - mean_dh - h[c] * mean_dh_h);
          }
        }
      }
    });
  }
  return y;
}

template <typename T>
Var Tape<T>::Gelu(Var x) {
  const Matrix<T>& X = value(x);
  constexpr T kC = T(0.7978845608028654);  // sqrt(2/pi)
  constexpr T kA = T(0.044715);
  Matrix<T> Y(X.rows, X.cols);
  auto tanh_cache = std::make_shared<std::vector<T>>(record_ ? X.size() : 0);
  for (std::size_t i = 0; i < X.size(); ++i) {
    const T v = X.data[i];
    const T t = Tanh(kC * (v + kA * v * v * v));
    if (record_) (*tanh_cache)[i] = t;
    Y.data[i] = T(0.5) * v * (T(1) + t);
  }
  Var y = Push(std::move(Y), NeedsGrad(x));
  SetBackward(y, [this, x, y, tanh_cache] {
    const Matrix<T>& dY = OutGrad(y.id);
    const Matrix<T>& Xv = value(x);
    Matrix<T>& dX = Grad(x);
    const std::vector<T>& tc = *tanh_cache;
    for (std::size_t i = 0; i < dY.size(); ++i) {
      const T v = Xv.data[i];
      const T t = tc[i];
      const T d = T(0.5) * (T(1) + t) +
                  T(0.5) * v * (T(1) - t * t) * kC * (T(1) + T(3) * kA * v * v);
      dX.data[i] += dY.data[i] * d;
    }
  });
  return y;
}

template <typename T>
Var Tape<T>::Embed(Var table, std::span<const TokenId> ids, T scale) {
  const Matrix<T>& E = value(table);
  Matrix<T> Y(ids.size(), E.cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto id = static_cast<std::size_t>(ids[i]);
    if (ids[i] < 0 || id >= E.rows) {
      throw Error("Embed: token id " + std::to_string(ids[i]) + " out of range");
    }
    const T* er = E.row(id);
    T* yr = Y.row(i);
    for (std::size_t c = 0; c < E.cols; ++c) yr[c] = er[c] * scale;
  }
  Var y = Push(std::move(Y), NeedsGrad(table));
  if (record_ && NeedsGrad(table)) {
    SetBackward(y, [this, table, y, scale, ids = std::vector<TokenId>(ids.begin(), ids.end())] {
      const Matrix<T>& dY = OutGrad(y.id);
      Matrix<T>& dE = Grad(table);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        simd::Kernels<T>().axpy(scale, dY.row(i), dE.row(static_cast<std::size_t>(ids[i])),
                                dY.cols);
      }
    });
  }
  return y;
}

template <typename T>
Var Tape<T>::GatherRows(Var x, std::span<const std::size_t> rows) {
  const Matrix<T>& X = value(x);
  Matrix<T> Y(rows.size(), X.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(X.row(rows[i]), X.cols, Y.row(i));
  }
  Var y = Push(std::move(Y), NeedsGrad(x));
  if (record_ && NeedsGrad(x)) {
    SetBackward(y, [this, x, y, rows = std::vector<std::size_t>(rows.begin(), rows.end())] {
      const Matrix<T>& dY = OutGrad(y.id);
      Matrix<T>& dX = Grad(x);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        T* dx = dX.row(rows[i]);
        const T* g = dY.row(i);
        for (std::size_t c = 0; c < dY.cols; ++c) dx[c] += g[c];
      }
    });
  }
  return y;
}

template <typename T>
Var Tape<T>::Dropout(Var x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw Error("Dropout: probability must be below 1");
  const Matrix<T>& X = value(x);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  std::vector<T> mask(X.size());
  Matrix<T> Y(X.rows, X.cols);
  for (std::size_t i = 0; i < X.size(); ++i) {
    mask[i] = rng.UniformReal() < p ? T(0) : keep_scale;
    Y.data[i] = X.data[i] * mask[i];
  }
  Var y = Push(std::move(Y), NeedsGrad(x));
  if (record_ && NeedsGrad(x)) {
    SetBackward(y, [this, x, y, mask = std::move(mask)] {
      const Matrix<T>& dY = OutGrad(y.id);
      Matrix<T>& dX = Grad(x);
      for (std::size_t i = 0; i < dY.size(); ++i) dX.data[i] += dY.data[i] * mask[i];
    });
  }
  return y;
}

template <typename T>
Var Tape<T>::Attention(const AttentionArgs<T>& a) {
  const Matrix<T>& Q = value(a.q);
  const Matrix<T>& K = value(a.k);
  const Matrix<T>& V = value(a.v);
  if (a.heads == 0 || a.width % a.heads != 0) throw Error("Attention: bad head count");
  if (Q.rows != a.batch * a.q_len || K.rows != a.batch * a.k_len ||
      V.rows != a.batch * a.k_len || a.key_valid.size() != a.batch * a.k_len) {
    throw Error("Attention: shape mismatch");
  }
  if (a.causal && a.q_len != a.k_len) throw Error("Attention: causal needs q_len == k_len");
  const std::size_t dh = a.width / a.heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  const auto& kern = simd::Kernels<T>();

  Matrix<T> Out(a.batch * a.q_len, a.width);
  const std::size_t plane = a.q_len * a.k_len;
  std::vector<T> probs(a.batch * a.heads * plane, T(0));
  std::vector<T> scores(a.k_len);
  for (std::size_t b = 0; b < a.batch; ++b) {
    for (std::size_t h = 0; h < a.heads; ++h) {
      T* P = probs.data() + (b * a.heads + h) * plane;
      for (std::size_t i = 0; i < a.q_len; ++i) {
        const T* qr = Q.row(b * a.q_len + i) + a.q_offset + h * dh;
        const std::size_t jmax = a.causal ? i + 1 : a.k_len;
        T mx = -std::numeric_limits<T>::infinity();
        bool any = false;
        for (std::size_t j = 0; j < jmax; ++j) {
          if (!a.key_valid[b * a.k_len + j]) continue;
          scores[j] = kern.dot(qr, K.row(b * a.k_len + j) + a.k_offset + h * dh, dh) * scale;
          mx = std::max(mx, scores[j]);
          any = true;
        }
        if (!any) continue;
        T* pr = P + i * a.k_len;
        T sum = 0;
        for (std::size_t j = 0; j < jmax; ++j) {
          if (!a.key_valid[b * a.k_len + j]) continue;
          pr[j] = std::exp(scores[j] - mx);
          sum += pr[j];
        }
        const T inv = T(1) / sum;
        T* orow = Out.row(b * a.q_len + i) + h * dh;
        for (std::size_t j = 0; j < jmax; ++j) {
          if (pr[j] == T(0)) continue;
          pr[j] *= inv;
          kern.axpy(pr[j], V.row(b * a.k_len + j) + a.v_offset + h * dh, orow, dh);
        }
      }
    }
  }
  const bool needs = NeedsGrad(a.q) || NeedsGrad(a.k) || NeedsGrad(a.v);
  Var y = Push(std::move(Out), needs);
  if (record_ && needs) {
    AttentionArgs<T> args = a;
    args.key_valid = {};
    SetBackward(y, [this, args, y, dh, scale, plane, probs = std::move(probs)] {
      const auto& kern = simd::Kernels<T>();
      const Matrix<T>& dOut = OutGrad(y.id);
      const Matrix<T>& Qv = value(args.q);
      const Matrix<T>& Kv = value(args.k);
      const Matrix<T>& Vv = value(args.v);
      Matrix<T>* dQ = NeedsGrad(args.q) ? &Grad(args.q) : nullptr;
      Matrix<T>* dK = NeedsGrad(args.k) ? &Grad(args.k) : nullptr;
      Matrix<T>* dV = NeedsGrad(args.v) ? &Grad(args.v) : nullptr;
      std::vector<T> dp(args.k_len);
      for (std::size_t b = 0; b < args.batch; ++b) {
        for (std::size_t h = 0; h < args.heads; ++h) {
          const T* P = probs.data() + (b * args.heads + h) * plane;
          for (std::size_t i = 0; i < args.q_len; ++i) {
            const T* pr = P + i * args.k_len;
            const std::size_t qi = b * args.q_len + i;
            const T* go = dOut.row(qi) + h * dh;
            const std::size_t jmax = args.causal ? i + 1 : args.k_len;
            T dot_sum = 0;
            for (std::size_t j = 0; j < jmax; ++j) {
              if (pr[j] == T(0)) continue;
              dp[j] = kern.dot(go, Vv.row(b * args.k_len + j) + args.v_offset + h * dh, dh);
              dot_sum += pr[j] * dp[j];
            }
            const T* qr = Qv.row(qi) + args.q_offset + h * dh;
            for (std::size_t j = 0; j < jmax; ++j) {
              if (pr[j] == T(0)) continue;
              const std::size_t kj = b * args.k_len + j;
              const T ds = pr[j] * (dp[j] - dot_sum) * scale;
              if (dQ) kern.axpy(ds, Kv.row(kj) + args.k_offset + h * dh,
                                dQ->row(qi) + args.q_offset + h * dh, dh);
              if (dK) kern.axpy(ds, qr, dK->row(kj) + args.k_offset + h * dh, dh);
              if (dV) kern.axpy(pr[j], go, dV->row(kj) + args.v_offset + h * dh, dh);
            }
          }
        }
      }
    });
  }
  return y;
}

template <typename T>
Var Tape<T>::CrossEntropy(Var logits, std::span<const TokenId> targets,
                          std::span<const std::uint8_t> mask, T smoothing, LossStats* stats) {
  const Matrix<T>& Z = value(logits);
  if (targets.size() != Z.rows || mask.size() != Z.rows) {
    throw Error("CrossEntropy: targets/mask do not match logits rows");
  }
  const std::size_t V = Z.cols;
  std::size_t count = 0;
  for (auto m : mask) count += (m != 0);
  double loss_sum = 0.0, nll_sum = 0.0;
  Matrix<T> probs(record_ ? Z.rows : 0, record_ ? V : 0);
  for (std::size_t r = 0; r < Z.rows; ++r) {
    if (!mask[r]) continue;
    const T* z = Z.row(r);
    const auto y = static_cast<std::size_t>(targets[r]);
    if (targets[r] < 0 || y >= V) throw Error("CrossEntropy: target id out of range");
    T mx = z[0];
    for (std::size_t v = 1; v < V; ++v) mx = std::max(mx, z[v]);
    thread_local std::vector<T> e;
    e.resize(V);
    double sum = 0.0, zsum = 0.0;
    for (std::size_t v = 0; v < V; ++v) {
      e[v] = std::exp(z[v] - mx);
      sum += e[v];
      zsum += z[v];
    }
    const double lse = static_cast<double>(mx) + std::log(sum);
    const double nll = lse - z[y];
    const double eps = smoothing;
    nll_sum += nll;
    loss_sum += lse - (1.0 - eps) * z[y] - eps / static_cast<double>(V) * zsum;
    if (record_) {
      T* p = probs.row(r);
      const T inv = static_cast<T>(1.0 / sum);
      for (std::size_t v = 0; v < V; ++v) p[v] = e[v] * inv;
    }
  }
  const double denom = count ? static_cast<double>(count) : 1.0;
  Matrix<T> L(1, 1);
  L.data[0] = static_cast<T>(loss_sum / denom);
  if (stats) {
    stats->loss = loss_sum / denom;
    stats->nll = nll_sum / denom;
    stats->tokens = count;
  }
  Var out = Push(std::move(L), NeedsGrad(logits));
  if (record_ && NeedsGrad(logits)) {
    SetBackward(out, [this, logits, out, smoothing, denom, V, probs = std::move(probs),
                      t = std::vector<TokenId>(targets.begin(), targets.end()),
                      m = std::vector<std::uint8_t>(mask.begin(), mask.end())] {
      const T g = static_cast<T>(OutGrad(out.id).data[0] / denom);
      Matrix<T>& dZ = Grad(logits);
      const T off = smoothing / static_cast<T>(V);
      const T on = T(1) - smoothing + off;
      for (std::size_t r = 0; r < m.size(); ++r) {
        if (!m[r]) continue;
        const T* p = probs.row(r);
        T* d = dZ.row(r);
        const auto y = static_cast<std::size_t>(t[r]);
        for (std::size_t v = 0; v < V; ++v) d[v] += g * (p[v] - (v == y ? on : off));
      }
    });
  }
  return out;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace polymass
