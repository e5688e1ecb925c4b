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

// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma
// and must only be entered after CpuSupportsAvx2() returned true.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "polymass/simd/kernels.hpp"

namespace polymass::simd {
namespace {

struct F32x8 {
  using Scalar = float;
  using Reg = __m256;
  static constexpr std::size_t kWidth = 8;
  static Reg Zero() { return _mm256_setzero_ps(); }
  static Reg Set1(float v) { return _mm256_set1_ps(v); }
  static Reg Load(const float* p) { return _mm256_loadu_ps(p); }
  static void Store(float* p, Reg v) { _mm256_storeu_ps(p, v); }
  static Reg Add(Reg a, Reg b) { return _mm256_add_ps(a, b); }
  static Reg Fma(Reg a, Reg b, Reg c) { return _mm256_fmadd_ps(a, b, c); }
  static float Sum(Reg v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehdup_ps(lo);
    __m128 s = _mm_add_ps(lo, sh);
    sh = _mm_movehl_ps(sh, s);
    s = _mm_add_ss(s, sh);
    return _mm_cvtss_f32(s);
  }
};

struct F64x4 {
  using Scalar = double;
  using Reg = __m256d;
  static constexpr std::size_t kWidth = 4;
  static Reg Zero() { return _mm256_setzero_pd(); }
  static Reg Set1(double v) { return _mm256_set1_pd(v); }
  static Reg Load(const double* p) { return _mm256_loadu_pd(p); }
  static void Store(double* p, Reg v) { _mm256_storeu_pd(p, v); }
  static Reg Add(Reg a, Reg b) { return _mm256_add_pd(a, b); }
  static Reg Fma(Reg a, Reg b, Reg c) { return _mm256_fmadd_pd(a, b, c); }
  static double Sum(Reg v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d h = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, h));
  }
};

// Register-blocked NN product: 6 rows x 2 vectors of C are held in registers
// while the shared dimension is streamed. Row and column tails use the same
// fused multiply-add order, so every C element sees an identical sequence of
// operations whichever block it falls in.
template <typename V>
void GemmNN(std::size_t m, std::size_t n, std::size_t k,
            const typename V::Scalar* a, std::size_t lda,
            const typename V::Scalar* b, std::size_t ldb,
            typename V::Scalar* c, std::size_t ldc, bool accumulate) {
  using T = typename V::Scalar;
  using Reg = typename V::Reg;
  constexpr std::size_t W = V::kWidth;
  constexpr std::size_t kRows = 6;
  constexpr std::size_t kCols = 2 * W;

  std::size_t j = 0;
  for (; j + kCols <= n; j += kCols) {
    std::size_t i = 0;
    for (; i + kRows <= m; i += kRows) {
      Reg acc[kRows][2];
      for (std::size_t r = 0; r < kRows; ++r) {
        if (accumulate) {
          acc[r][0] = V::Load(c + (i + r) * ldc + j);
          acc[r][1] = V::Load(c + (i + r) * ldc + j + W);
        } else {
          acc[r][0] = V::Zero();
          acc[r][1] = V::Zero();
        }
      }
      const T* a0 = a + i * lda;
      for (std::size_t p = 0; p < k; ++p) {
        const Reg b0 = V::Load(b + p * ldb + j);
        const Reg b1 = V::Load(b + p * ldb + j + W);
        for (std::size_t r = 0; r < kRows; ++r) {
          const Reg av = V::Set1(a0[r * lda + p]);
          acc[r][0] = V::Fma(av, b0, acc[r][0]);
          acc[r][1] = V::Fma(av, b1, acc[r][1]);
        }
      }
      for (std::size_t r = 0; r < kRows; ++r) {
        V::Store(c + (i + r) * ldc + j, acc[r][0]);
        V::Store(c + (i + r) * ldc + j + W, acc[r][1]);
      }
    }
    for (; i < m; ++i) {
      Reg acc0 = accumulate ? V::Load(c + i * ldc + j) : V::Zero();
      Reg acc1 = accumulate ? V::Load(c + i * ldc + j + W) : V::Zero();
      const T* arow = a + i * lda;
      for (std::size_t p = 0; p < k; ++p) {
        const Reg av = V::Set1(arow[p]);
        acc0 = V::Fma(av, V::Load(b + p * ldb + j), acc0);
        acc1 = V::Fma(av, V::Load(b + p * ldb + j + W), acc1);
      }
      V::Store(c + i * ldc + j, acc0);
      V::Store(c + i * ldc + j + W, acc1);
    }
  }
  for (; j + W <= n; j += W) {
    for (std::size_t i = 0; i < m; ++i) {
      Reg acc = accumulate ? V::Load(c + i * ldc + j) : V::Zero();
      const T* arow = a + i * lda;
      for (std::size_t p = 0; p < k; ++p) {
        acc = V::Fma(V::Set1(arow[p]), V::Load(b + p * ldb + j), acc);
      }
      V::Store(c + i * ldc + j, acc);
    }
  }
  for (; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      T acc = accumulate ? c[i * ldc + j] : T(0);
      const T* arow = a + i * lda;
      for (std::size_t p = 0; p < k; ++p) {
        acc = std::fma(arow[p], b[p * ldb + j], acc);
      }
      c[i * ldc + j] = acc;
    }
  }
}

template <typename V>
typename V::Scalar Dot(const typename V::Scalar* x,
                       const typename V::Scalar* y, std::size_t n) {
  using T = typename V::Scalar;
  constexpr std::size_t W = V::kWidth;
  typename V::Reg acc0 = V::Zero();
  typename V::Reg acc1 = V::Zero();
  std::size_t i = 0;
  for (; i + 2 * W <= n; i += 2 * W) {
    acc0 = V::Fma(V::Load(x + i), V::Load(y + i), acc0);
    acc1 = V::Fma(V::Load(x + i + W), V::Load(y + i + W), acc1);
  }
  for (; i + W <= n; i += W) {
    acc0 = V::Fma(V::Load(x + i), V::Load(y + i), acc0);
  }
  T s = V::Sum(V::Add(acc0, acc1));
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

template <typename V>
void Axpy(typename V::Scalar alpha, const typename V::Scalar* x,
          typename V::Scalar* y, std::size_t n) {
  constexpr std::size_t W = V::kWidth;
  const typename V::Reg av = V::Set1(alpha);
  std::size_t i = 0;
  for (; i + W <= n; i += W) {
    V::Store(y + i, V::Fma(av, V::Load(x + i), V::Load(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

template <typename V>
KernelTable<typename V::Scalar> MakeAvx2() {
  KernelTable<typename V::Scalar> t;
  t.isa = Isa::kAvx2;
  t.gemm_nn = &GemmNN<V>;
  t.dot = &Dot<V>;
  t.axpy = &Axpy<V>;
  return t;
}

}  // namespace

bool Avx2Compiled() { return true; }
KernelTable<float> Avx2KernelsF32() { return MakeAvx2<F32x8>(); }
KernelTable<double> Avx2KernelsF64() { return MakeAvx2<F64x4>(); }

}  // namespace polymass::simd
