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

// Dense inner-loop kernels with a scalar reference path and vectorized
// variants chosen once per process from the host CPU.
//
// All matrices are row-major. Every kernel accumulates each output element
// over the reduction index in increasing order, so results for one row never
// depend on how many other rows are in the call.

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace polymass::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view IsaName(Isa isa);

template <typename T>
struct KernelTable {
  Isa isa = Isa::kScalar;
  // C[m,n] = A[m,k] * B[k,n], or C += A*B when `accumulate`.
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const T* a,
                  std::size_t lda, const T* b, std::size_t ldb, T* c,
                  std::size_t ldc, bool accumulate) = nullptr;
  T (*dot)(const T* x, const T* y, std::size_t n) = nullptr;
  // y += alpha * x
  void (*axpy)(T alpha, const T* x, T* y, std::size_t n) = nullptr;
};

KernelTable<float> ScalarKernelsF32();
KernelTable<double> ScalarKernelsF64();

// Empty optional-style tables (isa == kScalar, null pointers) when the build
// has no AVX2 variant.
bool Avx2Compiled();
KernelTable<float> Avx2KernelsF32();
KernelTable<double> Avx2KernelsF64();

bool CpuSupportsAvx2();

// The process-wide selection. Honors POLYMASS_ISA=scalar|avx2 when set.
Isa ActiveIsa();
// Overrides the selection; used by equivalence tests and benchmarks.
void SetActiveIsa(Isa isa);

template <typename T>
const KernelTable<T>& Kernels();

// C = op(A) * op(B) (+ C). op(X) is X or X^T. Transposed operands are packed
// into a scratch buffer and fed to the NN kernel.
//   m, n: shape of C; k: shared dimension.
//   lda/ldb are the leading dimensions of A and B as stored.
template <typename T>
void Gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, const T* a, std::size_t lda, const T* b,
          std::size_t ldb, T* c, std::size_t ldc, bool accumulate);

}  // namespace polymass::simd
