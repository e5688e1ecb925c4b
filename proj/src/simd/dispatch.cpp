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

#include <atomic>
#include <cstdlib>
#include <string>

#include "polymass/simd/kernels.hpp"

namespace polymass::simd {

#ifndef POLYMASS_HAVE_AVX2
bool Avx2Compiled() { return false; }
KernelTable<float> Avx2KernelsF32() { return {}; }
KernelTable<double> Avx2KernelsF64() { return {}; }
#endif

std::string_view IsaName(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool CpuSupportsAvx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

Isa DetectIsa() {
  const bool avx2_ok = Avx2Compiled() && CpuSupportsAvx2();
  if (const char* env = std::getenv("POLYMASS_ISA")) {
    const std::string want(env);
    if (want == "scalar") return Isa::kScalar;
    if (want == "avx2" && avx2_ok) return Isa::kAvx2;
  }
  return avx2_ok ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<Isa>& Selected() {
  static std::atomic<Isa> isa{DetectIsa()};
  return isa;
}

template <typename T>
struct Tables {
  KernelTable<T> scalar;
  KernelTable<T> avx2;
};

const Tables<float>& TablesF32() {
  static const Tables<float> t{ScalarKernelsF32(), Avx2KernelsF32()};
  return t;
}

const Tables<double>& TablesF64() {
  static const Tables<double> t{ScalarKernelsF64(), Avx2KernelsF64()};
  return t;
}

}  // namespace

Isa ActiveIsa() { return Selected().load(std::memory_order_relaxed); }

void SetActiveIsa(Isa isa) {
  if (isa == Isa::kAvx2 && !(Avx2Compiled() && CpuSupportsAvx2())) {
    isa = Isa::kScalar;
  }
  Selected().store(isa, std::memory_order_relaxed);
}

template <>
const KernelTable<float>& Kernels<float>() {
  const auto& t = TablesF32();
  return ActiveIsa() == Isa::kAvx2 ? t.avx2 : t.scalar;
}

template <>
const KernelTable<double>& Kernels<double>() {
  const auto& t = TablesF64();
  return ActiveIsa() == Isa::kAvx2 ? t.avx2 : t.scalar;
}

template <typename T>
void Gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, const T* a, std::size_t lda, const T* b,
          std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
  thread_local std::vector<T> pack_a;
  thread_local std::vector<T> pack_b;
  if (trans_a) {
    // stored as k x m
    pack_a.resize(m * k);
    for (std::size_t p = 0; p < k; ++p) {
      for (std::size_t i = 0; i < m; ++i) pack_a[i * k + p] = a[p * lda + i];
    }
    a = pack_a.data();
    lda = k;
  }
  if (trans_b) {
    // stored as n x k
    pack_b.resize(k * n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t p = 0; p < k; ++p) pack_b[p * n + j] = b[j * ldb + p];
    }
    b = pack_b.data();
    ldb = n;
  }
  Kernels<T>().gemm_nn(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

template void Gemm<float>(bool, bool, std::size_t, std::size_t, std::size_t,
                          const float*, std::size_t, const float*, std::size_t,
                          float*, std::size_t, bool);
template void Gemm<double>(bool, bool, std::size_t, std::size_t, std::size_t,
                           const double*, std::size_t, const double*,
                           std::size_t, double*, std::size_t, bool);

}  // namespace polymass::simd
