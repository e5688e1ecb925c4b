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

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polymass {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using TokenId = std::int32_t;
using LangCode = std::string;

// Collapses whitespace runs to one space and trims both ends.
std::string NormalizeWhitespace(std::string_view s);
std::vector<std::string> SplitWhitespace(std::string_view s);
std::string JoinWords(const std::vector<std::string>& words);

// Seeded random source with a serializable state. Draw helpers are written
// out here instead of using <random> distributions so that streams do not
// depend on the standard library's distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  // Uniform on [0, n). n must be > 0.
  std::uint64_t UniformInt(std::uint64_t n);
  // Uniform on [0, 1) with 53 random bits.
  double UniformReal();
  bool Bernoulli(double p) { return UniformReal() < p; }

  std::string SaveState() const;
  void LoadState(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_;
  }

 private:
  std::mt19937_64 engine_;
};

// Splits a seed into independent-looking child seeds (splitmix64 finalizer).
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream);

// 64-bit FNV-1a.
std::uint64_t Fnv1a64(std::string_view bytes);

std::vector<std::string> ReadLines(const std::string& path);
void WriteLines(const std::string& path, const std::vector<std::string>& lines);
std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, std::string_view content);

}  // namespace polymass
