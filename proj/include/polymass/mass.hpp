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

// MASS example construction: one contiguous fragment of a monolingual
// sentence is corrupted on the encoder side and becomes the decoder's target.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "polymass/batch.hpp"
#include "polymass/common.hpp"
#include "polymass/subword.hpp"

namespace polymass {

struct MaskSpec {
  double fragment_ratio = 0.5;
  double mask_prob = 0.8;
  double random_prob = 0.1;
  double keep_prob = 0.1;
  std::size_t min_len = 2;
  // Decoder positions are the fragment's original positions u..u+k-1;
  // off means 0..k-1.
  bool absolute_positions = true;

  void Validate() const;
};

struct Span {
  std::size_t start = 0;
  std::size_t length = 0;
};

enum class Corruption { kMask, kRandom, kKeep };

std::size_t FragmentLength(std::size_t m, const MaskSpec& spec);
// Throws when m < spec.min_len; callers resample such sentences.
Span SampleSpan(std::size_t m, const MaskSpec& spec, Rng& rng);
Corruption SampleCorruption(const MaskSpec& spec, Rng& rng);

// Builds the example for a fixed span. `corruption` (optional) receives the
// per-position choice for the k fragment positions.
TrainingExample BuildMassExampleAt(std::span<const TokenId> tokens, Span span,
                                   const LangCode& lang, const MaskSpec& spec,
                                   const Vocabulary& vocab, Rng& rng,
                                   std::vector<Corruption>* corruption = nullptr);

TrainingExample BuildMassExample(std::span<const TokenId> tokens, const LangCode& lang,
                                 const MaskSpec& spec, const Vocabulary& vocab, Rng& rng,
                                 std::vector<Corruption>* corruption = nullptr);

}  // namespace polymass
