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

// Training rows and padded batches shared by the sampler, the MASS builder
// and the model.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "polymass/common.hpp"

namespace polymass {

enum class Objective { kTranslation, kMass };

const char* ObjectiveName(Objective o);

// One framed row. enc = [<2tgt>] + source + [eos]; dec_in = [bos] + prefix of
// the target; target is what the decoder must emit at each position.
struct TrainingExample {
  std::vector<TokenId> enc;
  std::vector<TokenId> dec_in;
  std::vector<TokenId> target;
  std::vector<std::int32_t> enc_pos;
  std::vector<std::int32_t> dec_pos;
  std::vector<std::uint8_t> loss_mask;
  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

// Row-major matrices padded with the pad id (0), zero positions and zero
// loss mask.
struct Batch {
  Objective objective = Objective::kTranslation;
  // "src-tgt" for translation batches, the language code for MASS batches.
  std::string label;
  std::size_t rows = 0;
  std::size_t enc_len = 0;
  std::size_t dec_len = 0;
  std::vector<TokenId> enc_ids;
  std::vector<TokenId> dec_in_ids;
  std::vector<TokenId> target_ids;
  std::vector<std::int32_t> enc_pos;
  std::vector<std::int32_t> dec_pos;
  std::vector<std::uint8_t> loss_mask;

  TokenId enc(std::size_t r, std::size_t t) const { return enc_ids[r * enc_len + t]; }
  TokenId target(std::size_t r, std::size_t t) const { return target_ids[r * dec_len + t]; }
  std::size_t LossTokens() const;
  friend bool operator==(const Batch&, const Batch&) = default;
};

Batch MakeBatch(const std::vector<TrainingExample>& rows, Objective objective,
                std::string label);

// Frames a translation pair. Positions are 0-based on both sides.
TrainingExample MakeTranslationExample(const std::vector<TokenId>& src,
                                       const std::vector<TokenId>& tgt,
                                       TokenId target_tag);

// Reorders rows; used by equivariance tests.
Batch PermuteRows(const Batch& b, const std::vector<std::size_t>& order);
// Appends `extra` pad columns to the encoder and decoder sides.
Batch PadColumns(const Batch& b, std::size_t extra_enc, std::size_t extra_dec);

}  // namespace polymass
