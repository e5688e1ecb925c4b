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

// Shared fixtures for the unit tests.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "polymass/batch.hpp"
#include "polymass/common.hpp"
#include "polymass/mass.hpp"
#include "polymass/model.hpp"
#include "polymass/subword.hpp"

namespace polymass::testing {

// Fresh empty directory under the system temp dir.
inline std::string TempDir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("polymass_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

// A vocabulary of single letters plus a few merges, for two languages.
inline Vocabulary LetterVocab(std::vector<LangCode> langs = {"aa", "bb"}) {
  std::vector<std::string> symbols;
  for (char c = 'a'; c <= 'z'; ++c) {
    symbols.push_back(std::string(1, c));
    symbols.push_back(std::string(1, c) + "</w>");
  }
  return Vocabulary(std::move(langs), symbols, {});
}

inline std::vector<TokenId> RandomTokens(Rng& rng, std::size_t len, TokenId lo, TokenId hi) {
  std::vector<TokenId> out(len);
  for (auto& t : out) t = static_cast<TokenId>(lo + rng.UniformInt(static_cast<std::uint64_t>(hi - lo)));
  return out;
}

// Translation batch of `rows` rows with varied lengths in [2, max_len].
inline Batch RandomTranslationBatch(const Vocabulary& v, std::size_t rows, std::size_t max_len,
                                    std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainingExample> ex;
  const TokenId lo = v.first_regular_id();
  const TokenId hi = static_cast<TokenId>(v.size());
  for (std::size_t r = 0; r < rows; ++r) {
    auto ls = 2 + rng.UniformInt(max_len - 1);
    auto lt = 2 + rng.UniformInt(max_len - 1);
    ex.push_back(MakeTranslationExample(RandomTokens(rng, ls, lo, hi), RandomTokens(rng, lt, lo, hi),
                                        v.Tag(v.languages().back())));
  }
  return MakeBatch(ex, Objective::kTranslation, v.languages().front() + "-" + v.languages().back());
}

inline Batch RandomMassBatch(const Vocabulary& v, std::size_t rows, std::size_t max_len,
                             std::uint64_t seed) {
  Rng rng(seed);
  MaskSpec spec;
  std::vector<TrainingExample> ex;
  const LangCode lang = v.languages().front();
  for (std::size_t r = 0; r < rows; ++r) {
    auto m = 2 + rng.UniformInt(max_len - 1);
    auto toks = RandomTokens(rng, m, v.first_regular_id(), static_cast<TokenId>(v.size()));
    ex.push_back(BuildMassExample(toks, lang, spec, v, rng));
  }
  return MakeBatch(ex, Objective::kMass, lang);
}

inline ModelConfig TinyConfig(std::size_t vocab_size) {
  ModelConfig c;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_model = 16;
  c.d_ff = 32;
  c.vocab_size = vocab_size;
  c.max_positions = 64;
  return c;
}

}  // namespace polymass::testing
