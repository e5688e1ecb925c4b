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

// Shared byte-pair subword vocabulary.
//
// Id layout: 0..4 are the reserved tokens (pad, bos, eos, unk, mask), followed
// by one `<2xx>` target-language tag per language in sorted code order,
// followed by the learned symbols. Word-final symbols carry the `</w>` suffix;
// decoding turns that suffix back into a space.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "polymass/common.hpp"

namespace polymass {

inline constexpr std::string_view kWordEnd = "</w>";
inline constexpr int kVocabFormatVersion = 1;

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr TokenId kMask = 4;
  static constexpr std::size_t kNumReserved = 5;

  using Merge = std::pair<std::string, std::string>;

  Vocabulary() = default;
  // Builds the reserved + tag prefix; `symbols` and `merges` follow it.
  Vocabulary(std::vector<LangCode> langs, std::vector<std::string> symbols,
             std::vector<Merge> merges);

  std::size_t size() const { return pieces_.size(); }
  const std::string& piece(TokenId id) const;
  std::optional<TokenId> Find(std::string_view piece) const;

  const std::vector<LangCode>& languages() const { return langs_; }
  bool HasLanguage(const LangCode& lang) const;
  TokenId Tag(const LangCode& lang) const;
  // First id that is neither reserved nor a language tag.
  TokenId first_regular_id() const {
    return static_cast<TokenId>(kNumReserved + langs_.size());
  }
  bool IsSpecial(TokenId id) const { return id < first_regular_id(); }

  const std::vector<std::string>& pieces() const { return pieces_; }
  const std::vector<Merge>& merges() const { return merges_; }

  // Input is whitespace-normalized first. No bos/eos framing.
  std::vector<TokenId> Encode(std::string_view sentence) const;
  // Throws on ids outside the vocabulary. Special tokens are dropped.
  std::string Decode(std::span<const TokenId> ids) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.pieces_ == b.pieces_ && a.langs_ == b.langs_ &&
           a.merges_ == b.merges_;
  }

 private:
  std::vector<std::string> EncodeWordSymbols(std::string_view word) const;

  std::vector<std::string> pieces_;
  std::vector<LangCode> langs_;
  std::vector<Merge> merges_;
  std::unordered_map<std::string, TokenId> index_;
  std::unordered_map<std::string, std::size_t> merge_rank_;
};

std::string LanguageTag(const LangCode& lang);
std::vector<std::string> ReservedPieces();

// Splits a word into base symbols (UTF-8 code points), marking the last one.
std::vector<std::string> WordSymbols(std::string_view word);

// Greedy byte-pair training over whitespace-split words. Stops at
// `target_size` pieces or when no adjacent pair occurs at least twice. Equal
// pair counts are broken by the lexicographically smaller pair.
Vocabulary TrainVocab(const std::vector<std::string>& texts,
                      std::size_t target_size, std::vector<LangCode> langs);

std::string SerializeVocab(const Vocabulary& v);
Vocabulary ParseVocab(std::string_view text);
void SaveVocab(const Vocabulary& v, const std::string& path);
Vocabulary LoadVocab(const std::string& path);

}  // namespace polymass
