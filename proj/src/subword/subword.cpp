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

#include "polymass/subword.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace polymass {

namespace {

std::size_t Utf8Length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

bool EndsWithWordEnd(std::string_view s) {
  return s.size() >= kWordEnd.size() &&
         s.substr(s.size() - kWordEnd.size()) == kWordEnd;
}

bool IsTagPiece(std::string_view s) {
  return s.size() > 3 && s.substr(0, 2) == "<2" && s.back() == '>';
}

}  // namespace

std::string LanguageTag(const LangCode& lang) { return "<2" + lang + ">"; }

std::vector<std::string> ReservedPieces() {
  return {"<pad>", "<s>", "</s>", "<unk>", "<mask>"};
}

std::vector<std::string> WordSymbols(std::string_view word) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < word.size()) {
    std::size_t n =
        std::min(Utf8Length(static_cast<unsigned char>(word[i])), word.size() - i);
    out.emplace_back(word.substr(i, n));
    i += n;
  }
  if (!out.empty()) out.back() += kWordEnd;
  return out;
}

Vocabulary::Vocabulary(std::vector<LangCode> langs,
                       std::vector<std::string> symbols,
                       std::vector<Merge> merges)
    : langs_(std::move(langs)), merges_(std::move(merges)) {
  std::sort(langs_.begin(), langs_.end());
  if (std::adjacent_find(langs_.begin(), langs_.end()) != langs_.end()) {
    throw Error("duplicate language code in vocabulary");
  }
  pieces_ = ReservedPieces();
  for (const auto& l : langs_) {
    if (l.empty() || l.find_first_of(" \t\n<>") != std::string::npos) {
      throw Error("invalid language code '" + l + "'");
    }
    pieces_.push_back(LanguageTag(l));
  }
  for (auto& s : symbols) pieces_.push_back(std::move(s));
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    auto [it, inserted] = index_.emplace(pieces_[i], static_cast<TokenId>(i));
    if (!inserted) throw Error("duplicate vocabulary piece '" + pieces_[i] + "'");
  }
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    merge_rank_.emplace(merges_[r].first + '\0' + merges_[r].second, r);
  }
}

const std::string& Vocabulary::piece(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
    throw Error("token id " + std::to_string(id) + " out of range for vocabulary of size " +
                std::to_string(pieces_.size()));
  }
  return pieces_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::Find(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::HasLanguage(const LangCode& lang) const {
  return std::binary_search(langs_.begin(), langs_.end(), lang);
}

TokenId Vocabulary::Tag(const LangCode& lang) const {
  auto it = std::lower_bound(langs_.begin(), langs_.end(), lang);
  if (it == langs_.end() || *it != lang) {
    throw Error("language '" + lang + "' has no tag in this vocabulary");
  }
  return static_cast<TokenId>(kNumReserved + (it - langs_.begin()));
}

std::vector<std::string> Vocabulary::EncodeWordSymbols(std::string_view word) const {
  std::vector<std::string> syms = WordSymbols(word);
  while (syms.size() > 1) {
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      auto it = merge_rank_.find(syms[i] + '\0' + syms[i + 1]);
      if (it != merge_rank_.end()) best_rank = std::min(best_rank, it->second);
    }
    if (best_rank == std::numeric_limits<std::size_t>::max()) break;
    const Merge& m = merges_[best_rank];
    std::vector<std::string> next;
    next.reserve(syms.size());
    for (std::size_t i = 0; i < syms.size(); ++i) {
      if (i + 1 < syms.size() && syms[i] == m.first && syms[i + 1] == m.second) {
        next.push_back(syms[i] + syms[i + 1]);
        ++i;
      } else {
        next.push_back(std::move(syms[i]));
      }
    }
    syms = std::move(next);
  }
  return syms;
}

std::vector<TokenId> Vocabulary::Encode(std::string_view sentence) const {
  std::vector<TokenId> ids;
  for (const auto& word : SplitWhitespace(sentence)) {
    for (const auto& sym : EncodeWordSymbols(word)) {
      auto it = index_.find(sym);
      ids.push_back(it == index_.end() ? kUnk : it->second);
    }
  }
  return ids;
}

std::string Vocabulary::Decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    const std::string& p = piece(id);
    if (IsSpecial(id)) continue;
    if (EndsWithWordEnd(p)) {
      out.append(p, 0, p.size() - kWordEnd.size());
      out.push_back(' ');
    } else {
      out += p;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

Vocabulary TrainVocab(const std::vector<std::string>& texts,
                      std::size_t target_size, std::vector<LangCode> langs) {
  if (texts.empty()) throw Error("TrainVocab: empty corpus");
  std::sort(langs.begin(), langs.end());

  std::map<std::string, std::int64_t> word_counts;
  for (const auto& t : texts) {
    for (auto& w : SplitWhitespace(t)) ++word_counts[w];
  }
  if (word_counts.empty()) throw Error("TrainVocab: corpus contains no words");

  // Symbols are interned; `names` maps symbol id -> string.
  std::vector<std::string> names;
  std::unordered_map<std::string, int> sym_id;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = sym_id.emplace(s, static_cast<int>(names.size()));
    if (inserted) names.push_back(s);
    return it->second;
  };

  struct Word {
    std::vector<int> syms;
    std::int64_t count;
  };
  std::vector<Word> words;
  std::set<std::string> base;
  for (const auto& [w, c] : word_counts) {
    Word word{{}, c};
    for (const auto& s : WordSymbols(w)) {
      word.syms.push_back(intern(s));
      base.insert(s);
    }
    words.push_back(std::move(word));
  }

  const std::size_t min_size = Vocabulary::kNumReserved + langs.size() + base.size();
  if (target_size < min_size) {
    throw Error("TrainVocab: target size " + std::to_string(target_size) +
                " is below the minimum feasible size " + std::to_string(min_size) +
                " (5 reserved + " + std::to_string(langs.size()) + " tags + " +
                std::to_string(base.size()) + " base symbols)");
  }

  std::vector<std::string> symbols(base.begin(), base.end());
  std::set<std::string> known(base.begin(), base.end());
  for (const auto& l : langs) known.insert(LanguageTag(l));
  for (const auto& r : ReservedPieces()) known.insert(r);
  std::vector<Vocabulary::Merge> merges;

  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  };

  std::unordered_map<std::uint64_t, std::int64_t> pair_counts;
  while (Vocabulary::kNumReserved + langs.size() + symbols.size() < target_size) {
    pair_counts.clear();
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
        pair_counts[key(w.syms[i], w.syms[i + 1])] += w.count;
      }
    }
    std::int64_t best_count = 0;
    int best_a = -1, best_b = -1;
    for (const auto& [k, c] : pair_counts) {
      const int a = static_cast<int>(k >> 32);
      const int b = static_cast<int>(k & 0xffffffffu);
      if (c > best_count ||
          (c == best_count &&
           std::tie(names[a], names[b]) < std::tie(names[best_a], names[best_b]))) {
        best_count = c;
        best_a = a;
        best_b = b;
      }
    }
    if (best_count < 2) break;

    merges.emplace_back(names[best_a], names[best_b]);
    const std::string merged = names[best_a] + names[best_b];
    const int merged_id = intern(merged);
    if (known.insert(merged).second) symbols.push_back(merged);

    for (auto& w : words) {
      if (w.syms.size() < 2) continue;
      std::vector<int> next;
      next.reserve(w.syms.size());
      for (std::size_t i = 0; i < w.syms.size(); ++i) {
        if (i + 1 < w.syms.size() && w.syms[i] == best_a && w.syms[i + 1] == best_b) {
          next.push_back(merged_id);
          ++i;
        } else {
          next.push_back(w.syms[i]);
        }
      }
      w.syms = std::move(next);
    }
  }
  return Vocabulary(std::move(langs), std::move(symbols), std::move(merges));
}

std::string SerializeVocab(const Vocabulary& v) {
  std::ostringstream os;
  os << "polymass-vocab " << kVocabFormatVersion << ' ' << v.size() << ' '
     << v.languages().size() << ' ' << v.merges().size() << '\n';
  os << "[pieces]\n";
  for (const auto& p : v.pieces()) os << p << '\n';
  os << "[merges]\n";
  for (const auto& [a, b] : v.merges()) os << a << ' ' << b << '\n';
  return os.str();
}

Vocabulary ParseVocab(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      lines.emplace_back(text.substr(start, end - start));
      start = end + 1;
    }
  }
  auto fail = [](std::size_t line, const std::string& what) -> Error {
    return Error("vocabulary file line " + std::to_string(line) + ": " + what);
  };
  if (lines.empty()) throw fail(1, "missing header");

  std::istringstream header(lines[0]);
  std::string magic;
  long version = -1, n_pieces = -1, n_tags = -1, n_merges = -1;
  header >> magic >> version;
  if (magic != "polymass-vocab" || !header) throw fail(1, "not a polymass vocabulary header");
  if (version != kVocabFormatVersion) {
    throw fail(1, "unsupported vocabulary version " + std::to_string(version) +
                      " (this build reads version " +
                      std::to_string(kVocabFormatVersion) + ")");
  }
  header >> n_pieces >> n_tags >> n_merges;
  if (!header || n_pieces < 0 || n_tags < 0 || n_merges < 0 ||
      static_cast<std::size_t>(n_pieces) < Vocabulary::kNumReserved + n_tags) {
    throw fail(1, "malformed counts in header");
  }

  std::size_t ln = 1;
  if (ln >= lines.size() || lines[ln] != "[pieces]") {
    throw fail(ln + 1, "missing section [pieces]");
  }
  ++ln;
  std::vector<std::string> pieces;
  for (long i = 0; i < n_pieces; ++i, ++ln) {
    if (ln >= lines.size() || lines[ln] == "[merges]") {
      throw fail(ln + 1, "truncated section [pieces]: expected " +
                             std::to_string(n_pieces) + " pieces, found " +
                             std::to_string(i));
    }
    if (lines[ln].empty() || lines[ln].find(' ') != std::string::npos) {
      throw fail(ln + 1, "invalid piece '" + lines[ln] + "'");
    }
    pieces.push_back(lines[ln]);
  }
  if (ln >= lines.size() || lines[ln] != "[merges]") {
    throw fail(ln + 1, "missing section [merges]");
  }
  ++ln;
  std::vector<Vocabulary::Merge> merges;
  for (long i = 0; i < n_merges; ++i, ++ln) {
    if (ln >= lines.size()) {
      throw fail(ln + 1, "truncated section [merges]: expected " +
                             std::to_string(n_merges) + " merges, found " +
                             std::to_string(i));
    }
    const auto parts = SplitWhitespace(lines[ln]);
    if (parts.size() != 2) throw fail(ln + 1, "merge must have two symbols");
    merges.emplace_back(parts[0], parts[1]);
  }
  for (; ln < lines.size(); ++ln) {
    if (!lines[ln].empty()) throw fail(ln + 1, "unexpected trailing content");
  }

  const auto reserved = ReservedPieces();
  for (std::size_t i = 0; i < reserved.size(); ++i) {
    if (pieces[i] != reserved[i]) {
      throw fail(3 + i, "expected reserved piece '" + reserved[i] + "'");
    }
  }
  std::vector<LangCode> langs;
  for (long i = 0; i < n_tags; ++i) {
    const std::string& p = pieces[Vocabulary::kNumReserved + i];
    if (!IsTagPiece(p)) {
      throw fail(3 + Vocabulary::kNumReserved + i, "expected language tag, got '" + p + "'");
    }
    langs.push_back(p.substr(2, p.size() - 3));
  }
  if (!std::is_sorted(langs.begin(), langs.end())) {
    throw fail(3 + Vocabulary::kNumReserved, "language tags are not in sorted order");
  }
  std::vector<std::string> symbols(pieces.begin() + Vocabulary::kNumReserved + n_tags,
                                   pieces.end());
  return Vocabulary(std::move(langs), std::move(symbols), std::move(merges));
}

void SaveVocab(const Vocabulary& v, const std::string& path) {
  WriteFile(path, SerializeVocab(v));
}

Vocabulary LoadVocab(const std::string& path) { return ParseVocab(ReadFile(path)); }

}  // namespace polymass
