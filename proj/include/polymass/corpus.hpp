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

// Parallel and monolingual text stores, the registry that exposes their
// sizes to the sampler, and the synthetic cipher-language generator.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polymass/common.hpp"

namespace polymass {

struct SentencePair {
  std::string src;
  std::string tgt;
  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

struct ParallelStore {
  LangCode src_lang;
  LangCode tgt_lang;
  std::vector<SentencePair> pairs;

  std::size_t size() const { return pairs.size(); }
  std::string name() const { return src_lang + "-" + tgt_lang; }
  friend bool operator==(const ParallelStore&, const ParallelStore&) = default;
};

struct MonoStore {
  LangCode lang;
  std::vector<std::string> sentences;

  std::size_t size() const { return sentences.size(); }
  friend bool operator==(const MonoStore&, const MonoStore&) = default;
};

struct LoadReport {
  std::size_t lines = 0;
  std::size_t kept = 0;
  std::size_t dropped_empty = 0;
  std::size_t dropped_too_long = 0;
  std::size_t truncated = 0;
};

// Lines are whitespace-normalized. Pairs with an empty side or with more than
// `max_len` whitespace tokens on either side are dropped.
ParallelStore MakeParallel(const std::vector<std::string>& src_lines,
                           const std::vector<std::string>& tgt_lines,
                           LangCode src_lang, LangCode tgt_lang,
                           std::size_t max_len, LoadReport* report = nullptr);
ParallelStore LoadParallel(const std::string& src_path, const std::string& tgt_path,
                           LangCode src_lang, LangCode tgt_lang,
                           std::size_t max_len, LoadReport* report = nullptr);

// Empty lines are dropped; longer sentences are cut to `max_len` words.
// Duplicates are kept.
MonoStore MakeMono(const std::vector<std::string>& lines, LangCode lang,
                   std::size_t max_len, LoadReport* report = nullptr);
MonoStore LoadMono(const std::string& path, LangCode lang, std::size_t max_len,
                   LoadReport* report = nullptr);

struct StoreCount {
  std::string store;
  std::string kind;  // "parallel" or "mono"
  std::size_t count = 0;
  friend bool operator==(const StoreCount&, const StoreCount&) = default;
};

using LangPair = std::pair<LangCode, LangCode>;

class CorpusRegistry {
 public:
  void AddParallel(ParallelStore store);
  void AddMono(MonoStore store);
  // Returns the removed store, if any.
  std::optional<ParallelStore> RemoveParallel(const LangPair& key);

  const std::map<LangPair, ParallelStore>& parallel() const { return parallel_; }
  const std::map<LangCode, MonoStore>& mono() const { return mono_; }
  bool empty() const { return parallel_.empty() && mono_.empty(); }

  // Every language that appears in any store, sorted.
  std::vector<LangCode> Languages() const;

  friend bool operator==(const CorpusRegistry&, const CorpusRegistry&) = default;

 private:
  std::map<LangPair, ParallelStore> parallel_;
  std::map<LangCode, MonoStore> mono_;
};

// Parallel rows first (sorted by pair), then mono rows (sorted by language).
// Counts are read from the stores on every call.
std::vector<StoreCount> RegistryStats(const CorpusRegistry& registry);
std::string RegistryStatsJson(const CorpusRegistry& registry);

// Registry description file (JSON):
//   {"max_len": N,
//    "parallel": [{"src_lang", "tgt_lang", "src", "tgt"}],
//    "mono": [{"lang", "path"}]}
// Relative paths resolve against the file's directory.
CorpusRegistry LoadRegistryConfig(const std::string& path);

// ---------------------------------------------------------------------------
// Synthetic cipher languages

struct Reorder {
  enum class Kind { kNone, kReverseWindow, kAdjacentSwap };
  Kind kind = Kind::kNone;
  // Window for kReverseWindow; 0 means the whole sentence.
  std::size_t window = 0;

  static Reorder None() { return {}; }
  static Reorder ReverseWindow(std::size_t w) { return {Kind::kReverseWindow, w}; }
  static Reorder AdjacentSwap() { return {Kind::kAdjacentSwap, 0}; }
  friend bool operator==(const Reorder&, const Reorder&) = default;
};

// perm[i] is the input position that lands at output position i.
std::vector<std::size_t> ReorderPermutation(const Reorder& r, std::size_t n);
std::string ReorderToString(const Reorder& r);
Reorder ParseReorder(const std::string& s);

struct CipherSpec {
  LangCode lang;
  std::uint64_t lexicon_seed = 0;
  // Fraction of base-word entries that reuse the relative language's word.
  double shared_fraction = 0.0;
  std::optional<LangCode> relative;
  // Cipher words equal the base words.
  bool identity_lexicon = false;
  Reorder reorder;
};

// Deterministic base-language word list, a pure function of its size.
std::vector<std::string> BaseLexicon(std::size_t vocab_size);

class CipherLanguage {
 public:
  // `relative` must be given when spec.shared_fraction > 0.
  CipherLanguage(CipherSpec spec, std::size_t base_vocab_size,
                 const CipherLanguage* relative = nullptr);

  const CipherSpec& spec() const { return spec_; }
  const std::vector<std::string>& words() const { return words_; }

  std::string Encipher(const std::vector<std::size_t>& base_indices) const;
  // Inverse of Encipher; throws on words outside the lexicon.
  std::vector<std::size_t> Decipher(const std::string& sentence) const;

 private:
  CipherSpec spec_;
  std::vector<std::string> words_;
  std::map<std::string, std::size_t> inverse_;
};

struct GeneratorConfig {
  std::size_t base_vocab_size = 100;
  double zipf_s = 1.0;
  std::size_t len_min = 3;
  std::size_t len_max = 12;
  // Probability that a token is drawn from its predecessor's successor list
  // instead of the Zipf marginal. 0 gives i.i.d. tokens.
  double context_strength = 0.0;
  std::size_t successors_per_word = 4;
  std::uint64_t grammar_seed = 7;
};

// Draws base sentences as word indices. Index r has Zipf weight 1/(r+1)^s.
class BaseSentenceGenerator {
 public:
  explicit BaseSentenceGenerator(GeneratorConfig config);

  const GeneratorConfig& config() const { return config_; }
  std::vector<std::size_t> Sample(Rng& rng) const;
  std::size_t SampleZipf(Rng& rng) const;

 private:
  GeneratorConfig config_;
  std::vector<double> cdf_;
  std::vector<std::vector<std::size_t>> successors_;
};

struct CipherCorpus {
  MonoStore base;
  MonoStore cipher;
  ParallelStore parallel;  // base -> cipher
};

CipherCorpus GenerateCipherCorpus(const CipherLanguage& cipher,
                                  const BaseSentenceGenerator& generator,
                                  const LangCode& base_lang,
                                  std::size_t n_sentences, std::uint64_t seed);

// Convenience overload: i.i.d. Zipf tokens, base language "en".
CipherCorpus GenerateCipherCorpus(const CipherSpec& spec, std::size_t n_sentences,
                                  std::pair<std::size_t, std::size_t> len_range,
                                  std::size_t base_vocab_size, double zipf_s,
                                  std::uint64_t seed);

}  // namespace polymass
