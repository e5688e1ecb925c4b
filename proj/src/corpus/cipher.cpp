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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "polymass/corpus.hpp"

namespace polymass {

namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";
constexpr std::size_t kSyllables = kConsonants.size() * kVowels.size();

std::string Syllable(std::size_t i) {
  return {kConsonants[i / kVowels.size()], kVowels[i % kVowels.size()]};
}

// Fixed seed so that the base lexicon depends on nothing but its size.
constexpr std::uint64_t kBaseLexiconSeed = 0x6261736557u;

}  // namespace

std::vector<std::size_t> ReorderPermutation(const Reorder& r, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  switch (r.kind) {
    case Reorder::Kind::kNone:
      break;
    case Reorder::Kind::kReverseWindow: {
      const std::size_t w = r.window == 0 ? std::max<std::size_t>(n, 1) : r.window;
      for (std::size_t b = 0; b < n; b += w) {
        std::reverse(perm.begin() + b, perm.begin() + std::min(b + w, n));
      }
      break;
    }
    case Reorder::Kind::kAdjacentSwap:
      for (std::size_t i = 0; i + 1 < n; i += 2) std::swap(perm[i], perm[i + 1]);
      break;
  }
  return perm;
}

std::string ReorderToString(const Reorder& r) {
  switch (r.kind) {
    case Reorder::Kind::kNone:
      return "none";
    case Reorder::Kind::kAdjacentSwap:
      return "adjacent_swap";
    case Reorder::Kind::kReverseWindow:
      return r.window == 0 ? "reverse_window" : "reverse_window:" + std::to_string(r.window);
  }
  return "none";
}

Reorder ParseReorder(const std::string& s) {
  if (s == "none" || s.empty()) return Reorder::None();
  if (s == "adjacent_swap") return Reorder::AdjacentSwap();
  if (s == "reverse_window") return Reorder::ReverseWindow(0);
  const std::string prefix = "reverse_window:";
  if (s.rfind(prefix, 0) == 0) {
    try {
      return Reorder::ReverseWindow(std::stoul(s.substr(prefix.size())));
    } catch (const std::exception&) {
    }
  }
  throw Error("unknown reorder '" + s +
              "' (expected none, adjacent_swap, reverse_window[:w])");
}

std::vector<std::string> BaseLexicon(std::size_t vocab_size) {
  const std::size_t capacity = kSyllables * kSyllables;
  if (vocab_size > capacity) {
    throw Error("base vocabulary size " + std::to_string(vocab_size) +
                " exceeds the generator capacity " + std::to_string(capacity));
  }
  std::vector<std::size_t> codes(capacity);
  std::iota(codes.begin(), codes.end(), 0);
  Rng rng(kBaseLexiconSeed);
  for (std::size_t i = capacity; i > 1; --i) {
    std::swap(codes[i - 1], codes[rng.UniformInt(i)]);
  }
  std::vector<std::string> words;
  words.reserve(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    words.push_back(Syllable(codes[i] / kSyllables) + Syllable(codes[i] % kSyllables));
  }
  return words;
}

CipherLanguage::CipherLanguage(CipherSpec spec, std::size_t base_vocab_size,
                               const CipherLanguage* relative)
    : spec_(std::move(spec)) {
  if (!(spec_.shared_fraction >= 0.0 && spec_.shared_fraction <= 1.0)) {
    throw Error("cipher '" + spec_.lang + "': shared_fraction " +
                std::to_string(spec_.shared_fraction) + " is outside [0, 1]");
  }
  if (base_vocab_size < 10) {
    throw Error("cipher '" + spec_.lang + "': base vocabulary must have at least 10 words");
  }
  if (spec_.identity_lexicon) {
    words_ = BaseLexicon(base_vocab_size);
  } else {
    if (spec_.shared_fraction > 0.0) {
      if (relative == nullptr) {
        throw Error("cipher '" + spec_.lang + "': shared_fraction > 0 requires a relative language");
      }
      if (relative->words().size() != base_vocab_size) {
        throw Error("cipher '" + spec_.lang + "': relative lexicon size mismatch");
      }
    }
    Rng rng(spec_.lexicon_seed);
    std::vector<std::size_t> order(base_vocab_size);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = base_vocab_size; i > 1; --i) {
      std::swap(order[i - 1], order[rng.UniformInt(i)]);
    }
    const auto n_shared = static_cast<std::size_t>(
        std::llround(spec_.shared_fraction * static_cast<double>(base_vocab_size)));
    words_.assign(base_vocab_size, {});
    std::set<std::string> used;
    if (relative != nullptr) used.insert(relative->words().begin(), relative->words().end());
    for (std::size_t i = 0; i < n_shared; ++i) {
      words_[order[i]] = relative->words()[order[i]];
    }
    for (std::size_t i = n_shared; i < base_vocab_size; ++i) {
      std::string w;
      do {
        w = Syllable(rng.UniformInt(kSyllables)) + Syllable(rng.UniformInt(kSyllables)) +
            Syllable(rng.UniformInt(kSyllables));
      } while (!used.insert(w).second);
      words_[order[i]] = std::move(w);
    }
  }
  for (std::size_t i = 0; i < words_.size(); ++i) inverse_.emplace(words_[i], i);
}

std::string CipherLanguage::Encipher(const std::vector<std::size_t>& base_indices) const {
  const auto perm = ReorderPermutation(spec_.reorder, base_indices.size());
  std::vector<std::string> out;
  out.reserve(base_indices.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out.push_back(words_.at(base_indices[perm[i]]));
  return JoinWords(out);
}

std::vector<std::size_t> CipherLanguage::Decipher(const std::string& sentence) const {
  const auto words = SplitWhitespace(sentence);
  const auto perm = ReorderPermutation(spec_.reorder, words.size());
  std::vector<std::size_t> base(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto it = inverse_.find(words[i]);
    if (it == inverse_.end()) {
      throw Error("cipher '" + spec_.lang + "': word '" + words[i] + "' is not in the lexicon");
    }
    base[perm[i]] = it->second;
  }
  return base;
}

BaseSentenceGenerator::BaseSentenceGenerator(GeneratorConfig config)
    : config_(config) {
  if (config_.base_vocab_size < 10) throw Error("base vocabulary must have at least 10 words");
  if (config_.len_min < 1 || config_.len_max < config_.len_min) {
    throw Error("invalid sentence length range [" + std::to_string(config_.len_min) + ", " +
                std::to_string(config_.len_max) + "]");
  }
  if (!(config_.context_strength >= 0.0 && config_.context_strength <= 1.0)) {
    throw Error("context_strength must lie in [0, 1]");
  }
  cdf_.resize(config_.base_vocab_size);
  double total = 0.0;
  for (std::size_t r = 0; r < cdf_.size(); ++r) {
    total += std::pow(static_cast<double>(r + 1), -config_.zipf_s);
    cdf_[r] = total;
  }
  for (auto& c : cdf_) c /= total;
  cdf_.back() = 1.0;

  if (config_.context_strength > 0.0) {
    Rng grammar(config_.grammar_seed);
    successors_.resize(config_.base_vocab_size);
    for (auto& s : successors_) {
      for (std::size_t j = 0; j < config_.successors_per_word; ++j) {
        s.push_back(SampleZipf(grammar));
      }
    }
  }
}

std::size_t BaseSentenceGenerator::SampleZipf(Rng& rng) const {
  const double u = rng.UniformReal();
  return static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) -
                                  cdf_.begin());
}

std::vector<std::size_t> BaseSentenceGenerator::Sample(Rng& rng) const {
  const std::size_t len =
      config_.len_min + rng.UniformInt(config_.len_max - config_.len_min + 1);
  std::vector<std::size_t> out;
  out.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    if (i > 0 && !successors_.empty() && rng.Bernoulli(config_.context_strength)) {
      const auto& next = successors_[out.back()];
      out.push_back(next[rng.UniformInt(next.size())]);
    } else {
      out.push_back(SampleZipf(rng));
    }
  }
  return out;
}

CipherCorpus GenerateCipherCorpus(const CipherLanguage& cipher,
                                  const BaseSentenceGenerator& generator,
                                  const LangCode& base_lang,
                                  std::size_t n_sentences, std::uint64_t seed) {
  if (cipher.words().size() != generator.config().base_vocab_size) {
    throw Error("cipher lexicon size does not match the generator vocabulary");
  }
  const auto base_words = BaseLexicon(generator.config().base_vocab_size);
  Rng rng(seed);
  CipherCorpus out{{base_lang, {}}, {cipher.spec().lang, {}},
                   {base_lang, cipher.spec().lang, {}}};
  out.base.sentences.reserve(n_sentences);
  out.cipher.sentences.reserve(n_sentences);
  out.parallel.pairs.reserve(n_sentences);
  for (std::size_t i = 0; i < n_sentences; ++i) {
    const auto idx = generator.Sample(rng);
    std::vector<std::string> words;
    words.reserve(idx.size());
    for (auto w : idx) words.push_back(base_words[w]);
    std::string base = JoinWords(words);
    std::string ciph = cipher.Encipher(idx);
    out.base.sentences.push_back(base);
    out.cipher.sentences.push_back(ciph);
    out.parallel.pairs.push_back({std::move(base), std::move(ciph)});
  }
  return out;
}

CipherCorpus GenerateCipherCorpus(const CipherSpec& spec, std::size_t n_sentences,
                                  std::pair<std::size_t, std::size_t> len_range,
                                  std::size_t base_vocab_size, double zipf_s,
                                  std::uint64_t seed) {
  GeneratorConfig gc;
  gc.base_vocab_size = base_vocab_size;
  gc.zipf_s = zipf_s;
  gc.len_min = len_range.first;
  gc.len_max = len_range.second;
  const CipherLanguage cipher(spec, base_vocab_size);
  return GenerateCipherCorpus(cipher, BaseSentenceGenerator(gc), "en", n_sentences, seed);
}

}  // namespace polymass
