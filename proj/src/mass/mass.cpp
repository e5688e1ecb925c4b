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

#include "polymass/mass.hpp"

#include <algorithm>
#include <cmath>

namespace polymass {

void MaskSpec::Validate() const {
  if (!(fragment_ratio > 0.0 && fragment_ratio <= 1.0)) {
    throw Error("MaskSpec: fragment_ratio must lie in (0, 1]");
  }
  if (mask_prob < 0 || random_prob < 0 || keep_prob < 0 ||
      std::abs(mask_prob + random_prob + keep_prob - 1.0) > 1e-9) {
    throw Error("MaskSpec: replacement probabilities must be non-negative and sum to 1");
  }
  if (min_len < 1) throw Error("MaskSpec: min_len must be at least 1");
}

// Halves round to even, so odd lengths do not bias k/m upward.
std::size_t FragmentLength(std::size_t m, const MaskSpec& spec) {
  const auto k = static_cast<std::size_t>(
      std::nearbyint(spec.fragment_ratio * static_cast<double>(m)));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(m, 1));
}

Span SampleSpan(std::size_t m, const MaskSpec& spec, Rng& rng) {
  if (m < spec.min_len || m == 0) {
    throw Error("SampleSpan: sentence of length " + std::to_string(m) +
                " is shorter than min_len " + std::to_string(spec.min_len));
  }
  const std::size_t k = FragmentLength(m, spec);
  return {rng.UniformInt(m - k + 1), k};
}

Corruption SampleCorruption(const MaskSpec& spec, Rng& rng) {
  const double r = rng.UniformReal();
  if (r < spec.mask_prob) return Corruption::kMask;
  if (r < spec.mask_prob + spec.random_prob) return Corruption::kRandom;
  return Corruption::kKeep;
}

TrainingExample BuildMassExampleAt(std::span<const TokenId> tokens, Span span,
                                   const LangCode& lang, const MaskSpec& spec,
                                   const Vocabulary& vocab, Rng& rng,
                                   std::vector<Corruption>* corruption) {
  const std::size_t m = tokens.size();
  if (m == 0) throw Error("BuildMassExample: empty sentence");
  if (span.length == 0 || span.start + span.length > m) {
    throw Error("BuildMassExample: span out of range");
  }
  const TokenId first_regular = vocab.first_regular_id();
  const auto n_regular = static_cast<std::uint64_t>(vocab.size()) - first_regular;
  for (TokenId t : tokens) {
    if (vocab.IsSpecial(t)) throw Error("BuildMassExample: reserved id inside sentence");
  }

  TrainingExample ex;
  ex.enc.reserve(m + 2);
  ex.enc.push_back(vocab.Tag(lang));
  ex.enc.insert(ex.enc.end(), tokens.begin(), tokens.end());
  ex.enc.push_back(Vocabulary::kEos);
  if (corruption) corruption->clear();
  for (std::size_t i = 0; i < span.length; ++i) {
    TokenId& slot = ex.enc[1 + span.start + i];
    const Corruption c = SampleCorruption(spec, rng);
    if (c == Corruption::kMask) {
      slot = Vocabulary::kMask;
    } else if (c == Corruption::kRandom) {
      if (n_regular == 0) throw Error("BuildMassExample: vocabulary has no regular ids");
      slot = first_regular + static_cast<TokenId>(rng.UniformInt(n_regular));
    }
    if (corruption) corruption->push_back(c);
  }
  for (std::size_t i = 0; i < ex.enc.size(); ++i) ex.enc_pos.push_back(static_cast<std::int32_t>(i));

  ex.dec_in.push_back(Vocabulary::kBos);
  for (std::size_t i = 0; i + 1 < span.length; ++i) ex.dec_in.push_back(tokens[span.start + i]);
  ex.target.assign(tokens.begin() + span.start, tokens.begin() + span.start + span.length);
  const std::size_t offset = spec.absolute_positions ? span.start : 0;
  for (std::size_t i = 0; i < span.length; ++i) {
    ex.dec_pos.push_back(static_cast<std::int32_t>(offset + i));
  }
  ex.loss_mask.assign(span.length, 1);
  return ex;
}

TrainingExample BuildMassExample(std::span<const TokenId> tokens, const LangCode& lang,
                                 const MaskSpec& spec, const Vocabulary& vocab, Rng& rng,
                                 std::vector<Corruption>* corruption) {
  const Span span = SampleSpan(tokens.size(), spec, rng);
  return BuildMassExampleAt(tokens, span, lang, spec, vocab, rng, corruption);
}

}  // namespace polymass
