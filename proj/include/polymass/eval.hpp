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

// Corpus BLEU over whitespace tokens and translation scoring.

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "polymass/corpus.hpp"
#include "polymass/model.hpp"
#include "polymass/subword.hpp"

namespace polymass {

inline constexpr std::size_t kBleuOrder = 4;

struct NgramCounts {
  std::array<std::size_t, kBleuOrder> matches{};
  std::array<std::size_t, kBleuOrder> totals{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
};

// Clipped n-gram matches summed over segments. One reference per hypothesis.
NgramCounts NgramPrecisions(const std::vector<std::string>& hyps,
                            const std::vector<std::string>& refs);

struct Smoothing {
  enum class Kind { kNone, kAddK };
  Kind kind = Kind::kNone;
  double k = 1.0;

  static Smoothing None() { return {}; }
  static Smoothing AddK(double k) { return {Kind::kAddK, k}; }
};

std::string SmoothingName(const Smoothing& s);
Smoothing ParseSmoothing(const std::string& s);  // "none" or "add_k:<k>"

struct BleuResult {
  double bleu = 0.0;  // [0, 100]
  std::array<double, kBleuOrder> precisions{};
  double brevity_penalty = 0.0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  Smoothing smoothing;
  // Set when the hypotheses are all empty (c = 0).
  bool empty_hypotheses = false;
  NgramCounts counts;
};

BleuResult CorpusBleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                      Smoothing smoothing = Smoothing::None());

nlohmann::json BleuToJson(const BleuResult& r);
BleuResult BleuFromJson(const nlohmann::json& j);

struct DecodeSettings {
  std::size_t beam_size = 1;
  double length_penalty = 1.0;
  // Output limit per sentence: ratio * source tokens + extra, capped by the
  // model's position table.
  double max_len_ratio = 2.0;
  std::size_t max_len_extra = 10;
  // Sentences decoded together in greedy mode.
  std::size_t chunk = 64;
};

// Translates whitespace-normalized sentences into `tgt_lang`. Deterministic.
std::vector<std::string> Translate(const ModelParams<float>& params, const Vocabulary& vocab,
                                   const std::vector<std::string>& sources,
                                   const LangCode& tgt_lang, const DecodeSettings& settings = {});

struct DirectionScore {
  BleuResult bleu;
  std::vector<std::string> hypotheses;
};

// Decodes every source of `test` into test.tgt_lang and scores against its
// targets. Untrained target tags are valid (zero-shot).
DirectionScore ScoreDirection(const ModelParams<float>& params, const Vocabulary& vocab,
                              const ParallelStore& test, const DecodeSettings& settings = {},
                              Smoothing smoothing = Smoothing::None());

// src -> pivot -> tgt through the same model; the intermediate text is
// re-encoded with the shared vocabulary.
std::vector<std::string> PivotTranslate(const ModelParams<float>& params, const Vocabulary& vocab,
                                        const std::vector<std::string>& sources,
                                        const LangCode& pivot_lang, const LangCode& tgt_lang,
                                        const DecodeSettings& settings = {});

}  // namespace polymass
