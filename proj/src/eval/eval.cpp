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

#include "polymass/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace polymass {
namespace {

using Ngram = std::vector<std::string_view>;

std::map<Ngram, std::size_t> CountNgrams(const std::vector<std::string>& words, std::size_t n) {
  std::map<Ngram, std::size_t> counts;
  if (words.size() < n) return counts;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    Ngram g(n);
    for (std::size_t j = 0; j < n; ++j) g[j] = words[i + j];
    ++counts[g];
  }
  return counts;
}

}  // namespace

NgramCounts NgramPrecisions(const std::vector<std::string>& hyps,
                            const std::vector<std::string>& refs) {
  if (hyps.size() != refs.size()) {
    throw Error("BLEU: " + std::to_string(hyps.size()) + " hypotheses but " +
                std::to_string(refs.size()) + " references");
  }
  if (hyps.empty()) throw Error("BLEU: empty corpus");
  NgramCounts c;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    const auto hw = SplitWhitespace(hyps[s]);
    const auto rw = SplitWhitespace(refs[s]);
    c.hyp_len += hw.size();
    c.ref_len += rw.size();
    for (std::size_t n = 1; n <= kBleuOrder; ++n) {
      const auto hc = CountNgrams(hw, n);
      const auto rc = CountNgrams(rw, n);
      for (const auto& [g, count] : hc) {
        auto it = rc.find(g);
        if (it != rc.end()) c.matches[n - 1] += std::min(count, it->second);
      }
      if (hw.size() >= n) c.totals[n - 1] += hw.size() - n + 1;
    }
  }
  return c;
}

std::string SmoothingName(const Smoothing& s) {
  if (s.kind == Smoothing::Kind::kNone) return "none";
  nlohmann::json k = s.k;
  return "add_k:" + k.dump();
}

Smoothing ParseSmoothing(const std::string& s) {
  if (s == "none") return Smoothing::None();
  if (s.rfind("add_k", 0) == 0) {
    if (s == "add_k") return Smoothing::AddK(1.0);
    if (s.size() > 6 && s[5] == ':') {
      try {
        std::size_t used = 0;
        const double k = std::stod(s.substr(6), &used);
        if (used == s.size() - 6 && k > 0.0) return Smoothing::AddK(k);
      } catch (const std::exception&) {
      }
    }
  }
  throw Error("unknown smoothing '" + s + "' (expected none or add_k:<k>)");
}

BleuResult CorpusBleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                      Smoothing smoothing) {
  BleuResult r;
  r.smoothing = smoothing;
  r.counts = NgramPrecisions(hyps, refs);
  r.hyp_len = r.counts.hyp_len;
  r.ref_len = r.counts.ref_len;
  if (r.hyp_len == 0) {
    r.empty_hypotheses = true;
    return r;
  }
  const double c = static_cast<double>(r.hyp_len);
  const double ref = static_cast<double>(r.ref_len);
  r.brevity_penalty = c < ref ? std::exp(1.0 - ref / c) : 1.0;
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < kBleuOrder; ++n) {
    double m = static_cast<double>(r.counts.matches[n]);
    double t = static_cast<double>(r.counts.totals[n]);
    if (smoothing.kind == Smoothing::Kind::kAddK && n >= 1) {
      m += smoothing.k;
      t += smoothing.k;
    }
    r.precisions[n] = t > 0.0 ? m / t : 0.0;
    if (r.precisions[n] <= 0.0) {
      zero = true;
    } else {
      log_sum += std::log(r.precisions[n]);
    }
  }
  r.bleu = zero ? 0.0 : 100.0 * r.brevity_penalty * std::exp(log_sum / kBleuOrder);
  r.bleu = std::clamp(r.bleu, 0.0, 100.0);
  return r;
}

nlohmann::json BleuToJson(const BleuResult& r) {
  return {{"bleu", r.bleu},
          {"precisions", r.precisions},
          {"brevity_penalty", r.brevity_penalty},
          {"hyp_len", r.hyp_len},
          {"ref_len", r.ref_len},
          {"smoothing", SmoothingName(r.smoothing)},
          {"empty_hypotheses", r.empty_hypotheses},
          {"matches", r.counts.matches},
          {"totals", r.counts.totals}};
}

BleuResult BleuFromJson(const nlohmann::json& j) {
  BleuResult r;
  r.bleu = j.at("bleu").get<double>();
  r.precisions = j.at("precisions").get<std::array<double, kBleuOrder>>();
  r.brevity_penalty = j.at("brevity_penalty").get<double>();
  r.hyp_len = j.at("hyp_len").get<std::size_t>();
  r.ref_len = j.at("ref_len").get<std::size_t>();
  r.smoothing = ParseSmoothing(j.at("smoothing").get<std::string>());
  r.empty_hypotheses = j.value("empty_hypotheses", false);
  r.counts.matches = j.at("matches").get<std::array<std::size_t, kBleuOrder>>();
  r.counts.totals = j.at("totals").get<std::array<std::size_t, kBleuOrder>>();
  r.counts.hyp_len = r.hyp_len;
  r.counts.ref_len = r.ref_len;
  return r;
}

std::vector<std::string> Translate(const ModelParams<float>& params, const Vocabulary& vocab,
                                   const std::vector<std::string>& sources,
                                   const LangCode& tgt_lang, const DecodeSettings& settings) {
  if (!vocab.HasLanguage(tgt_lang)) throw Error("no language tag for '" + tgt_lang + "'");
  if (settings.beam_size == 0) throw Error("beam size must be >= 1");
  const std::size_t pos_cap = params.config().max_positions;
  std::vector<std::vector<TokenId>> encoded;
  encoded.reserve(sources.size());
  for (const auto& s : sources) {
    auto ids = vocab.Encode(s);
    // [tag] + src + [eos] must fit the position table.
    if (ids.size() + 2 > pos_cap) ids.resize(pos_cap - 2);
    encoded.push_back(std::move(ids));
  }
  auto limit = [&](const std::vector<TokenId>& src) {
    const double l = settings.max_len_ratio * static_cast<double>(src.size()) +
                     static_cast<double>(settings.max_len_extra);
    return std::min<std::size_t>(static_cast<std::size_t>(l), pos_cap - 1);
  };

  std::vector<std::string> out(sources.size());
  if (settings.beam_size == 1) {
    // Group by step limit so the lockstep batches share one bound.
    std::map<std::size_t, std::vector<std::size_t>> by_limit;
    for (std::size_t i = 0; i < encoded.size(); ++i) by_limit[limit(encoded[i])].push_back(i);
    const std::size_t chunk = std::max<std::size_t>(1, settings.chunk);
    for (const auto& [max_steps, idx] : by_limit) {
      for (std::size_t start = 0; start < idx.size(); start += chunk) {
        const std::size_t end = std::min(idx.size(), start + chunk);
        std::vector<std::vector<TokenId>> group;
        for (std::size_t k = start; k < end; ++k) group.push_back(encoded[idx[k]]);
        auto hyps = GreedyDecodeBatch(params, vocab, group, tgt_lang, max_steps);
        for (std::size_t k = start; k < end; ++k) out[idx[k]] = vocab.Decode(hyps[k - start]);
      }
    }
  } else {
    for (std::size_t i = 0; i < encoded.size(); ++i) {
      auto r = BeamDecode(params, vocab, encoded[i], tgt_lang, settings.beam_size,
                          limit(encoded[i]), settings.length_penalty);
      out[i] = vocab.Decode(r.best.tokens);
    }
  }
  return out;
}

DirectionScore ScoreDirection(const ModelParams<float>& params, const Vocabulary& vocab,
                              const ParallelStore& test, const DecodeSettings& settings,
                              Smoothing smoothing) {
  if (test.pairs.empty()) throw Error("test set " + test.name() + " is empty");
  std::vector<std::string> srcs, refs;
  srcs.reserve(test.size());
  refs.reserve(test.size());
  for (const auto& p : test.pairs) {
    srcs.push_back(p.src);
    refs.push_back(p.tgt);
  }
  DirectionScore s;
  s.hypotheses = Translate(params, vocab, srcs, test.tgt_lang, settings);
  s.bleu = CorpusBleu(s.hypotheses, refs, smoothing);
  return s;
}

std::vector<std::string> PivotTranslate(const ModelParams<float>& params, const Vocabulary& vocab,
                                        const std::vector<std::string>& sources,
                                        const LangCode& pivot_lang, const LangCode& tgt_lang,
                                        const DecodeSettings& settings) {
  if (pivot_lang == tgt_lang) throw Error("pivot language equals the target language");
  const auto mid = Translate(params, vocab, sources, pivot_lang, settings);
  return Translate(params, vocab, mid, tgt_lang, settings);
}

}  // namespace polymass
