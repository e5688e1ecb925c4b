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

#include "polymass/model.hpp"

namespace polymass {

namespace {

std::size_t StepLimit(const ModelParams<float>& params, std::size_t max_steps) {
  return std::min(max_steps, params.config().max_positions);
}

std::size_t ArgMax(const float* row, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t v = 1; v < n; ++v) {
    if (row[v] > row[best]) best = v;
  }
  return best;
}

}  // namespace

std::vector<std::vector<TokenId>> GreedyDecodeBatch(
    const ModelParams<float>& params, const Vocabulary& vocab,
    const std::vector<std::vector<TokenId>>& sources, const LangCode& target_lang,
    std::size_t max_steps) {
  std::vector<std::vector<TokenId>> out(sources.size());
  if (sources.empty() || max_steps == 0) return out;
  const auto enc = RunEncoder(params, sources, vocab.Tag(target_lang));
  std::vector<std::vector<TokenId>> prefixes(sources.size(), {Vocabulary::kBos});
  std::vector<bool> done(sources.size(), false);
  const std::size_t limit = StepLimit(params, max_steps);
  for (std::size_t step = 0; step < limit; ++step) {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      if (!done[i]) active.push_back(i);
    }
    if (active.empty()) break;
    std::vector<std::vector<TokenId>> batch;
    batch.reserve(active.size());
    for (auto i : active) batch.push_back(prefixes[i]);
    const Matrix<float> lp = NextTokenLogProbs(params, enc, active, batch);
    for (std::size_t r = 0; r < active.size(); ++r) {
      const auto tok = static_cast<TokenId>(ArgMax(lp.row(r), lp.cols));
      const std::size_t i = active[r];
      if (tok == Vocabulary::kEos) {
        done[i] = true;
      } else {
        out[i].push_back(tok);
        prefixes[i].push_back(tok);
      }
    }
  }
  return out;
}

std::vector<TokenId> GreedyDecode(const ModelParams<float>& params, const Vocabulary& vocab,
                                  const std::vector<TokenId>& src, const LangCode& target_lang,
                                  std::size_t max_steps) {
  return GreedyDecodeBatch(params, vocab, {src}, target_lang, max_steps).front();
}

BeamResult BeamDecode(const ModelParams<float>& params, const Vocabulary& vocab,
                      const std::vector<TokenId>& src, const LangCode& target_lang,
                      std::size_t beam_size, std::size_t max_steps, double length_penalty) {
  if (beam_size == 0) throw Error("BeamDecode: beam_size must be positive");
  BeamResult result;
  auto finalize = [&](Hypothesis& h) {
    h.score = h.length == 0
                  ? h.log_prob
                  : h.log_prob / std::pow(static_cast<double>(h.length), length_penalty);
  };
  const TokenId tag = vocab.Tag(target_lang);
  std::vector<Hypothesis> alive(1);
  if (max_steps > 0) {
    const auto enc = RunEncoder(params, {src}, tag);
    const std::size_t limit = StepLimit(params, max_steps);
    struct Cand {
      double score;
      std::size_t beam;
      TokenId token;
    };
    std::vector<Cand> cands;
    for (std::size_t step = 0; step < limit && !alive.empty(); ++step) {
      std::vector<std::vector<TokenId>> prefixes;
      for (const auto& h : alive) {
        std::vector<TokenId> p{Vocabulary::kBos};
        p.insert(p.end(), h.tokens.begin(), h.tokens.end());
        prefixes.push_back(std::move(p));
      }
      const Matrix<float> lp =
          NextTokenLogProbs(params, enc, std::vector<std::size_t>(alive.size(), 0), prefixes);
      cands.clear();
      for (std::size_t b = 0; b < alive.size(); ++b) {
        for (std::size_t v = 0; v < lp.cols; ++v) {
          cands.push_back({alive[b].log_prob + static_cast<double>(lp(b, v)), b,
                           static_cast<TokenId>(v)});
        }
      }
      const std::size_t keep = std::min(beam_size, cands.size());
      std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep),
                        cands.end(), [](const Cand& a, const Cand& b) {
                          if (a.score != b.score) return a.score > b.score;
                          if (a.beam != b.beam) return a.beam < b.beam;
                          return a.token < b.token;
                        });
      std::vector<Hypothesis> next;
      for (std::size_t i = 0; i < keep; ++i) {
        const Cand& c = cands[i];
        Hypothesis h;
        h.tokens = alive[c.beam].tokens;
        h.log_prob = c.score;
        std::vector<TokenId> explored = h.tokens;
        explored.push_back(c.token);
        result.explored.push_back(std::move(explored));
        if (c.token == Vocabulary::kEos) {
          h.length = h.tokens.size() + 1;
          h.finished = true;
          finalize(h);
          result.finished.push_back(std::move(h));
        } else {
          h.tokens.push_back(c.token);
          h.length = h.tokens.size();
          next.push_back(std::move(h));
        }
      }
      alive = std::move(next);
    }
  }
  std::vector<Hypothesis> pool = result.finished;
  if (pool.empty()) {
    for (auto& h : alive) {
      finalize(h);
      pool.push_back(h);
    }
  }
  if (pool.empty()) {
    result.best = Hypothesis{};
    return result;
  }
  result.best = *std::max_element(pool.begin(), pool.end(),
                                  [](const Hypothesis& a, const Hypothesis& b) {
                                    return a.score < b.score;
                                  });
  return result;
}

}  // namespace polymass
