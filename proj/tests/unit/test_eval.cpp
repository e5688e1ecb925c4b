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
#include <string>
#include <vector>

#include "bleu_oracle.hpp"
#include "doctest.h"
#include "polymass/eval.hpp"
#include "test_support.hpp"

using namespace polymass;
using namespace polymass::testing;

namespace {

std::string RandomSentence(Rng& rng, std::size_t min_len, std::size_t max_len, std::size_t vocab) {
  std::vector<std::string> words;
  const std::size_t n = min_len + rng.UniformInt(max_len - min_len + 1);
  for (std::size_t i = 0; i < n; ++i) words.push_back("w" + std::to_string(rng.UniformInt(vocab)));
  return JoinWords(words);
}

}  // namespace

TEST_CASE("n-gram counts: identity and clipping") {
  const NgramCounts same = NgramPrecisions({"a b c d e", "x y"}, {"a b c d e", "x y"});
  for (std::size_t n = 0; n < kBleuOrder; ++n) CHECK(same.matches[n] == same.totals[n]);
  const NgramCounts clip = NgramPrecisions({"a a a"}, {"a"});
  CHECK(clip.matches[0] == 1);
  CHECK(clip.totals[0] == 3);
  CHECK_THROWS_AS(NgramPrecisions({"a"}, {"a", "b"}), Error);
  CHECK_THROWS_AS(NgramPrecisions({}, {}), Error);
}

TEST_CASE("worked example") {
  const std::vector<std::string> h = {"the cat sat on the mat"}, r = {"the cat sat on a mat"};
  const NgramCounts c = NgramPrecisions(h, r);
  CHECK(c.matches == std::array<std::size_t, 4>{5, 3, 2, 1});
  CHECK(c.totals == std::array<std::size_t, 4>{6, 5, 4, 3});
  const BleuResult b = CorpusBleu(h, r);
  CHECK(b.brevity_penalty == 1.0);
  CHECK(std::abs(b.bleu - 100.0 * std::pow(1.0 / 12.0, 0.25)) < 1e-9);
  CHECK(std::abs(b.bleu - 53.73) < 0.01);
}

TEST_CASE("identical corpora score exactly 100") {
  const std::vector<std::string> x = {"a b c d", "e f g h i", "j k l m"};
  CHECK(CorpusBleu(x, x).bleu == 100.0);
}

TEST_CASE("brevity penalty for a short hypothesis") {
  const BleuResult b = CorpusBleu({"a b c"}, {"a b c d"});
  CHECK(std::abs(b.brevity_penalty - std::exp(1.0 - 4.0 / 3.0)) < 1e-12);
  CHECK(std::abs(b.brevity_penalty - 0.7165) < 1e-4);
}

TEST_CASE("zero precision, empty hypotheses and smoothing") {
  const BleuResult none = CorpusBleu({"a b c x"}, {"a b d c"});
  CHECK(none.bleu == 0.0);
  const BleuResult add = CorpusBleu({"a b c x"}, {"a b d c"}, Smoothing::AddK(1.0));
  CHECK(add.bleu > 0.0);
  const OracleBleu o = BruteForceBleu({"a b c x"}, {"a b d c"}, 1.0);
  CHECK(std::abs(add.bleu - o.bleu) < 1e-9);

  const BleuResult empty = CorpusBleu({"", ""}, {"a", "b"});
  CHECK(empty.empty_hypotheses);
  CHECK(empty.bleu == 0.0);
  CHECK_THROWS_AS(CorpusBleu({}, {}), Error);

  CHECK(SmoothingName(ParseSmoothing("add_k:0.5")) == "add_k:0.5");
  CHECK(ParseSmoothing("none").kind == Smoothing::Kind::kNone);
  CHECK_THROWS_AS(ParseSmoothing("exp"), Error);
}

TEST_CASE("matches a brute-force oracle on 200 random corpora") {
  Rng rng(2024);
  double worst = 0.0;
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = 1 + rng.UniformInt(20);
    std::vector<std::string> hyps, refs;
    for (std::size_t i = 0; i < n; ++i) {
      refs.push_back(RandomSentence(rng, 1, 30, 50));
      // Half the hypotheses are perturbed copies so higher orders match.
      if (rng.Bernoulli(0.5)) {
        auto words = SplitWhitespace(refs.back());
        for (auto& w : words) {
          if (rng.Bernoulli(0.2)) w = "w" + std::to_string(rng.UniformInt(50));
        }
        if (words.size() > 1 && rng.Bernoulli(0.3)) words.pop_back();
        hyps.push_back(JoinWords(words));
      } else {
        hyps.push_back(RandomSentence(rng, 1, 30, 50));
      }
    }
    for (double k : {-1.0, 1.0}) {
      const BleuResult b = CorpusBleu(hyps, refs, k < 0 ? Smoothing::None() : Smoothing::AddK(k));
      const OracleBleu o = BruteForceBleu(hyps, refs, k);
      worst = std::max(worst, std::abs(b.bleu - o.bleu));
      REQUIRE(b.bleu >= 0.0);
      REQUIRE(b.bleu <= 100.0);
    }
  }
  MESSAGE("max |bleu - oracle| = " << worst);
  CHECK(worst < 0.01);
}

TEST_CASE("permutation invariance and monotone brevity penalty") {
  Rng rng(5);
  std::vector<std::string> hyps, refs;
  for (int i = 0; i < 30; ++i) {
    refs.push_back(RandomSentence(rng, 3, 12, 8));
    hyps.push_back(RandomSentence(rng, 3, 12, 8));
  }
  std::vector<std::size_t> order(hyps.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.UniformInt(i)]);
  std::vector<std::string> h2, r2;
  for (auto i : order) {
    h2.push_back(hyps[i]);
    r2.push_back(refs[i]);
  }
  const BleuResult a = CorpusBleu(hyps, refs), b = CorpusBleu(h2, r2);
  CHECK(a.bleu == b.bleu);
  CHECK(a.precisions == b.precisions);

  const std::string ref = "a b c d e f g h i j";
  double prev = 0.0;
  for (std::size_t c = 1; c <= 10; ++c) {
    std::vector<std::string> words(c, "a");
    const double bp = CorpusBleu({JoinWords(words)}, {ref}).brevity_penalty;
    CHECK(bp >= prev);
    prev = bp;
  }
}

TEST_CASE("BLEU JSON round trip") {
  const BleuResult b = CorpusBleu({"the cat sat on the mat"}, {"the cat sat on a mat"}, Smoothing::AddK(1));
  const BleuResult c = BleuFromJson(BleuToJson(b));
  CHECK(c.bleu == b.bleu);
  CHECK(c.precisions == b.precisions);
  CHECK(SmoothingName(c.smoothing) == SmoothingName(b.smoothing));
  CHECK(c.smoothing.k == 1.0);
}

TEST_CASE("scoring and pivoting on an untrained model") {
  const Vocabulary v = TrainVocab({"ab cd ef", "gh ij"}, 30, {"aa", "bb", "cc"});
  ModelConfig mc = TinyConfig(v.size());
  const ModelParams<float> params = InitParams(mc, 3);
  const std::vector<std::string> src = {"ab cd", "ef gh ij", "ab"};
  DecodeSettings s;
  s.max_len_extra = 3;
  const auto h1 = Translate(params, v, src, "bb", s);
  CHECK(h1 == Translate(params, v, src, "bb", s));
  CHECK(h1.size() == src.size());

  ParallelStore test{"aa", "cc", {{"ab cd", "ef"}, {"gh", "ij ab"}}};
  const DirectionScore zs = ScoreDirection(params, v, test, s);
  CHECK(zs.hypotheses.size() == 2);
  CHECK(zs.bleu.bleu >= 0.0);
  CHECK_THROWS_AS(ScoreDirection(params, v, ParallelStore{"aa", "cc", {}}, s), Error);

  const auto p1 = PivotTranslate(params, v, src, "bb", "cc", s);
  CHECK(p1 == PivotTranslate(params, v, src, "bb", "cc", s));
  CHECK_THROWS_AS(PivotTranslate(params, v, src, "cc", "cc", s), Error);

  DecodeSettings beam = s;
  beam.beam_size = 3;
  CHECK(Translate(params, v, src, "bb", beam).size() == src.size());
}
