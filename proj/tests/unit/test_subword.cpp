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

#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "polymass/subword.hpp"
#include "test_support.hpp"

using namespace polymass;
using namespace polymass::testing;

namespace {

std::vector<std::string> RandomSentences(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const std::string letters = "abcdefghij";
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> words;
    const std::size_t nw = 1 + rng.UniformInt(6);
    for (std::size_t w = 0; w < nw; ++w) {
      std::string word;
      const std::size_t nl = 1 + rng.UniformInt(5);
      for (std::size_t l = 0; l < nl; ++l) word += letters[rng.UniformInt(letters.size())];
      words.push_back(word);
    }
    out.push_back(JoinWords(words));
  }
  return out;
}

}  // namespace

TEST_CASE("whitespace normalization collapses runs and trims") {
  CHECK(NormalizeWhitespace("  a \t b\n\nc  ") == "a b c");
  CHECK(NormalizeWhitespace("") == "");
  CHECK(SplitWhitespace(" x  y ") == std::vector<std::string>{"x", "y"});
}

TEST_CASE("first merge is the most frequent pair") {
  const Vocabulary v = TrainVocab({"ab", "ab", "ac"}, 100, {});
  REQUIRE_FALSE(v.merges().empty());
  CHECK(v.merges().front() == Vocabulary::Merge{"a", "b</w>"});
  const auto ids = v.Encode("ab");
  REQUIRE(ids.size() == 1);
  CHECK(v.piece(ids[0]) == "ab</w>");
}

TEST_CASE("equal pair counts break ties lexicographically") {
  // (a,b</w>) and (c,d</w>) both occur twice.
  const Vocabulary v = TrainVocab({"cd", "ab", "cd", "ab"}, 100, {});
  REQUIRE(v.merges().size() >= 2);
  CHECK(v.merges()[0] == Vocabulary::Merge{"a", "b</w>"});
  CHECK(v.merges()[1] == Vocabulary::Merge{"c", "d</w>"});
}

TEST_CASE("merging stops when no pair occurs twice") {
  const Vocabulary v = TrainVocab({"ab", "cd"}, 100, {});
  CHECK(v.merges().empty());
}

TEST_CASE("minimum vocabulary has no merges") {
  const Vocabulary v = TrainVocab({"a"}, Vocabulary::kNumReserved + 1, {});
  CHECK(v.size() == Vocabulary::kNumReserved + 1);
  CHECK(v.merges().empty());
  CHECK(v.piece(5) == "a</w>");
}

TEST_CASE("reserved ids and sorted language tags") {
  const Vocabulary v = TrainVocab({"ab ab"}, 20, {"fr", "de", "en"});
  CHECK(v.piece(Vocabulary::kPad) == "<pad>");
  CHECK(v.piece(Vocabulary::kBos) == "<s>");
  CHECK(v.piece(Vocabulary::kEos) == "</s>");
  CHECK(v.piece(Vocabulary::kUnk) == "<unk>");
  CHECK(v.piece(Vocabulary::kMask) == "<mask>");
  CHECK(v.piece(5) == "<2de>");
  CHECK(v.piece(6) == "<2en>");
  CHECK(v.piece(7) == "<2fr>");
  CHECK(v.Tag("en") == 6);
  CHECK_THROWS_AS(v.Tag("xx"), Error);
}

TEST_CASE("tag ids do not depend on the corpus") {
  const Vocabulary a = TrainVocab({"hello world"}, 30, {"bb", "aa"});
  const Vocabulary b = TrainVocab({"zzz qqq rrr"}, 40, {"aa", "bb"});
  CHECK(a.Tag("aa") == b.Tag("aa"));
  CHECK(a.Tag("bb") == b.Tag("bb"));
}

TEST_CASE("training validates its inputs") {
  CHECK_THROWS_AS(TrainVocab({}, 50, {}), Error);
  try {
    TrainVocab({"abc"}, 6, {"en"});
    FAIL("expected an error");
  } catch (const Error& e) {
    // 5 reserved + 1 tag + 3 symbols.
    CHECK(std::string(e.what()).find("9") != std::string::npos);
  }
}

TEST_CASE("encode and decode edge cases") {
  const Vocabulary v = TrainVocab({"ab ac", "ab"}, 30, {"en"});
  CHECK(v.Encode("").empty());
  const auto unk = v.Encode("az");
  CHECK(std::find(unk.begin(), unk.end(), Vocabulary::kUnk) != unk.end());
  CHECK(v.Decode(v.Encode("ab ac")) == "ab ac");
  const std::vector<TokenId> pads = {Vocabulary::kPad, Vocabulary::kPad};
  CHECK(v.Decode(pads) == "");
  std::vector<TokenId> framed = {v.Tag("en")};
  for (auto id : v.Encode("ab")) framed.push_back(id);
  framed.push_back(Vocabulary::kEos);
  CHECK(v.Decode(framed) == "ab");
  const std::vector<TokenId> bad = {static_cast<TokenId>(v.size())};
  CHECK_THROWS_AS(v.Decode(bad), Error);
}

TEST_CASE("round trip over 1000 training sentences") {
  const auto texts = RandomSentences(1000, 7);
  const Vocabulary v = TrainVocab(texts, 120, {"aa", "bb"});
  CHECK(v.merges().size() > 0);
  for (const auto& s : texts) REQUIRE(v.Decode(v.Encode(s)) == s);
}

TEST_CASE("training is deterministic") {
  const auto texts = RandomSentences(500, 3);
  CHECK(TrainVocab(texts, 90, {"aa"}) == TrainVocab(texts, 90, {"aa"}));
}

TEST_CASE("vocabulary files round trip") {
  const Vocabulary v = TrainVocab(RandomSentences(300, 5), 80, {"aa", "bb", "cc"});
  const std::string dir = TempDir("vocab");
  SaveVocab(v, dir + "/v.txt");
  CHECK(LoadVocab(dir + "/v.txt") == v);
}

TEST_CASE("malformed vocabulary files are rejected with a line number") {
  const Vocabulary v = TrainVocab(RandomSentences(300, 5), 80, {"aa"});
  const std::string text = SerializeVocab(v);

  const std::string truncated = text.substr(0, text.find("[merges]"));
  try {
    ParseVocab(truncated);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line") != std::string::npos);
    CHECK(msg.find("[merges]") != std::string::npos);
  }

  std::string bumped = text;
  bumped.replace(0, std::string("polymass-vocab 1").size(), "polymass-vocab 7");
  try {
    ParseVocab(bumped);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("7") != std::string::npos);
    CHECK(msg.find("1") != std::string::npos);
  }

  CHECK_THROWS_AS(ParseVocab(""), Error);
  CHECK_THROWS_AS(ParseVocab("something else\n"), Error);
}
