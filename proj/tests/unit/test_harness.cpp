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

#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "polymass/harness.hpp"
#include "test_support.hpp"

using namespace polymass;
using namespace polymass::testing;

namespace {

ExperimentConfig SmallConfig() {
  ExperimentConfig c;
  c.name = "small";
  c.generator.base_vocab_size = 30;
  c.generator.len_min = 3;
  c.generator.len_max = 6;
  CipherSpec a;
  a.lang = "xa";
  a.lexicon_seed = 1;
  CipherSpec b;
  b.lang = "xb";
  b.lexicon_seed = 2;
  b.shared_fraction = 0.5;
  b.relative = "xa";
  c.languages = {{a, 200, 100}, {b, 30, 100}};
  c.base_mono = 100;
  c.vocab_size = 150;
  c.arms = {ArmSpec::Parse("bilingual"), ArmSpec::Parse("multilingual"),
            ArmSpec::Parse("multilingual_mono"), ArmSpec::Parse("leave_one_out:xb")};
  c.sampling.batch_size = 4;
  c.sampling.max_len = 16;
  c.model = TinyConfig(0);
  c.train.total_steps = 6;
  c.train.warmup_steps = 3;
  c.eval.directions = {{"xb", "en"}};
  c.eval.zero_shot = {{"xa", "xb"}};
  c.eval.pivots = {{"xa", "xb", "en"}};
  c.eval.test_size = 20;
  c.eval.decode.max_len_extra = 2;
  c.seeds = {1, 2};
  return c;
}

CorpusRegistry ThreeLanguageRegistry() {
  CorpusRegistry r;
  r.AddParallel({"en", "aa", {{"a", "b"}, {"c", "d"}}});
  r.AddParallel({"en", "bb", {{"e", "f"}}});
  r.AddParallel({"en", "cc", {{"g", "h"}, {"i", "j"}}});
  r.AddMono({"cc", {"k", "l"}});
  r.AddMono({"aa", {"m"}});
  return r;
}

}  // namespace

TEST_CASE("arm names round trip") {
  for (const std::string s : {"bilingual", "multilingual", "multilingual_mono", "leave_one_out:xb",
                              "leave_one_out_nomono:xb", "mono_only:xb"}) {
    CHECK(ArmSpec::Parse(s).Name() == s);
  }
  CHECK_THROWS_AS(ArmSpec::Parse("leave_one_out"), Error);
  CHECK_THROWS_AS(ArmSpec::Parse("trilingual"), Error);
}

TEST_CASE("experiment configs round trip and hash stably") {
  const ExperimentConfig c = SmallConfig();
  const ExperimentConfig back = ExperimentConfigFromJson(ToJson(c));
  CHECK(ToJson(back) == ToJson(c));
  CHECK(ConfigHash(back) == ConfigHash(c));

  std::set<std::string> hashes = {ConfigHash(c)};
  auto variant = [&](auto edit) {
    ExperimentConfig v = SmallConfig();
    edit(v);
    hashes.insert(ConfigHash(v));
  };
  variant([](ExperimentConfig& v) { v.name = "other"; });
  variant([](ExperimentConfig& v) { v.data_seed = 2; });
  variant([](ExperimentConfig& v) { v.seeds = {1}; });
  variant([](ExperimentConfig& v) { v.sampling.temperature = 4.0; });
  variant([](ExperimentConfig& v) { v.mass.fragment_ratio = 0.4; });
  variant([](ExperimentConfig& v) { v.model.d_ff = 48; });
  variant([](ExperimentConfig& v) { v.train.total_steps = 7; });
  variant([](ExperimentConfig& v) { v.eval.test_size = 21; });
  variant([](ExperimentConfig& v) { v.languages[1].parallel = 31; });
  variant([](ExperimentConfig& v) { v.languages[0].cipher.reorder = Reorder::AdjacentSwap(); });
  variant([](ExperimentConfig& v) { v.generator.zipf_s = 1.1; });
  CHECK(hashes.size() == 12);

  nlohmann::json j = ToJson(c);
  j["extra"] = 1;
  CHECK_THROWS_AS(ExperimentConfigFromJson(j), Error);
}

TEST_CASE("experiment validation") {
  ExperimentConfig c = SmallConfig();
  c.eval.zero_shot = {{"xa", "en"}};
  CHECK_THROWS_AS(c.Validate(), Error);
  c = SmallConfig();
  c.eval.pivots = {{"xa", "xb", "xb"}};
  CHECK_THROWS_AS(c.Validate(), Error);
  c = SmallConfig();
  c.languages[1].mono = 0;
  CHECK_THROWS_AS(c.Validate(), Error);
  c = SmallConfig();
  c.eval.zero_shot = {{"xa", "xb"}};
  c.eval.pivots = {{"xa", "en", "xb"}};
  CHECK_THROWS_AS(c.Validate(), Error);
  CHECK_NOTHROW(DefaultSuiteConfig().Validate());
}

TEST_CASE("seed lists and the environment override") {
  CHECK(ParseSeedList("4, 5,6") == std::vector<std::uint64_t>{4, 5, 6});
  CHECK_THROWS_AS(ParseSeedList("1,x"), Error);
  CHECK_THROWS_AS(ParseSeedList(""), Error);
  const std::string dir = TempDir("harness_env");
  WriteFile(dir + "/c.json", ToJson(SmallConfig()).dump());
  setenv("POLYMASS_SEEDS", "7,8,9", 1);
  const ExperimentConfig c = LoadExperimentConfig(dir + "/c.json");
  unsetenv("POLYMASS_SEEDS");
  CHECK(c.seeds == std::vector<std::uint64_t>{7, 8, 9});
  CHECK(LoadExperimentConfig(dir + "/c.json").seeds == SmallConfig().seeds);
}

TEST_CASE("leave-one-out removes exactly the stores touching the language") {
  const CorpusRegistry r = ThreeLanguageRegistry();
  const CorpusRegistry loo = BuildLeaveOneOut(r, "cc");
  CHECK(loo.parallel().count({"en", "cc"}) == 0);
  CHECK(loo.parallel().at({"en", "aa"}) == r.parallel().at({"en", "aa"}));
  CHECK(loo.parallel().at({"en", "bb"}) == r.parallel().at({"en", "bb"}));
  CHECK(loo.mono() == r.mono());

  CorpusRegistry readded = loo;
  readded.AddParallel(r.parallel().at({"en", "cc"}));
  CHECK(readded == r);

  std::vector<std::string> warnings;
  const CorpusRegistry same = BuildLeaveOneOut(r, "zz", &warnings);
  CHECK(same == r);
  CHECK(warnings.size() == 1);
}

TEST_CASE("suite data: determinism and train/test hygiene") {
  const ExperimentConfig c = SmallConfig();
  const SuiteData a = BuildSuite(c);
  const SuiteData b = BuildSuite(c);
  CHECK(a.registry == b.registry);
  CHECK(a.test == b.test);
  CHECK(a.vocab == b.vocab);

  std::set<std::string> train;
  for (const auto& [k, s] : a.registry.parallel()) {
    for (const auto& p : s.pairs) {
      train.insert(p.src);
      train.insert(p.tgt);
    }
  }
  for (const auto& [k, s] : a.registry.mono()) train.insert(s.sentences.begin(), s.sentences.end());
  for (const auto& [lang, lines] : a.test) {
    CHECK(lines.size() == c.eval.test_size);
    for (const auto& s : lines) CHECK(train.count(s) == 0);
  }
  CHECK(a.registry.parallel().at({"en", "xb"}).size() == 30);
  CHECK(a.registry.mono().at("xb").size() == 100);
}

TEST_CASE("arm data isolation") {
  const ExperimentConfig c = SmallConfig();
  const SuiteData s = BuildSuite(c);
  const ArmData multi = MakeArmData(c, s.registry, ArmSpec::Parse("multilingual"));
  const ArmData mono = MakeArmData(c, s.registry, ArmSpec::Parse("multilingual_mono"));
  CHECK(multi.registry.parallel() == mono.registry.parallel());
  CHECK(multi.mono_ratio == 0.0);
  CHECK(mono.mono_ratio == c.sampling.mono_ratio);
  CHECK(multi.registry.mono().empty());

  const ArmData bi = MakeArmData(c, s.registry, ArmSpec::Parse("bilingual"), "xb");
  CHECK(bi.registry.parallel().size() == 1);
  CHECK(bi.registry.parallel().count({"en", "xb"}) == 1);

  const ArmData loo = MakeArmData(c, s.registry, ArmSpec::Parse("leave_one_out:xb"));
  CHECK(loo.registry.parallel().count({"en", "xb"}) == 0);
  CHECK(loo.registry.mono().count("xb") == 1);
  const ArmData nomono = MakeArmData(c, s.registry, ArmSpec::Parse("leave_one_out_nomono:xb"));
  CHECK(nomono.registry.mono().empty());
  CHECK(nomono.mono_ratio == 0.0);
  const ArmData only = MakeArmData(c, s.registry, ArmSpec::Parse("mono_only:xb"));
  CHECK(only.registry.parallel().empty());
  CHECK(only.mono_ratio == 1.0);
  CHECK(only.registry.Languages() == std::vector<LangCode>{"en", "xb"});
}

TEST_CASE("reports: empty, consistent across formats, byte-stable") {
  ExperimentReport empty;
  empty.name = "none";
  FinalizeReport(empty);
  for (const char* f : {"json", "txt", "csv"}) CHECK_FALSE(FormatReport(empty, f).empty());
  CHECK(FormatReport(empty, "csv") == "kind,arm,direction,seed,status,bleu,reason\n");
  CHECK(ReportFromJson(nlohmann::json::parse(FormatReport(empty, "json"))).cells.empty());
  CHECK_THROWS_AS(FormatReport(empty, "xml"), Error);

  ExperimentReport r;
  r.name = "r";
  for (std::uint64_t seed : {3, 1, 2}) {
    ReportCell cell{"multilingual", "xb-en", seed, true, "", {}, "", ""};
    cell.bleu = CorpusBleu({"a b c d"}, {seed == 1 ? "a b c d" : "a b c e"}, Smoothing::AddK(1));
    r.cells.push_back(cell);
  }
  r.cells.push_back({"bilingual", "xa-xb", 1, false, "no model", {}, "", ""});
  FinalizeReport(r);
  CHECK(r.cells.front().arm == "bilingual");
  CHECK(r.cells[1].seed == 1);
  CHECK(r.Median("multilingual", "xb-en").has_value());
  CHECK_FALSE(r.Median("bilingual", "xa-xb").has_value());
  CHECK(*r.Median("multilingual", "xb-en") == ReportRound(r.cells[2].bleu.bleu));

  const std::string json_text = FormatReport(r, "json");
  const ExperimentReport back = ReportFromJson(nlohmann::json::parse(json_text));
  CHECK(FormatReport(back, "json") == json_text);
  const std::string csv = FormatReport(r, "csv");
  const std::string txt = FormatReport(r, "txt");
  for (const auto& cell : r.cells) {
    if (!cell.ok) continue;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", ReportRound(cell.bleu.bleu));
    CHECK(csv.find(buf) != std::string::npos);
    CHECK(txt.find(buf) != std::string::npos);
    CHECK(json_text.find(std::to_string(ReportRound(cell.bleu.bleu)).substr(0, 4)) != std::string::npos);
  }
  const std::string dir = TempDir("harness_report");
  const std::string p1 = EmitReport(r, dir, "csv");
  const std::string first = ReadFile(p1);
  EmitReport(r, dir, "csv");
  CHECK(ReadFile(p1) == first);
}

TEST_CASE("medians") {
  CHECK(Median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(Median({4.0, 1.0}) == 2.5);
  CHECK_THROWS_AS(Median({}), Error);
}

TEST_CASE("an experiment run fills every cell") {
  const ExperimentConfig c = SmallConfig();
  const std::string dir = TempDir("harness_run");
  const ExperimentReport r = RunExperiment(c, dir);
  // 4 arms x 2 seeds x (direction + zero-shot + pivot).
  CHECK(r.cells.size() == 4 * 2 * 3);
  for (const auto& cell : r.cells) {
    if (!cell.ok) {
      CHECK_FALSE(cell.reason.empty());
      CHECK(cell.arm == "bilingual");
    }
  }
  CHECK(ReadFile(dir + "/report.json") == FormatReport(r, "json"));
  const ExperimentReport again = RunExperiment(c, dir);
  CHECK(FormatReport(again, "json") == FormatReport(r, "json"));
  CHECK(FormatReport(LoadExperimentReport(dir), "txt") == FormatReport(r, "txt"));
  const CorpusRegistry reg = LoadRegistryConfig(dir + "/data/registry.json");
  CHECK(reg == BuildSuite(c).registry);
}
