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

#include "polymass/harness.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <set>
#include <sstream>

#include "polymass/json_io.hpp"

#ifndef POLYMASS_GIT_DESCRIBE
#define POLYMASS_GIT_DESCRIBE "unknown"
#endif

namespace polymass {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string PairName(const LangPair& p) { return p.first + "-" + p.second; }

LangPair ParsePair(const std::string& s) {
  const auto dash = s.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == s.size() ||
      s.find('-', dash + 1) != std::string::npos) {
    throw Error("direction '" + s + "' is not of the form src-tgt");
  }
  return {s.substr(0, dash), s.substr(dash + 1)};
}

std::string ArmDirName(const ArmSpec& arm) {
  std::string n = arm.Name();
  std::replace(n.begin(), n.end(), ':', '_');
  return n;
}

std::string Hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return buf;
}

bool IsPerLanguage(ArmSpec::Kind k) {
  return k == ArmSpec::Kind::kLeaveOneOut || k == ArmSpec::Kind::kLeaveOneOutNoMono ||
         k == ArmSpec::Kind::kMonoOnly;
}

}  // namespace

// ---------------------------------------------------------------------------
// Arms

std::string ArmSpec::Name() const {
  switch (kind) {
    case Kind::kBilingual:
      return "bilingual";
    case Kind::kMultilingual:
      return "multilingual";
    case Kind::kMultilingualMono:
      return "multilingual_mono";
    case Kind::kLeaveOneOut:
      return "leave_one_out:" + lang;
    case Kind::kLeaveOneOutNoMono:
      return "leave_one_out_nomono:" + lang;
    case Kind::kMonoOnly:
      return "mono_only:" + lang;
  }
  return "?";
}

ArmSpec ArmSpec::Parse(const std::string& s) {
  if (s == "bilingual") return {Kind::kBilingual, ""};
  if (s == "multilingual") return {Kind::kMultilingual, ""};
  if (s == "multilingual_mono") return {Kind::kMultilingualMono, ""};
  const auto colon = s.find(':');
  if (colon != std::string::npos && colon + 1 < s.size()) {
    const std::string head = s.substr(0, colon);
    const std::string lang = s.substr(colon + 1);
    if (head == "leave_one_out") return {Kind::kLeaveOneOut, lang};
    if (head == "leave_one_out_nomono") return {Kind::kLeaveOneOutNoMono, lang};
    if (head == "mono_only") return {Kind::kMonoOnly, lang};
  }
  throw Error("unknown arm '" + s +
              "' (bilingual, multilingual, multilingual_mono, leave_one_out:L, "
              "leave_one_out_nomono:L, mono_only:L)");
}

// ---------------------------------------------------------------------------
// Config

const LanguageEntry* ExperimentConfig::Find(const LangCode& lang) const {
  for (const auto& e : languages) {
    if (e.cipher.lang == lang) return &e;
  }
  return nullptr;
}

void ExperimentConfig::Validate() const {
  if (languages.empty()) throw Error("experiment: no languages");
  std::set<LangCode> seen{base_lang};
  for (const auto& e : languages) {
    const auto& l = e.cipher.lang;
    if (l.empty() || l.find('-') != std::string::npos || l.find(' ') != std::string::npos) {
      throw Error("experiment: invalid language code '" + l + "'");
    }
    if (!seen.insert(l).second) throw Error("experiment: language '" + l + "' listed twice");
    if (e.cipher.shared_fraction > 0.0) {
      if (!e.cipher.relative) throw Error("experiment: " + l + " shares words but names no relative");
      if (*e.cipher.relative == base_lang || !seen.count(*e.cipher.relative)) {
        throw Error("experiment: relative of " + l + " must be a cipher listed before it");
      }
    }
  }
  if (arms.empty()) throw Error("experiment: no arms");
  for (const auto& a : arms) {
    if (!IsPerLanguage(a.kind)) continue;
    const LanguageEntry* e = Find(a.lang);
    if (e == nullptr) throw Error("experiment: arm " + a.Name() + " names an unknown language");
    if ((a.kind == ArmSpec::Kind::kLeaveOneOut || a.kind == ArmSpec::Kind::kMonoOnly) && e->mono == 0) {
      throw Error("experiment: arm " + a.Name() + " needs mono data for " + a.lang);
    }
    if (a.kind == ArmSpec::Kind::kMonoOnly && base_mono == 0) {
      throw Error("experiment: arm " + a.Name() + " needs base mono data");
    }
  }
  auto known = [&](const LangCode& l) { return l == base_lang || Find(l) != nullptr; };
  for (const auto& d : eval.directions) {
    if (!known(d.first) || !known(d.second) || d.first == d.second) {
      throw Error("experiment: bad direction " + PairName(d));
    }
  }
  for (const auto& d : eval.zero_shot) {
    if (!known(d.first) || !known(d.second) || d.first == d.second) {
      throw Error("experiment: bad zero-shot direction " + PairName(d));
    }
    for (const auto& l : {d.first, d.second}) {
      if (l == base_lang) {
        throw Error("experiment: zero-shot direction " + PairName(d) + " must not use the base language");
      }
      for (const auto& p : eval.pivots) {
        if (l == p.pivot) {
          throw Error("experiment: zero-shot direction " + PairName(d) + " uses pivot language " + l);
        }
      }
    }
  }
  for (const auto& p : eval.pivots) {
    if (!known(p.src) || !known(p.tgt) || !known(p.pivot)) {
      throw Error("experiment: pivot " + p.Name() + " names an unknown language");
    }
    if (p.pivot == p.tgt || p.pivot == p.src || p.src == p.tgt) {
      throw Error("experiment: pivot " + p.Name() + " must use three distinct languages");
    }
  }
  if (eval.test_size == 0) throw Error("experiment: test_size must be >= 1");
  if (seeds.empty()) throw Error("experiment: no seeds");
  if (vocab_size <= ReservedPieces().size() + languages.size() + 1) {
    throw Error("experiment: vocab_size too small");
  }
  sampling.Validate();
  mass.Validate();
  train.Validate();
}

json ToJson(const ExperimentConfig& c) {
  json langs = json::array();
  for (const auto& e : c.languages) {
    langs.push_back({{"cipher", ToJson(e.cipher)}, {"parallel", e.parallel}, {"mono", e.mono}});
  }
  json arms = json::array();
  for (const auto& a : c.arms) arms.push_back(a.Name());
  json dirs = json::array(), zs = json::array(), pivots = json::array();
  for (const auto& d : c.eval.directions) dirs.push_back(PairName(d));
  for (const auto& d : c.eval.zero_shot) zs.push_back(PairName(d));
  for (const auto& p : c.eval.pivots) pivots.push_back({{"src", p.src}, {"tgt", p.tgt}, {"pivot", p.pivot}});
  json model = ToJson(c.model);
  model.erase("vocab_size");
  return {{"name", c.name},
          {"base_lang", c.base_lang},
          {"generator", ToJson(c.generator)},
          {"languages", langs},
          {"base_mono", c.base_mono},
          {"vocab_size", c.vocab_size},
          {"data_seed", c.data_seed},
          {"arms", arms},
          {"sampling", ToJson(c.sampling)},
          {"mass", ToJson(c.mass)},
          {"model", model},
          {"train", ToJson(c.train)},
          {"eval",
           {{"directions", dirs},
            {"zero_shot", zs},
            {"pivots", pivots},
            {"test_size", c.eval.test_size},
            {"smoothing", SmoothingName(c.eval.smoothing)},
            {"decode",
             {{"beam_size", c.eval.decode.beam_size},
              {"length_penalty", c.eval.decode.length_penalty},
              {"max_len_ratio", c.eval.decode.max_len_ratio},
              {"max_len_extra", c.eval.decode.max_len_extra},
              {"chunk", c.eval.decode.chunk}}}}},
          {"seeds", c.seeds}};
}

ExperimentConfig ExperimentConfigFromJson(const json& j) {
  static const std::set<std::string> kKeys = {"name",     "base_lang", "generator", "languages",
                                              "base_mono", "vocab_size", "data_seed", "arms",
                                              "sampling", "mass",      "model",     "train",
                                              "eval",     "seeds"};
  if (!j.is_object()) throw Error("experiment config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!kKeys.count(it.key())) throw Error("experiment config: unknown key '" + it.key() + "'");
  }
  ExperimentConfig c;
  try {
    c.name = j.value("name", c.name);
    c.base_lang = j.value("base_lang", c.base_lang);
    if (j.contains("generator")) c.generator = GeneratorConfigFromJson(j["generator"]);
    for (const auto& e : j.at("languages")) {
      LanguageEntry le;
      le.cipher = CipherSpecFromJson(e.at("cipher"));
      le.parallel = e.value("parallel", std::size_t{0});
      le.mono = e.value("mono", std::size_t{0});
      c.languages.push_back(le);
    }
    c.base_mono = j.value("base_mono", c.base_mono);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.data_seed = j.value("data_seed", c.data_seed);
    if (j.contains("arms")) {
      for (const auto& a : j["arms"]) c.arms.push_back(ArmSpec::Parse(a.get<std::string>()));
    } else {
      c.arms = {ArmSpec::Parse("multilingual_mono")};
    }
    if (j.contains("sampling")) c.sampling = SamplingPolicyFromJson(j["sampling"]);
    if (j.contains("mass")) c.mass = MaskSpecFromJson(j["mass"]);
    if (j.contains("model")) c.model = ModelConfigFromJson(j["model"]);
    if (j.contains("train")) c.train = TrainConfigFromJson(j["train"]);
    if (j.contains("eval")) {
      const json& e = j["eval"];
      for (const auto& d : e.value("directions", json::array())) c.eval.directions.push_back(ParsePair(d));
      for (const auto& d : e.value("zero_shot", json::array())) c.eval.zero_shot.push_back(ParsePair(d));
      for (const auto& p : e.value("pivots", json::array())) {
        c.eval.pivots.push_back({p.at("src"), p.at("tgt"), p.at("pivot")});
      }
      c.eval.test_size = e.value("test_size", c.eval.test_size);
      c.eval.smoothing = ParseSmoothing(e.value("smoothing", std::string("none")));
      if (e.contains("decode")) {
        const json& d = e["decode"];
        c.eval.decode.beam_size = d.value("beam_size", c.eval.decode.beam_size);
        c.eval.decode.length_penalty = d.value("length_penalty", c.eval.decode.length_penalty);
        c.eval.decode.max_len_ratio = d.value("max_len_ratio", c.eval.decode.max_len_ratio);
        c.eval.decode.max_len_extra = d.value("max_len_extra", c.eval.decode.max_len_extra);
        c.eval.decode.chunk = d.value("chunk", c.eval.decode.chunk);
      }
    }
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  } catch (const json::exception& e) {
    throw Error(std::string("experiment config: ") + e.what());
  }
  c.Validate();
  return c;
}

std::vector<std::uint64_t> ParseSeedList(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = NormalizeWhitespace(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw Error("seed list: '" + item + "' is not an unsigned integer");
    out.push_back(v);
  }
  if (out.empty()) throw Error("seed list is empty");
  return out;
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  ExperimentConfig c = ExperimentConfigFromJson(ParseJsonFile(path));
  if (const char* env = std::getenv("POLYMASS_SEEDS"); env != nullptr && *env != '\0') {
    c.seeds = ParseSeedList(env);
  }
  return c;
}

std::string ConfigHash(const ExperimentConfig& c) { return Hex64(Fnv1a64(ToJson(c).dump())); }

ExperimentConfig DefaultSuiteConfig() {
  ExperimentConfig c;
  c.name = "default-suite";
  c.base_lang = "en";
  c.generator.base_vocab_size = 400;
  c.generator.zipf_s = 1.0;
  c.generator.len_min = 4;
  c.generator.len_max = 12;
  c.generator.context_strength = 0.9;
  c.base_mono = 10000;
  c.vocab_size = 1200;
  auto lang = [](const char* code, std::uint64_t seed, Reorder r) {
    CipherSpec s;
    s.lang = code;
    s.lexicon_seed = seed;
    s.reorder = r;
    return s;
  };
  c.languages.push_back({lang("xa", 11, Reorder::ReverseWindow(3)), 10000, 10000});
  c.languages.push_back({lang("xb", 12, Reorder::AdjacentSwap()), 10000, 10000});
  c.languages.push_back({lang("xc", 13, Reorder::None()), 2000, 10000});
  CipherSpec xd = lang("xd", 14, Reorder::ReverseWindow(3));
  xd.shared_fraction = 0.5;
  xd.relative = "xa";
  c.languages.push_back({xd, 200, 10000});
  c.arms = {ArmSpec::Parse("bilingual"), ArmSpec::Parse("multilingual"),
            ArmSpec::Parse("multilingual_mono")};
  c.sampling.batch_size = 64;
  c.sampling.max_len = 64;
  c.model.n_layers = 2;
  c.model.n_heads = 4;
  c.model.d_model = 64;
  c.model.d_ff = 128;
  c.model.max_positions = 128;
  c.train.total_steps = 5000;
  c.train.warmup_steps = 500;
  c.train.log_every = 50;
  c.eval.directions = {{"xd", "en"}, {"en", "xd"}};
  c.eval.zero_shot = {{"xa", "xd"}};
  c.eval.test_size = 500;
  return c;
}

// ---------------------------------------------------------------------------
// Data

SuiteData BuildSuite(const ExperimentConfig& config) {
  config.Validate();
  const BaseSentenceGenerator gen(config.generator);
  const std::size_t vocab = config.generator.base_vocab_size;
  std::map<LangCode, std::unique_ptr<CipherLanguage>> ciphers;
  for (const auto& e : config.languages) {
    const CipherLanguage* rel = nullptr;
    if (e.cipher.relative) rel = ciphers.at(*e.cipher.relative).get();
    ciphers[e.cipher.lang] = std::make_unique<CipherLanguage>(e.cipher, vocab, rel);
  }

  SuiteData s;
  std::set<std::string> train_text;
  for (std::size_t i = 0; i < config.languages.size(); ++i) {
    const auto& e = config.languages[i];
    const CipherLanguage& c = *ciphers.at(e.cipher.lang);
    if (e.parallel > 0) {
      auto corpus = GenerateCipherCorpus(c, gen, config.base_lang, e.parallel, MixSeed(config.data_seed, 100 + i));
      for (const auto& p : corpus.parallel.pairs) {
        train_text.insert(p.src);
        train_text.insert(p.tgt);
      }
      s.registry.AddParallel(std::move(corpus.parallel));
    }
    if (e.mono > 0) {
      auto corpus = GenerateCipherCorpus(c, gen, config.base_lang, e.mono, MixSeed(config.data_seed, 200 + i));
      train_text.insert(corpus.cipher.sentences.begin(), corpus.cipher.sentences.end());
      s.registry.AddMono(std::move(corpus.cipher));
    }
  }
  if (config.base_mono > 0) {
    const CipherLanguage& first = *ciphers.at(config.languages.front().cipher.lang);
    auto corpus = GenerateCipherCorpus(first, gen, config.base_lang, config.base_mono, MixSeed(config.data_seed, 300));
    train_text.insert(corpus.base.sentences.begin(), corpus.base.sentences.end());
    s.registry.AddMono(std::move(corpus.base));
  }

  // Test pool: fresh base sentences whose every rendering is unseen in training.
  const auto base_words = BaseLexicon(vocab);
  Rng rng(MixSeed(config.data_seed, 400));
  std::set<std::string> pool_seen;
  std::size_t attempts = 0;
  const std::size_t max_attempts = 200 * config.eval.test_size + 1000;
  while (s.test[config.base_lang].size() < config.eval.test_size) {
    if (++attempts > max_attempts) {
      throw Error("could not draw " + std::to_string(config.eval.test_size) +
                  " test sentences disjoint from the training data");
    }
    const auto idx = gen.Sample(rng);
    std::vector<std::string> words;
    for (auto w : idx) words.push_back(base_words[w]);
    std::string base = JoinWords(words);
    if (train_text.count(base) || !pool_seen.insert(base).second) continue;
    std::map<LangCode, std::string> rendered;
    bool clash = false;
    for (const auto& [code, c] : ciphers) {
      rendered[code] = c->Encipher(idx);
      if (train_text.count(rendered[code])) clash = true;
    }
    if (clash) continue;
    s.test[config.base_lang].push_back(base);
    for (auto& [code, text] : rendered) s.test[code].push_back(std::move(text));
  }

  std::vector<std::string> texts(train_text.begin(), train_text.end());
  std::vector<LangCode> langs{config.base_lang};
  for (const auto& e : config.languages) langs.push_back(e.cipher.lang);
  s.vocab = TrainVocab(texts, config.vocab_size, langs);
  return s;
}

void WriteSuite(const SuiteData& suite, const ExperimentConfig& config, const std::string& dir) {
  fs::create_directories(dir);
  std::size_t max_len = config.generator.len_max;
  json parallel = json::array(), mono = json::array();
  for (const auto& [key, store] : suite.registry.parallel()) {
    std::vector<std::string> src, tgt;
    for (const auto& p : store.pairs) {
      src.push_back(p.src);
      tgt.push_back(p.tgt);
      max_len = std::max({max_len, SplitWhitespace(p.src).size(), SplitWhitespace(p.tgt).size()});
    }
    const std::string stem = "train." + store.name() + ".";
    WriteLines(dir + "/" + stem + key.first, src);
    WriteLines(dir + "/" + stem + key.second, tgt);
    parallel.push_back({{"src", stem + key.first}, {"tgt", stem + key.second},
                        {"src_lang", key.first}, {"tgt_lang", key.second}});
  }
  for (const auto& [lang, store] : suite.registry.mono()) {
    for (const auto& s : store.sentences) max_len = std::max(max_len, SplitWhitespace(s).size());
    WriteLines(dir + "/mono." + lang + ".txt", store.sentences);
    mono.push_back({{"path", "mono." + lang + ".txt"}, {"lang", lang}});
  }
  for (const auto& [lang, lines] : suite.test) WriteLines(dir + "/test." + lang + ".txt", lines);
  SaveVocab(suite.vocab, dir + "/vocab.txt");
  const json registry = {{"max_len", max_len}, {"parallel", parallel}, {"mono", mono}};
  WriteFile(dir + "/registry.json", registry.dump(2) + "\n");
  WriteFile(dir + "/registry_stats.json", RegistryStatsJson(suite.registry) + "\n");
}

CorpusRegistry BuildLeaveOneOut(const CorpusRegistry& registry, const LangCode& lang,
                                std::vector<std::string>* warnings) {
  CorpusRegistry out = registry;
  std::size_t removed = 0;
  for (const auto& [key, store] : registry.parallel()) {
    if (key.first == lang || key.second == lang) {
      out.RemoveParallel(key);
      ++removed;
    }
  }
  if (removed == 0 && warnings != nullptr) {
    warnings->push_back("leave-one-out: no parallel store involves '" + lang + "'");
  }
  return out;
}

ArmData MakeArmData(const ExperimentConfig& config, const CorpusRegistry& full, const ArmSpec& arm,
                    const LangCode& pair_lang) {
  ArmData d;
  auto without_mono = [](const CorpusRegistry& r) {
    CorpusRegistry out;
    for (const auto& [k, p] : r.parallel()) out.AddParallel(p);
    return out;
  };
  switch (arm.kind) {
    case ArmSpec::Kind::kBilingual: {
      const LangCode& base = config.base_lang;
      for (const auto& [k, p] : full.parallel()) {
        if ((k.first == base && k.second == pair_lang) || (k.first == pair_lang && k.second == base)) {
          d.registry.AddParallel(p);
        }
      }
      if (d.registry.parallel().empty()) {
        throw Error("bilingual arm: no parallel store for " + base + "-" + pair_lang);
      }
      d.mono_ratio = 0.0;
      break;
    }
    case ArmSpec::Kind::kMultilingual:
      d.registry = without_mono(full);
      d.mono_ratio = 0.0;
      break;
    case ArmSpec::Kind::kMultilingualMono:
      d.registry = full;
      d.mono_ratio = config.sampling.mono_ratio;
      break;
    case ArmSpec::Kind::kLeaveOneOut:
      if (!full.mono().count(arm.lang)) throw Error(arm.Name() + ": no mono data for " + arm.lang);
      d.registry = BuildLeaveOneOut(full, arm.lang);
      d.mono_ratio = config.sampling.mono_ratio;
      break;
    case ArmSpec::Kind::kLeaveOneOutNoMono:
      d.registry = without_mono(BuildLeaveOneOut(full, arm.lang));
      d.mono_ratio = 0.0;
      break;
    case ArmSpec::Kind::kMonoOnly:
      for (const auto& l : {config.base_lang, arm.lang}) {
        auto it = full.mono().find(l);
        if (it == full.mono().end()) throw Error(arm.Name() + ": no mono data for " + l);
        d.registry.AddMono(it->second);
      }
      d.mono_ratio = 1.0;
      break;
  }
  if (d.mono_ratio > 0.0 && d.registry.mono().empty()) d.mono_ratio = 0.0;
  return d;
}

// ---------------------------------------------------------------------------
// Single jobs

JobConfig JobConfigFromJson(const json& j, const std::string& base_dir) {
  static const std::set<std::string> kKeys = {"registry", "vocab", "vocab_size", "sampling",
                                              "mass",     "model", "train"};
  if (!j.is_object()) throw Error("job config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!kKeys.count(it.key())) throw Error("job config: unknown key '" + it.key() + "'");
  }
  auto resolve = [&](const std::string& p) {
    const fs::path fp(p);
    return (fp.is_absolute() ? fp : fs::path(base_dir) / fp).string();
  };
  JobConfig c;
  try {
    if (j.contains("registry")) c.registry = resolve(j["registry"].get<std::string>());
    if (j.contains("vocab")) c.vocab = resolve(j["vocab"].get<std::string>());
    c.vocab_size = j.value("vocab_size", c.vocab_size);
  } catch (const json::exception& e) {
    throw Error(std::string("job config: ") + e.what());
  }
  if (j.contains("sampling")) c.job.policy = SamplingPolicyFromJson(j["sampling"]);
  if (j.contains("mass")) c.job.mask = MaskSpecFromJson(j["mass"]);
  if (j.contains("model")) c.job.model = ModelConfigFromJson(j["model"]);
  if (j.contains("train")) c.job.train = TrainConfigFromJson(j["train"]);
  c.job.policy.Validate();
  c.job.mask.Validate();
  c.job.train.Validate();
  return c;
}

JobConfig LoadJobConfig(const std::string& path) {
  return JobConfigFromJson(ParseJsonFile(path), fs::path(path).parent_path().string());
}

Vocabulary JobVocabulary(const JobConfig& config, const CorpusRegistry& registry) {
  if (!config.vocab.empty()) return LoadVocab(config.vocab);
  std::vector<std::string> texts;
  for (const auto& [key, store] : registry.parallel()) {
    for (const auto& p : store.pairs) {
      texts.push_back(p.src);
      texts.push_back(p.tgt);
    }
  }
  for (const auto& [lang, store] : registry.mono()) {
    texts.insert(texts.end(), store.sentences.begin(), store.sentences.end());
  }
  return TrainVocab(texts, config.vocab_size, registry.Languages());
}

// ---------------------------------------------------------------------------
// Report

double Median(std::vector<double> v) {
  if (v.empty()) throw Error("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double ReportRound(double bleu) { return std::round(bleu * 100.0) / 100.0; }

std::optional<double> ExperimentReport::Median(const std::string& arm,
                                               const std::string& direction) const {
  for (const auto& row : summary) {
    if (row.arm == arm && row.direction == direction && row.seeds_ok > 0) return row.median_bleu;
  }
  return std::nullopt;
}

void FinalizeReport(ExperimentReport& report) {
  std::sort(report.cells.begin(), report.cells.end(), [](const ReportCell& a, const ReportCell& b) {
    return std::tie(a.arm, a.direction, a.seed) < std::tie(b.arm, b.direction, b.seed);
  });
  report.summary.clear();
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& c : report.cells) {
    auto& g = groups[{c.arm, c.direction}];
    if (c.ok) g.push_back(c.bleu.bleu);
  }
  for (const auto& [key, values] : groups) {
    SummaryRow row{key.first, key.second, values.size(), 0.0};
    if (!values.empty()) row.median_bleu = ReportRound(polymass::Median(values));
    report.summary.push_back(row);
  }
}

std::string BuildId() { return POLYMASS_GIT_DESCRIBE; }

namespace {

json ReportToJson(const ExperimentReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    json j = {{"arm", c.arm},
              {"direction", c.direction},
              {"seed", c.seed},
              {"status", c.ok ? "ok" : "failed"}};
    if (c.ok) {
      j["bleu"] = ReportRound(c.bleu.bleu);
      j["detail"] = BleuToJson(c.bleu);
      j["checkpoint"] = c.checkpoint;
      j["hypotheses"] = c.hypotheses;
    } else {
      j["reason"] = c.reason;
    }
    cells.push_back(j);
  }
  json summary = json::array();
  for (const auto& s : r.summary) {
    json j = {{"arm", s.arm}, {"direction", s.direction}, {"seeds_ok", s.seeds_ok}};
    j["median_bleu"] = s.seeds_ok > 0 ? json(s.median_bleu) : json(nullptr);
    summary.push_back(j);
  }
  return {{"name", r.name},
          {"config_hash", r.config_hash},
          {"build_id", r.build_id},
          {"cells", cells},
          {"summary", summary}};
}

std::string Fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

ExperimentReport ReportFromJson(const json& j) {
  ExperimentReport r;
  try {
    r.name = j.at("name").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.build_id = j.at("build_id").get<std::string>();
    for (const auto& c : j.at("cells")) {
      ReportCell cell;
      cell.arm = c.at("arm").get<std::string>();
      cell.direction = c.at("direction").get<std::string>();
      cell.seed = c.at("seed").get<std::uint64_t>();
      cell.ok = c.at("status").get<std::string>() == "ok";
      if (cell.ok) {
        cell.bleu = BleuFromJson(c.at("detail"));
        cell.checkpoint = c.value("checkpoint", "");
        cell.hypotheses = c.value("hypotheses", "");
      } else {
        cell.reason = c.value("reason", "");
      }
      r.cells.push_back(cell);
    }
  } catch (const json::exception& e) {
    throw Error(std::string("report: ") + e.what());
  }
  FinalizeReport(r);
  return r;
}

ExperimentReport LoadExperimentReport(const std::string& run_dir) {
  return ReportFromJson(ParseJsonFile(run_dir + "/report.json"));
}

std::string FormatReport(const ExperimentReport& r, const std::string& format) {
  if (format == "json") return ReportToJson(r).dump(2) + "\n";
  if (format == "csv") {
    std::string out = "kind,arm,direction,seed,status,bleu,reason\n";
    for (const auto& c : r.cells) {
      out += "cell," + CsvField(c.arm) + "," + CsvField(c.direction) + "," + std::to_string(c.seed) +
             "," + (c.ok ? "ok" : "failed") + "," + (c.ok ? Fixed2(ReportRound(c.bleu.bleu)) : "") +
             "," + CsvField(c.reason) + "\n";
    }
    for (const auto& s : r.summary) {
      out += "median," + CsvField(s.arm) + "," + CsvField(s.direction) + "," +
             std::to_string(s.seeds_ok) + "," + (s.seeds_ok > 0 ? "ok" : "failed") + "," +
             (s.seeds_ok > 0 ? Fixed2(s.median_bleu) : "") + ",\n";
    }
    return out;
  }
  if (format == "txt") {
    std::size_t wa = 3, wd = 9;
    for (const auto& c : r.cells) {
      wa = std::max(wa, c.arm.size());
      wd = std::max(wd, c.direction.size());
    }
    auto pad = [](std::string s, std::size_t w) {
      s.resize(std::max(w, s.size()), ' ');
      return s;
    };
    std::string out = "experiment " + r.name + "  config " + r.config_hash + "  build " + r.build_id + "\n\n";
    out += pad("arm", wa) + "  " + pad("direction", wd) + "  " + pad("seed", 6) + "  bleu\n";
    for (const auto& c : r.cells) {
      out += pad(c.arm, wa) + "  " + pad(c.direction, wd) + "  " + pad(std::to_string(c.seed), 6) +
             "  " + (c.ok ? Fixed2(ReportRound(c.bleu.bleu)) : "failed: " + c.reason) + "\n";
    }
    out += "\nmedian over seeds\n";
    out += pad("arm", wa) + "  " + pad("direction", wd) + "  " + pad("seeds", 6) + "  bleu\n";
    for (const auto& s : r.summary) {
      out += pad(s.arm, wa) + "  " + pad(s.direction, wd) + "  " + pad(std::to_string(s.seeds_ok), 6) +
             "  " + (s.seeds_ok > 0 ? Fixed2(s.median_bleu) : "-") + "\n";
    }
    return out;
  }
  throw Error("unknown report format '" + format + "' (json, txt, csv)");
}

std::string EmitReport(const ExperimentReport& report, const std::string& dir,
                       const std::string& format) {
  const std::string text = FormatReport(report, format);
  fs::create_directories(dir);
  const std::string path = dir + "/report." + format;
  WriteFile(path, text);
  return path;
}

// ---------------------------------------------------------------------------
// Runs

ExperimentReport RunExperiment(const ExperimentConfig& config, const std::string& out_dir,
                               const RunOptions& options) {
  config.Validate();
  const SuiteData suite = BuildSuite(config);
  WriteSuite(suite, config, out_dir + "/data");
  WriteFile(out_dir + "/config.json", ToJson(config).dump(2) + "\n");

  ExperimentReport report;
  report.name = config.name;
  report.config_hash = ConfigHash(config);
  report.build_id = BuildId();

  auto test_store = [&](const LangPair& d) {
    ParallelStore st{d.first, d.second, {}};
    const auto& s = suite.test.at(d.first);
    const auto& t = suite.test.at(d.second);
    for (std::size_t i = 0; i < s.size(); ++i) st.pairs.push_back({s[i], t[i]});
    return st;
  };

  std::vector<LangPair> directions = config.eval.directions;
  directions.insert(directions.end(), config.eval.zero_shot.begin(), config.eval.zero_shot.end());

  // Data section of the config; a cell's checkpoint is reusable when this,
  // the arm and the seed match.
  json data_key = ToJson(config);
  data_key.erase("arms");
  data_key.erase("seeds");
  data_key.erase("eval");
  data_key.erase("name");

  for (const auto& arm : config.arms) {
    // Bilingual arms train one model per (base, L) pair named by a direction.
    std::vector<LangCode> units;
    if (arm.kind == ArmSpec::Kind::kBilingual) {
      std::set<LangCode> needed;
      for (const auto& d : directions) {
        if (d.first == config.base_lang) needed.insert(d.second);
        if (d.second == config.base_lang) needed.insert(d.first);
      }
      units.assign(needed.begin(), needed.end());
    } else {
      units.push_back("");
    }

    for (const std::uint64_t seed : config.seeds) {
      std::map<LangCode, std::string> checkpoints;
      std::map<LangCode, std::string> failures;
      for (const auto& unit : units) {
        std::string cell_dir = out_dir + "/arms/" + ArmDirName(arm);
        if (!unit.empty()) cell_dir += "/" + unit;
        cell_dir += "/seed_" + std::to_string(seed);
        try {
          const ArmData data = MakeArmData(config, suite.registry, arm, unit);
          TrainJob job;
          job.policy = config.sampling;
          job.policy.mono_ratio = data.mono_ratio;
          job.policy.seed = MixSeed(seed, 11);
          job.mask = config.mass;
          job.model = config.model;
          job.model.vocab_size = suite.vocab.size();
          job.train = config.train;
          job.train.seed = seed;
          json key = {{"data", data_key}, {"arm", arm.Name()}, {"unit", unit}, {"seed", seed},
                      {"job", {{"sampling", ToJson(job.policy)}, {"mass", ToJson(job.mask)},
                               {"model", ToJson(job.model)}, {"train", ToJson(job.train)}}}};
          const std::string key_text = key.dump(2) + "\n";
          const std::string final_dir = cell_dir + "/final";
          const bool reusable = options.reuse && fs::exists(final_dir + "/manifest.json") &&
                                fs::exists(cell_dir + "/job.json") &&
                                ReadFile(cell_dir + "/job.json") == key_text;
          if (!reusable) {
            fs::remove_all(cell_dir);
            fs::create_directories(cell_dir);
            if (options.progress_every != 0) {
              std::fprintf(stderr, "training %s%s seed %llu\n", arm.Name().c_str(),
                           unit.empty() ? "" : (" (" + unit + ")").c_str(),
                           static_cast<unsigned long long>(seed));
            }
            TrainOptions topts;
            topts.progress_every = options.progress_every;
            Train(data.registry, suite.vocab, job, cell_dir, topts);
            WriteFile(cell_dir + "/job.json", key_text);
          }
          checkpoints[unit] = final_dir;
        } catch (const std::exception& e) {
          failures[unit] = e.what();
        }
      }

      auto model_for = [&](const LangPair& d, std::string* reason) -> std::string {
        LangCode unit;
        if (arm.kind == ArmSpec::Kind::kBilingual) {
          if (d.first == config.base_lang) {
            unit = d.second;
          } else if (d.second == config.base_lang) {
            unit = d.first;
          } else {
            *reason = "no bilingual model covers " + PairName(d);
            return "";
          }
        }
        if (failures.count(unit)) {
          *reason = "training failed: " + failures[unit];
          return "";
        }
        return checkpoints.at(unit);
      };

      std::map<std::string, LoadedModel> loaded;
      auto load = [&](const std::string& dir) -> const LoadedModel& {
        auto it = loaded.find(dir);
        if (it == loaded.end()) it = loaded.emplace(dir, LoadCheckpoint(dir)).first;
        return it->second;
      };

      for (const auto& d : directions) {
        ReportCell cell{arm.Name(), PairName(d), seed, false, "", {}, "", ""};
        std::string reason;
        const std::string ckpt = model_for(d, &reason);
        if (ckpt.empty()) {
          cell.reason = reason;
        } else {
          try {
            const LoadedModel& m = load(ckpt);
            const DirectionScore score = ScoreDirection(m.params, m.vocab, test_store(d), config.eval.decode,
                                                        config.eval.smoothing);
            const std::string hyp_path = fs::path(ckpt).parent_path().string() + "/hyp." + PairName(d) + ".txt";
            WriteLines(hyp_path, score.hypotheses);
            cell.ok = true;
            cell.bleu = score.bleu;
            cell.checkpoint = ckpt;
            cell.hypotheses = hyp_path;
          } catch (const std::exception& e) {
            cell.reason = std::string("evaluation failed: ") + e.what();
          }
        }
        report.cells.push_back(cell);
      }

      for (const auto& p : config.eval.pivots) {
        ReportCell cell{arm.Name(), p.Name(), seed, false, "", {}, "", ""};
        std::string reason;
        const std::string ckpt = arm.kind == ArmSpec::Kind::kBilingual ? "" : model_for({p.src, p.tgt}, &reason);
        if (ckpt.empty()) {
          cell.reason = reason.empty() ? "pivoting needs one model covering all three languages" : reason;
        } else {
          try {
            const LoadedModel& m = load(ckpt);
            const auto hyps = PivotTranslate(m.params, m.vocab, suite.test.at(p.src), p.pivot, p.tgt,
                                             config.eval.decode);
            const std::string hyp_path = fs::path(ckpt).parent_path().string() + "/hyp." + p.src + "-" +
                                         p.tgt + ".via." + p.pivot + ".txt";
            WriteLines(hyp_path, hyps);
            cell.ok = true;
            cell.bleu = CorpusBleu(hyps, suite.test.at(p.tgt), config.eval.smoothing);
            cell.checkpoint = ckpt;
            cell.hypotheses = hyp_path;
          } catch (const std::exception& e) {
            cell.reason = std::string("evaluation failed: ") + e.what();
          }
        }
        report.cells.push_back(cell);
      }
    }
  }

  FinalizeReport(report);
  for (const char* fmt : {"json", "txt", "csv"}) EmitReport(report, out_dir, fmt);
  return report;
}

}  // namespace polymass
