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
#include <filesystem>

#include "json.hpp"
#include "polymass/corpus.hpp"

namespace polymass {

namespace {

std::size_t WordCount(const std::string& normalized) {
  if (normalized.empty()) return 0;
  std::size_t n = 1;
  for (char c : normalized) n += (c == ' ');
  return n;
}

}  // namespace

ParallelStore MakeParallel(const std::vector<std::string>& src_lines,
                           const std::vector<std::string>& tgt_lines,
                           LangCode src_lang, LangCode tgt_lang,
                           std::size_t max_len, LoadReport* report) {
  if (src_lang == tgt_lang) {
    throw Error("parallel store needs two distinct languages, got '" + src_lang + "' twice");
  }
  if (src_lines.size() != tgt_lines.size()) {
    throw Error("parallel corpus " + src_lang + "-" + tgt_lang +
                " is misaligned: source has " + std::to_string(src_lines.size()) +
                " lines, target has " + std::to_string(tgt_lines.size()));
  }
  LoadReport r;
  r.lines = src_lines.size();
  ParallelStore store{std::move(src_lang), std::move(tgt_lang), {}};
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    std::string s = NormalizeWhitespace(src_lines[i]);
    std::string t = NormalizeWhitespace(tgt_lines[i]);
    if (s.empty() || t.empty()) {
      ++r.dropped_empty;
      continue;
    }
    if (WordCount(s) > max_len || WordCount(t) > max_len) {
      ++r.dropped_too_long;
      continue;
    }
    store.pairs.push_back({std::move(s), std::move(t)});
  }
  r.kept = store.pairs.size();
  if (report) *report = r;
  return store;
}

ParallelStore LoadParallel(const std::string& src_path, const std::string& tgt_path,
                           LangCode src_lang, LangCode tgt_lang,
                           std::size_t max_len, LoadReport* report) {
  return MakeParallel(ReadLines(src_path), ReadLines(tgt_path), std::move(src_lang),
                      std::move(tgt_lang), max_len, report);
}

MonoStore MakeMono(const std::vector<std::string>& lines, LangCode lang,
                   std::size_t max_len, LoadReport* report) {
  LoadReport r;
  r.lines = lines.size();
  MonoStore store{std::move(lang), {}};
  for (const auto& line : lines) {
    std::string s = NormalizeWhitespace(line);
    if (s.empty()) {
      ++r.dropped_empty;
      continue;
    }
    if (WordCount(s) > max_len) {
      auto words = SplitWhitespace(s);
      words.resize(max_len);
      s = JoinWords(words);
      ++r.truncated;
    }
    store.sentences.push_back(std::move(s));
  }
  r.kept = store.sentences.size();
  if (report) *report = r;
  if (store.sentences.empty()) {
    throw Error("monolingual corpus for '" + store.lang + "' is empty after filtering");
  }
  return store;
}

MonoStore LoadMono(const std::string& path, LangCode lang, std::size_t max_len,
                   LoadReport* report) {
  return MakeMono(ReadLines(path), std::move(lang), max_len, report);
}

void CorpusRegistry::AddParallel(ParallelStore store) {
  LangPair key{store.src_lang, store.tgt_lang};
  if (store.pairs.empty()) throw Error("parallel store " + store.name() + " is empty");
  if (parallel_.count(key) || parallel_.count({key.second, key.first})) {
    throw Error("registry already holds a parallel store for " + store.name());
  }
  parallel_.emplace(std::move(key), std::move(store));
}

void CorpusRegistry::AddMono(MonoStore store) {
  if (store.sentences.empty()) throw Error("mono store " + store.lang + " is empty");
  if (mono_.count(store.lang)) {
    throw Error("registry already holds a mono store for " + store.lang);
  }
  LangCode key = store.lang;
  mono_.emplace(std::move(key), std::move(store));
}

std::optional<ParallelStore> CorpusRegistry::RemoveParallel(const LangPair& key) {
  auto it = parallel_.find(key);
  if (it == parallel_.end()) return std::nullopt;
  ParallelStore out = std::move(it->second);
  parallel_.erase(it);
  return out;
}

std::vector<LangCode> CorpusRegistry::Languages() const {
  std::vector<LangCode> langs;
  for (const auto& [k, _] : parallel_) {
    langs.push_back(k.first);
    langs.push_back(k.second);
  }
  for (const auto& [l, _] : mono_) langs.push_back(l);
  std::sort(langs.begin(), langs.end());
  langs.erase(std::unique(langs.begin(), langs.end()), langs.end());
  return langs;
}

std::vector<StoreCount> RegistryStats(const CorpusRegistry& registry) {
  std::vector<StoreCount> rows;
  for (const auto& [_, s] : registry.parallel()) {
    rows.push_back({s.name(), "parallel", s.size()});
  }
  for (const auto& [_, s] : registry.mono()) rows.push_back({s.lang, "mono", s.size()});
  return rows;
}

std::string RegistryStatsJson(const CorpusRegistry& registry) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : RegistryStats(registry)) {
    rows.push_back({{"store", r.store}, {"kind", r.kind}, {"count", r.count}});
  }
  return rows.dump(2);
}

CorpusRegistry LoadRegistryConfig(const std::string& path) {
  namespace fs = std::filesystem;
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("registry config '" + path + "': " + e.what());
  }
  const fs::path dir = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path fp(p);
    return (fp.is_absolute() ? fp : dir / fp).string();
  };
  const std::size_t max_len = cfg.value("max_len", std::size_t{128});
  CorpusRegistry reg;
  try {
    for (const auto& p : cfg.value("parallel", nlohmann::json::array())) {
      reg.AddParallel(LoadParallel(resolve(p.at("src")), resolve(p.at("tgt")),
                                   p.at("src_lang"), p.at("tgt_lang"), max_len));
    }
    for (const auto& m : cfg.value("mono", nlohmann::json::array())) {
      reg.AddMono(LoadMono(resolve(m.at("path")), m.at("lang"), max_len));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("registry config '" + path + "': " + e.what());
  }
  return reg;
}

}  // namespace polymass
