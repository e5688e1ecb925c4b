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

// Experiment orchestration on synthetic cipher-language suites.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "polymass/corpus.hpp"
#include "polymass/eval.hpp"
#include "polymass/mass.hpp"
#include "polymass/model.hpp"
#include "polymass/sampler.hpp"
#include "polymass/subword.hpp"
#include "polymass/trainer.hpp"

namespace polymass {

struct LanguageEntry {
  CipherSpec cipher;
  std::size_t parallel = 0;  // pairs with the base language
  std::size_t mono = 0;
};

// Training arms:
//   bilingual              one model per (base, L) pair, parallel data only
//   multilingual           every parallel store, no monolingual data
//   multilingual_mono      every parallel and mono store, configured mono_ratio
//   leave_one_out:L        multilingual_mono without any parallel store touching L
//   leave_one_out_nomono:L the same removal, no monolingual data
//   mono_only:L            MASS on the mono stores of L and the base only
struct ArmSpec {
  enum class Kind {
    kBilingual,
    kMultilingual,
    kMultilingualMono,
    kLeaveOneOut,
    kLeaveOneOutNoMono,
    kMonoOnly
  };
  Kind kind = Kind::kMultilingual;
  LangCode lang;  // for the per-language arms

  std::string Name() const;
  static ArmSpec Parse(const std::string& s);
  friend bool operator==(const ArmSpec&, const ArmSpec&) = default;
};

struct PivotSetting {
  LangCode src;
  LangCode tgt;
  LangCode pivot;
  std::string Name() const { return src + "-" + tgt + " via " + pivot; }
};

struct EvalSettings {
  std::vector<LangPair> directions;
  // Cipher-to-cipher directions without parallel data.
  std::vector<LangPair> zero_shot;
  std::vector<PivotSetting> pivots;
  DecodeSettings decode;
  Smoothing smoothing;
  std::size_t test_size = 500;
};

struct ExperimentConfig {
  std::string name = "experiment";
  LangCode base_lang = "en";
  GeneratorConfig generator;
  std::vector<LanguageEntry> languages;
  std::size_t base_mono = 0;
  std::size_t vocab_size = 1000;
  std::uint64_t data_seed = 1;
  std::vector<ArmSpec> arms;
  SamplingPolicy sampling;
  MaskSpec mass;
  ModelConfig model;  // vocab_size is filled from the trained vocabulary
  TrainConfig train;
  EvalSettings eval;
  std::vector<std::uint64_t> seeds = {1, 2, 3};

  void Validate() const;
  const LanguageEntry* Find(const LangCode& lang) const;
};

nlohmann::json ToJson(const ExperimentConfig& c);
ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& j);
// Reads a config file and applies the POLYMASS_SEEDS override ("1,2,3").
ExperimentConfig LoadExperimentConfig(const std::string& path);
std::vector<std::uint64_t> ParseSeedList(const std::string& s);
// Hex FNV-1a of the canonical JSON form.
std::string ConfigHash(const ExperimentConfig& c);

// One base language and four ciphers with 10000/10000/2000/200 parallel
// pairs and 10000 mono sentences each; the 200-pair language shares half of
// its lexicon with the first cipher. Trains a 2-layer, d_model 64 model for
// 5000 steps of 64 sentences.
ExperimentConfig DefaultSuiteConfig();

struct SuiteData {
  CorpusRegistry registry;
  // Test sentences per language, aligned across languages.
  std::map<LangCode, std::vector<std::string>> test;
  Vocabulary vocab;
};

// Generates every store and the test pool, then trains the shared vocabulary.
SuiteData BuildSuite(const ExperimentConfig& config);

// Writes the suite as plain-text corpora under `dir`:
//   train.<base>-<L>.<base|L>, mono.<L>.txt, test.<L>.txt, vocab.txt and
//   registry.json (loadable with LoadRegistryConfig).
void WriteSuite(const SuiteData& suite, const ExperimentConfig& config, const std::string& dir);

// Drops every parallel store with `lang` on either side. Adds a warning when
// nothing was removed.
CorpusRegistry BuildLeaveOneOut(const CorpusRegistry& registry, const LangCode& lang,
                                std::vector<std::string>* warnings = nullptr);

// Training data and policy of one arm. For bilingual arms `pair_lang` names
// the non-base language of the pair.
struct ArmData {
  CorpusRegistry registry;
  double mono_ratio = 0.0;
};
ArmData MakeArmData(const ExperimentConfig& config, const CorpusRegistry& full, const ArmSpec& arm,
                    const LangCode& pair_lang = "");

// Single training job, used by sample-stats, train and grad-check:
//   {"registry": path, "vocab": path, "vocab_size": n,
//    "sampling": {...}, "mass": {...}, "model": {...}, "train": {...}}
// Paths are relative to the config file. Without "vocab" a vocabulary of
// vocab_size pieces is trained on the registry text.
struct JobConfig {
  std::string registry;
  std::string vocab;
  std::size_t vocab_size = 1000;
  TrainJob job;
};
JobConfig JobConfigFromJson(const nlohmann::json& j, const std::string& base_dir = ".");
JobConfig LoadJobConfig(const std::string& path);
// Loads or trains the job's vocabulary over every language of `registry`.
Vocabulary JobVocabulary(const JobConfig& config, const CorpusRegistry& registry);

struct ReportCell {
  std::string arm;
  std::string direction;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string reason;
  BleuResult bleu;
  std::string checkpoint;
  std::string hypotheses;
};

struct SummaryRow {
  std::string arm;
  std::string direction;
  std::size_t seeds_ok = 0;
  double median_bleu = 0.0;
};

struct ExperimentReport {
  std::string name;
  std::string config_hash;
  std::string build_id;
  std::vector<ReportCell> cells;  // sorted by (arm, direction, seed)
  std::vector<SummaryRow> summary;

  // Median BLEU over seeds; nullopt when no seed succeeded.
  std::optional<double> Median(const std::string& arm, const std::string& direction) const;
};

double Median(std::vector<double> values);
// Rounds BLEU to the two decimals every report format shows.
double ReportRound(double bleu);
void FinalizeReport(ExperimentReport& report);

std::string BuildId();

struct RunOptions {
  std::size_t progress_every = 0;
  // Reuse finished (arm, seed) checkpoints from an earlier run of the same
  // config in the same directory.
  bool reuse = true;
};

ExperimentReport RunExperiment(const ExperimentConfig& config, const std::string& out_dir,
                               const RunOptions& options = {});

std::string FormatReport(const ExperimentReport& report, const std::string& format);
// Writes <dir>/report.<format>; returns the path.
std::string EmitReport(const ExperimentReport& report, const std::string& dir,
                       const std::string& format);
ExperimentReport ReportFromJson(const nlohmann::json& j);
ExperimentReport LoadExperimentReport(const std::string& run_dir);

}  // namespace polymass
