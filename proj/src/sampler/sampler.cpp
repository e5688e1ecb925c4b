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

#include "polymass/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace polymass {

void SamplingPolicy::Validate() const {
  if (!(temperature > 0.0)) throw Error("SamplingPolicy: temperature must be positive");
  if (!(mono_ratio >= 0.0 && mono_ratio <= 1.0)) {
    throw Error("SamplingPolicy: mono_ratio must lie in [0, 1]");
  }
  if (batch_size == 0) throw Error("SamplingPolicy: batch_size must be positive");
  if (max_len < 3) throw Error("SamplingPolicy: max_len must be at least 3");
}

std::map<std::string, double> LanguageProbabilities(
    const std::map<std::string, std::size_t>& sizes, double temperature) {
  if (!(temperature > 0.0)) throw Error("LanguageProbabilities: temperature must be positive");
  if (sizes.empty()) throw Error("LanguageProbabilities: no stores");
  double max_log = -INFINITY;
  for (const auto& [name, n] : sizes) {
    if (n == 0) {
      throw Error("LanguageProbabilities: store '" + name +
                  "' is empty; exclude it before sampling");
    }
    max_log = std::max(max_log, std::log(static_cast<double>(n)));
  }
  // Weights relative to the largest store keep the exponent well scaled.
  std::map<std::string, double> probs;
  double total = 0.0;
  for (const auto& [name, n] : sizes) {
    const double w = std::exp((std::log(static_cast<double>(n)) - max_log) / temperature);
    probs[name] = w;
    total += w;
  }
  for (auto& [_, p] : probs) p /= total;
  return probs;
}

SourceSchedule::SourceSchedule(const CorpusRegistry& registry, const SamplingPolicy& policy)
    : policy_(policy) {
  policy_.Validate();
  for (const auto& [key, store] : registry.parallel()) {
    translation_.push_back({store.src_lang + "-" + store.tgt_lang, store.src_lang,
                            store.tgt_lang, key, false, store.size()});
    translation_.push_back({store.tgt_lang + "-" + store.src_lang, store.tgt_lang,
                            store.src_lang, key, true, store.size()});
  }
  std::sort(translation_.begin(), translation_.end(),
            [](const auto& a, const auto& b) { return a.label < b.label; });
  for (const auto& [lang, store] : registry.mono()) {
    mono_.push_back({lang, lang, lang, {}, false, store.size()});
  }
  if (policy_.mono_ratio > 0.0 && mono_.empty()) {
    throw Error("SamplingPolicy: mono_ratio > 0 requires at least one monolingual store");
  }
  if (policy_.mono_ratio < 1.0 && translation_.empty()) {
    throw Error("SamplingPolicy: mono_ratio < 1 requires at least one parallel store");
  }
  if (!translation_.empty()) {
    std::map<std::string, std::size_t> sizes;
    for (const auto& u : translation_) sizes[u.label] = u.size;
    const auto p = LanguageProbabilities(sizes, policy_.temperature);
    double acc = 0.0;
    for (const auto& u : translation_) {
      probs_.push_back(p.at(u.label));
      acc += probs_.back();
      cdf_.push_back(acc);
    }
    cdf_.back() = 1.0;
  }
}

BatchHeader SourceSchedule::Draw(Rng& rng) const {
  BatchHeader h;
  if (rng.Bernoulli(policy_.mono_ratio)) {
    h.objective = Objective::kMass;
    h.unit = rng.UniformInt(mono_.size());
  } else {
    h.objective = Objective::kTranslation;
    const double u = rng.UniformReal();
    h.unit = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) -
                                      cdf_.begin());
    h.unit = std::min(h.unit, translation_.size() - 1);
  }
  return h;
}

const std::string& SourceSchedule::label(const BatchHeader& h) const {
  return h.objective == Objective::kMass ? mono_.at(h.unit).label
                                         : translation_.at(h.unit).label;
}

SampleStats ComputeSampleStats(const CorpusRegistry& registry,
                               const SamplingPolicy& policy, std::size_t n_draws) {
  const SourceSchedule schedule(registry, policy);
  Rng rng(policy.seed);
  std::map<std::string, std::size_t> t_counts, m_counts;
  std::size_t n_mono = 0;
  for (std::size_t i = 0; i < n_draws; ++i) {
    const BatchHeader h = schedule.Draw(rng);
    if (h.objective == Objective::kMass) {
      ++n_mono;
      ++m_counts[schedule.label(h)];
    } else {
      ++t_counts[schedule.label(h)];
    }
  }
  SampleStats s;
  s.draws = n_draws;
  s.mono_fraction = n_draws ? static_cast<double>(n_mono) / n_draws : 0.0;
  const std::size_t n_trans = n_draws - n_mono;
  for (const auto& u : schedule.translation_units()) {
    s.translation_freq[u.label] =
        n_trans ? static_cast<double>(t_counts[u.label]) / n_trans : 0.0;
  }
  for (const auto& u : schedule.mono_units()) {
    s.mono_freq[u.label] = n_mono ? static_cast<double>(m_counts[u.label]) / n_mono : 0.0;
  }
  for (std::size_t i = 0; i < schedule.translation_units().size(); ++i) {
    s.expected_translation[schedule.translation_units()[i].label] =
        schedule.translation_probs()[i];
  }
  return s;
}

std::string SampleStatsJson(const SampleStats& stats) {
  nlohmann::json j;
  j["draws"] = stats.draws;
  j["mono_fraction"] = stats.mono_fraction;
  j["translation"] = nlohmann::json::object();
  for (const auto& [label, f] : stats.translation_freq) {
    j["translation"][label] = {{"empirical", f},
                               {"expected", stats.expected_translation.at(label)}};
  }
  j["mono"] = stats.mono_freq;
  return j.dump(2);
}

BatchSampler::BatchSampler(const CorpusRegistry& registry, const Vocabulary& vocab,
                           SamplingPolicy policy, MaskSpec mask)
    : vocab_(&vocab),
      policy_(policy),
      mask_(mask),
      schedule_(registry, policy),
      rng_(policy.seed) {
  mask_.Validate();
  if (policy_.mono_ratio > 0.0 && mask_.min_len + 2 > policy_.max_len) {
    throw Error("SamplingPolicy: max_len leaves no room for MASS sentences of min_len");
  }
  for (const auto& u : schedule_.translation_units()) {
    if (!vocab.HasLanguage(u.tgt)) {
      throw Error("vocabulary has no tag for target language '" + u.tgt + "'");
    }
  }
  if (policy_.mono_ratio < 1.0) {
    for (const auto& [key, store] : registry.parallel()) {
      EncodedParallel enc;
      enc.src.reserve(store.size());
      enc.tgt.reserve(store.size());
      for (const auto& p : store.pairs) {
        enc.src.push_back(vocab.Encode(p.src));
        enc.tgt.push_back(vocab.Encode(p.tgt));
      }
      parallel_.emplace(key, std::move(enc));
    }
  }
  if (policy_.mono_ratio > 0.0) {
    for (const auto& [lang, store] : registry.mono()) {
      if (!vocab.HasLanguage(lang)) {
        throw Error("vocabulary has no tag for language '" + lang + "'");
      }
      EncodedMono enc;
      enc.sentences.reserve(store.size());
      for (const auto& s : store.sentences) {
        enc.sentences.push_back(vocab.Encode(s));
        if (enc.sentences.back().size() >= mask_.min_len) {
          enc.eligible.push_back(enc.sentences.size() - 1);
        }
      }
      if (enc.eligible.empty()) {
        throw Error("mono store '" + lang + "' has no sentence of at least " +
                    std::to_string(mask_.min_len) + " tokens");
      }
      mono_.emplace(lang, std::move(enc));
    }
  }
}

Batch BatchSampler::Next() {
  const BatchHeader h = schedule_.Draw(rng_);
  if (h.objective == Objective::kMass) return NextMass(schedule_.mono_units()[h.unit]);
  return NextTranslation(schedule_.translation_units()[h.unit]);
}

Batch BatchSampler::NextTranslation(const SamplingUnit& unit) {
  const EncodedParallel& store = parallel_.at(unit.store);
  const auto& src_side = unit.reversed ? store.tgt : store.src;
  const auto& tgt_side = unit.reversed ? store.src : store.tgt;
  const TokenId tag = vocab_->Tag(unit.tgt);
  std::vector<TrainingExample> rows;
  rows.reserve(policy_.batch_size);
  for (std::size_t r = 0; r < policy_.batch_size; ++r) {
    const std::size_t i = rng_.UniformInt(src_side.size());
    std::vector<TokenId> src = src_side[i];
    std::vector<TokenId> tgt = tgt_side[i];
    if (src.size() + 2 > policy_.max_len) src.resize(policy_.max_len - 2);
    if (tgt.size() + 1 > policy_.max_len) tgt.resize(policy_.max_len - 1);
    rows.push_back(MakeTranslationExample(src, tgt, tag));
  }
  return MakeBatch(rows, Objective::kTranslation, unit.label);
}

Batch BatchSampler::NextMass(const SamplingUnit& unit) {
  const EncodedMono& store = mono_.at(unit.src);
  std::vector<TrainingExample> rows;
  rows.reserve(policy_.batch_size);
  for (std::size_t r = 0; r < policy_.batch_size; ++r) {
    const std::size_t i = store.eligible[rng_.UniformInt(store.eligible.size())];
    const auto& full = store.sentences[i];
    const std::size_t m = std::min(full.size(), policy_.max_len - 2);
    rows.push_back(BuildMassExample(std::span<const TokenId>(full.data(), m), unit.src,
                                    mask_, *vocab_, rng_));
  }
  return MakeBatch(rows, Objective::kMass, unit.label);
}

}  // namespace polymass
