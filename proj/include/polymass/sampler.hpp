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

// Seeded batch stream: temperature-balanced translation directions, uniform
// monolingual languages, and a Bernoulli choice between the two per batch.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polymass/batch.hpp"
#include "polymass/corpus.hpp"
#include "polymass/mass.hpp"
#include "polymass/subword.hpp"

namespace polymass {

struct SamplingPolicy {
  double temperature = 5.0;
  double mono_ratio = 0.5;
  std::size_t batch_size = 32;
  // Framed sequence limit; the <2xx> tag and eos count toward it.
  std::size_t max_len = 64;
  std::uint64_t seed = 1;

  void Validate() const;
};

// p_l = n_l^(1/T) / sum_k n_k^(1/T).
std::map<std::string, double> LanguageProbabilities(
    const std::map<std::string, std::size_t>& sizes, double temperature);

struct SamplingUnit {
  std::string label;     // "src-tgt" or language code
  LangCode src;          // translation source or mono language
  LangCode tgt;          // translation target or mono language
  LangPair store;        // registry key of the parallel store
  bool reversed = false; // src/tgt swapped relative to the store
  std::size_t size = 0;
};

struct BatchHeader {
  Objective objective = Objective::kTranslation;
  std::size_t unit = 0;  // index into translation or mono units
};

// Header-level sampling; needs only store sizes.
class SourceSchedule {
 public:
  SourceSchedule(const CorpusRegistry& registry, const SamplingPolicy& policy);

  BatchHeader Draw(Rng& rng) const;

  const std::vector<SamplingUnit>& translation_units() const { return translation_; }
  const std::vector<SamplingUnit>& mono_units() const { return mono_; }
  const std::vector<double>& translation_probs() const { return probs_; }
  const std::string& label(const BatchHeader& h) const;

 private:
  SamplingPolicy policy_;
  std::vector<SamplingUnit> translation_;
  std::vector<SamplingUnit> mono_;
  std::vector<double> probs_;
  std::vector<double> cdf_;
};

struct SampleStats {
  std::size_t draws = 0;
  double mono_fraction = 0.0;
  std::map<std::string, double> translation_freq;  // among translation batches
  std::map<std::string, double> mono_freq;         // among MASS batches
  std::map<std::string, double> expected_translation;
};

SampleStats ComputeSampleStats(const CorpusRegistry& registry,
                               const SamplingPolicy& policy, std::size_t n_draws);
std::string SampleStatsJson(const SampleStats& stats);

class BatchSampler {
 public:
  BatchSampler(const CorpusRegistry& registry, const Vocabulary& vocab,
               SamplingPolicy policy, MaskSpec mask);

  Batch Next();

  const SourceSchedule& schedule() const { return schedule_; }
  const SamplingPolicy& policy() const { return policy_; }

  std::string SaveState() const { return rng_.SaveState(); }
  void LoadState(const std::string& state) { rng_.LoadState(state); }

 private:
  struct EncodedParallel {
    std::vector<std::vector<TokenId>> src;
    std::vector<std::vector<TokenId>> tgt;
  };
  struct EncodedMono {
    std::vector<std::vector<TokenId>> sentences;
    std::vector<std::size_t> eligible;
  };

  Batch NextTranslation(const SamplingUnit& unit);
  Batch NextMass(const SamplingUnit& unit);

  const Vocabulary* vocab_;
  SamplingPolicy policy_;
  MaskSpec mask_;
  SourceSchedule schedule_;
  std::map<LangPair, EncodedParallel> parallel_;
  std::map<LangCode, EncodedMono> mono_;
  Rng rng_;
};

}  // namespace polymass
