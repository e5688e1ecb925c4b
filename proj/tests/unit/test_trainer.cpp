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

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "polymass/trainer.hpp"
#include "test_support.hpp"

using namespace polymass;
using namespace polymass::testing;

namespace {

struct ToyData {
  CorpusRegistry registry;
  Vocabulary vocab;
};

ToyData MakeToyData() {
  const std::vector<std::string> words = {"ka", "lo", "mi", "nu", "pe", "ri", "so", "tu"};
  Rng rng(4);
  ToyData d;
  ParallelStore p{"aa", "bb", {}};
  MonoStore m{"aa", {}};
  std::vector<std::string> texts;
  for (int i = 0; i < 60; ++i) {
    std::vector<std::string> s, t;
    const std::size_t n = 2 + rng.UniformInt(5);
    for (std::size_t j = 0; j < n; ++j) {
      const auto w = words[rng.UniformInt(words.size())];
      s.push_back(w);
      t.insert(t.begin(), w + "x");
    }
    p.pairs.push_back({JoinWords(s), JoinWords(t)});
    m.sentences.push_back(JoinWords(s));
    texts.push_back(JoinWords(s));
    texts.push_back(JoinWords(t));
  }
  d.vocab = TrainVocab(texts, 40, {"aa", "bb"});
  d.registry.AddParallel(p);
  d.registry.AddMono(m);
  return d;
}

TrainJob ToyJob(const Vocabulary& v, std::size_t steps) {
  TrainJob job;
  job.policy.batch_size = 4;
  job.policy.max_len = 16;
  job.policy.seed = 5;
  job.model = TinyConfig(v.size());
  job.model.dropout = 0.1;
  job.train.total_steps = steps;
  job.train.warmup_steps = 10;
  job.train.seed = 9;
  return job;
}

}  // namespace

TEST_CASE("learning rate schedule") {
  const double expected = std::pow(128.0, -0.5) * std::pow(4000.0, -1.5);
  CHECK(std::abs(LearningRate(1, 128, 4000) - expected) < 1e-18);
  CHECK(std::abs(LearningRate(1, 128, 4000) - 3.49e-7) < 0.01e-7);
  const double a = std::pow(64.0, -0.5) * std::pow(100.0, -0.5);
  CHECK(std::abs(LearningRate(100, 64, 100) - a) < 1e-15);
  for (std::size_t s = 1; s < 100; ++s) CHECK(LearningRate(s + 1, 64, 100) >= LearningRate(s, 64, 100));
  for (std::size_t s = 100; s < 400; ++s) CHECK(LearningRate(s + 1, 64, 100) <= LearningRate(s, 64, 100));
  CHECK_THROWS_AS(LearningRate(0, 64, 100), Error);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  c.warmup_steps = 0;
  CHECK_THROWS_AS(c.Validate(), Error);
  c = {};
  c.clip_norm = 0.0;
  CHECK_THROWS_AS(c.Validate(), Error);
  c = {};
  c.clip_norm = std::numeric_limits<double>::infinity();
  CHECK_NOTHROW(c.Validate());
}

TEST_CASE("zero gradients leave parameters unchanged") {
  const Vocabulary v = LetterVocab();
  ModelParams<float> params = InitParams(TinyConfig(v.size()), 3);
  const ModelParams<float> before = params;
  Batch b = RandomTranslationBatch(v, 3, 5, 2);
  std::fill(b.loss_mask.begin(), b.loss_mask.end(), 0);
  AdamState state = AdamState::For(params);
  TrainConfig cfg;
  const MetricsRecord r = TrainStep(params, state, b, cfg);
  CHECK(state.step == 1);
  CHECK(r.grad_norm == 0.0);
  CHECK(params == before);
}

TEST_CASE("an inactive clip cap is a no-op") {
  const Vocabulary v = LetterVocab();
  const ModelParams<float> init = InitParams(TinyConfig(v.size()), 3);
  const Batch b = RandomTranslationBatch(v, 3, 5, 2);
  TrainConfig inf_cfg, big_cfg;
  inf_cfg.clip_norm = std::numeric_limits<double>::infinity();
  big_cfg.clip_norm = 1e6;
  ModelParams<float> p1 = init, p2 = init;
  AdamState s1 = AdamState::For(p1), s2 = AdamState::For(p2);
  for (int i = 0; i < 3; ++i) {
    TrainStep(p1, s1, b, inf_cfg);
    TrainStep(p2, s2, b, big_cfg);
  }
  CHECK(p1 == p2);
}

TEST_CASE("non-finite loss aborts and names the batch") {
  const Vocabulary v = LetterVocab();
  ModelParams<float> params = InitParams(TinyConfig(v.size()), 3);
  params.at("embed").data.assign(params.at("embed").data.size(), std::numeric_limits<float>::quiet_NaN());
  const Batch b = RandomTranslationBatch(v, 2, 4, 1);
  AdamState s = AdamState::For(params);
  try {
    TrainStep(params, s, b, TrainConfig{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(b.label) != std::string::npos);
  }
}

TEST_CASE("loss on a repeated batch decreases every step") {
  const Vocabulary v = LetterVocab();
  ModelParams<float> params = InitParams(TinyConfig(v.size()), 11);
  const Batch b = RandomTranslationBatch(v, 4, 6, 3);
  AdamState s = AdamState::For(params);
  TrainConfig cfg;
  cfg.warmup_steps = 50;
  cfg.lr_scale = 0.5;
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 50; ++i) {
    const double loss = TrainStep(params, s, b, cfg).loss;
    REQUIRE(loss < prev);
    prev = loss;
  }
}

TEST_CASE("objective mix over 10000-batch windows") {
  const ToyData d = MakeToyData();
  SamplingPolicy p;
  p.batch_size = 1;
  p.mono_ratio = 0.5;
  p.seed = 77;
  BatchSampler s(d.registry, d.vocab, p, MaskSpec{});
  for (int w = 0; w < 3; ++w) {
    int mass = 0;
    for (int i = 0; i < 10000; ++i) mass += s.Next().objective == Objective::kMass;
    CHECK(mass >= 4800);
    CHECK(mass <= 5200);
  }
}

TEST_CASE("training is deterministic and resumes bit for bit") {
  const ToyData d = MakeToyData();
  TrainJob job = ToyJob(d.vocab, 30);
  job.train.checkpoint_every = 12;
  job.train.log_every = 1;
  const std::string a = TempDir("train_a"), b = TempDir("train_b"), c = TempDir("train_c");
  Train(d.registry, d.vocab, job, a);
  Train(d.registry, d.vocab, job, b);
  CHECK(ReadFile(a + "/metrics.jsonl") == ReadFile(b + "/metrics.jsonl"));
  CHECK(ReadFile(a + "/final/params.bin") == ReadFile(b + "/final/params.bin"));
  CHECK(ReadFile(a + "/final/adam_v.bin") == ReadFile(b + "/final/adam_v.bin"));
  CHECK(ReadLines(a + "/metrics.jsonl").size() == 30);

  TrainOptions resume;
  resume.resume_from = a + "/checkpoints/step_0000012";
  const TrainResult r = Train(d.registry, d.vocab, job, c, resume);
  CHECK(r.steps_run == 18);
  CHECK(ReadFile(a + "/metrics.jsonl") == ReadFile(c + "/metrics.jsonl"));
  CHECK(ReadFile(a + "/final/params.bin") == ReadFile(c + "/final/params.bin"));

  TrainJob other = job;
  other.model.d_ff = 48;
  CHECK_THROWS_AS(Train(d.registry, d.vocab, other, TempDir("train_d"), resume), Error);
}

TEST_CASE("metrics lines hold only deterministic fields") {
  MetricsRecord r;
  r.step = 3;
  r.label = "aa-bb";
  r.tokens_per_sec = 123.0;
  const std::string line = MetricsToJsonLine(r);
  CHECK(line.find("tokens_per_sec") == std::string::npos);
  CHECK(line.find("\"step\":3") != std::string::npos);
}

TEST_CASE("a tiny model overfits 32 fixed pairs") {
  const Vocabulary v = LetterVocab();
  ModelConfig mc = TinyConfig(v.size());
  mc.n_layers = 2;
  mc.d_model = 32;
  mc.n_heads = 4;
  mc.d_ff = 64;
  ModelParams<float> params = InitParams(mc, 5);
  const Batch b = RandomTranslationBatch(v, 32, 6, 8);
  AdamState s = AdamState::For(params);
  TrainConfig cfg;
  cfg.warmup_steps = 100;
  cfg.lr_scale = 2.0;
  double nll = 0.0;
  std::size_t steps = 0;
  while (steps < 2000) {
    nll = TrainStep(params, s, b, cfg).nll;
    ++steps;
    if (nll < 0.1) break;
  }
  MESSAGE("nll " << nll << " after " << steps << " steps");
  CHECK(nll < 0.1);
}
