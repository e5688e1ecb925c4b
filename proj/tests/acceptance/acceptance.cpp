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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any selected criterion fails.
//
//   polymass_acceptance [--criteria 1,2,...] [--work-dir DIR] [--progress N] [--reuse]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bleu_oracle.hpp"
#include "polymass/eval.hpp"
#include "polymass/harness.hpp"
#include "polymass/mass.hpp"
#include "polymass/model.hpp"
#include "polymass/sampler.hpp"
#include "polymass/trainer.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace polymass;
using namespace polymass::testing;

namespace {

struct Context {
  std::string work_dir;
  std::size_t progress = 0;
  bool reuse = false;
};

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void Expect(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back((ok ? "" : "FAILED ") + what);
  }
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome(const Context&)> run;
};

std::string Fmt(double x, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

std::string Fixed(double x, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

std::string Fresh(const Context& ctx, const std::string& name) {
  const fs::path p = fs::path(ctx.work_dir) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

// Sentences of `len` random words over a small alphabet of syllables.
std::vector<std::string> RandomText(Rng& rng, std::size_t n, std::size_t min_len,
                                    std::size_t max_len) {
  static const char* kSyl[] = {"ka", "lo", "mi", "nu", "pe", "ri", "so", "tu", "va", "ze"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = min_len + rng.UniformInt(max_len - min_len + 1);
    std::vector<std::string> words;
    for (std::size_t j = 0; j < len; ++j) {
      words.push_back(std::string(kSyl[rng.UniformInt(10)]) + kSyl[rng.UniformInt(10)]);
    }
    out.push_back(JoinWords(words));
  }
  return out;
}

// ---------------------------------------------------------------------------
// 1. Temperature sampling

Outcome SamplingExactness(const Context&) {
  Outcome o;
  const double t = 5.0;
  double worst = 0.0;
  for (double n : {1.0, 100.0, 1e6}) {
    const auto p = LanguageProbabilities(
        {{"A", static_cast<std::size_t>(n)}, {"B", static_cast<std::size_t>(32 * n)}}, t);
    worst = std::max({worst, std::abs(p.at("A") - 1.0 / 3.0), std::abs(p.at("B") - 2.0 / 3.0)});
  }
  o.Expect(worst <= 1e-12, "max |p - (1/3, 2/3)| = " + Fmt(worst) + " <= 1e-12");

  // Each parallel store yields one unit per direction; a language's share is
  // the sum over both.
  const std::size_t n = 100;
  CorpusRegistry reg;
  reg.AddParallel({"A", "en", std::vector<SentencePair>(n, {"a b", "c d"})});
  reg.AddParallel({"B", "en", std::vector<SentencePair>(32 * n, {"e f", "g h"})});
  SamplingPolicy policy;
  policy.temperature = t;
  policy.mono_ratio = 0.0;
  policy.seed = 17;
  const SampleStats stats = ComputeSampleStats(reg, policy, 100000);
  const double wa = std::pow(double(n), 1.0 / t), wb = std::pow(32.0 * n, 1.0 / t);
  std::map<std::string, double> share;
  for (const auto& [label, f] : stats.translation_freq) {
    share[label.find('A') != std::string::npos ? "A" : "B"] += f;
  }
  const double da = std::abs(share["A"] - wa / (wa + wb));
  const double db = std::abs(share["B"] - wb / (wa + wb));
  o.Expect(std::max(da, db) <= 0.01, "empirical A=" + Fmt(share["A"]) + " B=" + Fmt(share["B"]) +
                                         " over 100000 draws, max dev " + Fmt(std::max(da, db)));
  return o;
}

// ---------------------------------------------------------------------------
// 2. Mixing ratio

Outcome MixingRatio(const Context&) {
  Outcome o;
  Rng rng(5);
  const auto src = RandomText(rng, 200, 3, 8), tgt = RandomText(rng, 200, 3, 8);
  ParallelStore p{"aa", "bb", {}};
  for (std::size_t i = 0; i < src.size(); ++i) p.pairs.push_back({src[i], tgt[i]});
  CorpusRegistry reg;
  reg.AddParallel(p);
  reg.AddMono({"aa", RandomText(rng, 200, 4, 10)});
  reg.AddMono({"bb", RandomText(rng, 200, 4, 10)});
  std::vector<std::string> text = src;
  text.insert(text.end(), tgt.begin(), tgt.end());
  const Vocabulary vocab = TrainVocab(text, 120, {"aa", "bb"});

  SamplingPolicy policy;
  policy.mono_ratio = 0.5;
  policy.batch_size = 1;
  policy.seed = 23;
  BatchSampler sampler(reg, vocab, policy, MaskSpec{});
  const std::size_t draws = 100000;
  std::size_t mass = 0;
  for (std::size_t i = 0; i < draws; ++i) mass += sampler.Next().objective == Objective::kMass;
  const double f = double(mass) / draws;
  o.Expect(std::abs(f - 0.5) <= 0.01, "MASS batch fraction " + Fmt(f) + " over 100000 batches");
  return o;
}

// ---------------------------------------------------------------------------
// 3. MASS statistics

Outcome MassStatistics(const Context&) {
  Outcome o;
  const Vocabulary vocab = LetterVocab();
  const MaskSpec spec;  // ratio 0.5, 80/10/10
  Rng rng(31);
  const TokenId lo = vocab.first_regular_id(), hi = static_cast<TokenId>(vocab.size());
  double ratio_sum = 0.0;
  std::size_t counts[3] = {0, 0, 0}, positions = 0, inconsistent = 0;
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = 4 + rng.UniformInt(37);
    const auto tokens = RandomTokens(rng, m, lo, hi);
    std::vector<Corruption> corr;
    const TrainingExample ex = BuildMassExample(tokens, "aa", spec, vocab, rng, &corr);
    const std::size_t k = ex.target.size(), u = static_cast<std::size_t>(ex.dec_pos.front());
    ratio_sum += double(k) / double(m);
    for (std::size_t j = 0; j < k; ++j) {
      const TokenId seen = ex.enc[1 + u + j], orig = tokens[u + j];
      ++counts[static_cast<int>(corr[j])];
      ++positions;
      if (corr[j] == Corruption::kMask && seen != Vocabulary::kMask) ++inconsistent;
      if (corr[j] == Corruption::kKeep && seen != orig) ++inconsistent;
      if (corr[j] == Corruption::kRandom && (seen < lo || seen >= hi)) ++inconsistent;
    }
  }
  const double mean = ratio_sum / n;
  o.Expect(mean >= 0.48 && mean <= 0.52, "mean k/m " + Fmt(mean) + " over 10000 examples");
  const double expect[3] = {0.8, 0.1, 0.1};
  const char* names[3] = {"mask", "random", "keep"};
  for (int c = 0; c < 3; ++c) {
    const double f = double(counts[c]) / positions;
    o.Expect(std::abs(f - expect[c]) <= 0.02, std::string(names[c]) + " " + Fmt(f));
  }
  o.Expect(inconsistent == 0, "encoder tokens agree with corruption choices");

  // m = 8, k = 4: u uniform over 5 starts, 4 degrees of freedom. The chi-square
  // survival function with 4 degrees of freedom is exp(-x/2) (1 + x/2).
  MaskSpec fixed = spec;
  std::size_t cells[5] = {0, 0, 0, 0, 0};
  const std::vector<TokenId> eight = RandomTokens(rng, 8, lo, hi);
  for (std::size_t i = 0; i < n; ++i) {
    const TrainingExample ex = BuildMassExample(eight, "aa", fixed, vocab, rng);
    ++cells[static_cast<std::size_t>(ex.dec_pos.front())];
  }
  double chi2 = 0.0;
  for (std::size_t c : cells) chi2 += std::pow(double(c) - n / 5.0, 2) / (n / 5.0);
  const double p = std::exp(-chi2 / 2) * (1 + chi2 / 2);
  o.Expect(p > 0.001, "start chi-square " + Fmt(chi2) + ", p = " + Fmt(p));
  return o;
}

// ---------------------------------------------------------------------------
// 4. Gradient check

Outcome GradientCorrectness(const Context&) {
  Outcome o;
  const Vocabulary vocab = LetterVocab();
  ModelConfig mc = TinyConfig(vocab.size());  // 1 layer, d_model 16
  mc.dropout = 0.0;
  const ModelParams<double> params = InitParams(mc, 7).Cast<double>();
  const Batch batches[2] = {RandomTranslationBatch(vocab, 3, 6, 41), RandomMassBatch(vocab, 3, 8, 43)};
  for (const Batch& b : batches) {
    const GradCheckResult r = GradientCheck(params, b, 1e-3, 1);
    o.Expect(r.max_rel_error < 1e-4,
             std::string(ObjectiveName(b.objective)) + " max rel error " + Fmt(r.max_rel_error, 3) +
                 " (two-point " + Fmt(r.max_rel_error_two_point, 3) + ") over " +
                 std::to_string(r.coordinates) + " coordinates");
  }
  return o;
}

// ---------------------------------------------------------------------------
// 5. BLEU oracle

std::string RandomSentence(Rng& rng, std::size_t min_len, std::size_t max_len, std::size_t vocab) {
  std::vector<std::string> words;
  const std::size_t n = min_len + rng.UniformInt(max_len - min_len + 1);
  for (std::size_t i = 0; i < n; ++i) words.push_back("w" + std::to_string(rng.UniformInt(vocab)));
  return JoinWords(words);
}

Outcome BleuOracle(const Context&) {
  Outcome o;
  Rng rng(99);
  double worst = 0.0;
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = 1 + rng.UniformInt(30);
    std::vector<std::string> hyps, refs;
    for (std::size_t i = 0; i < n; ++i) {
      refs.push_back(RandomSentence(rng, 1, 30, 40));
      if (rng.Bernoulli(0.6)) {
        auto words = SplitWhitespace(refs.back());
        for (auto& w : words) {
          if (rng.Bernoulli(0.15)) w = "w" + std::to_string(rng.UniformInt(40));
        }
        while (words.size() > 1 && rng.Bernoulli(0.3)) words.pop_back();
        hyps.push_back(JoinWords(words));
      } else {
        hyps.push_back(RandomSentence(rng, 1, 30, 40));
      }
    }
    worst = std::max(worst, std::abs(CorpusBleu(hyps, refs).bleu - BruteForceBleu(hyps, refs).bleu));
  }
  o.Expect(worst <= 0.01, "max |bleu - oracle| " + Fmt(worst, 3) + " over 200 corpora");
  const double worked = CorpusBleu({"the cat sat on the mat"}, {"the cat sat on a mat"}).bleu;
  o.Expect(std::abs(worked - 53.73) <= 0.01, "worked example " + Fixed(worked, 4));
  std::vector<std::string> same;
  for (int i = 0; i < 50; ++i) same.push_back(RandomSentence(rng, 4, 20, 40));
  const double identical = CorpusBleu(same, same).bleu;
  o.Expect(identical == 100.0, "identical corpora " + Fixed(identical, 6));
  return o;
}

// ---------------------------------------------------------------------------
// 6. Determinism and resume

ExperimentConfig SmallSuite() {
  ExperimentConfig c;
  c.name = "acceptance-small";
  c.generator.base_vocab_size = 150;
  c.generator.len_min = 4;
  c.generator.len_max = 10;
  CipherSpec xa;
  xa.lang = "xa";
  xa.lexicon_seed = 3;
  xa.reorder = Reorder::ReverseWindow(3);
  CipherSpec xb;
  xb.lang = "xb";
  xb.lexicon_seed = 4;
  xb.shared_fraction = 0.5;
  xb.relative = "xa";
  c.languages = {{xa, 800, 800}, {xb, 100, 800}};
  c.base_mono = 800;
  c.vocab_size = 300;
  c.arms = {ArmSpec::Parse("multilingual_mono")};
  c.eval.test_size = 50;
  return c;
}

bool SameFiles(const std::string& a, const std::string& b, std::string* diff) {
  std::set<std::string> names;
  for (const auto& d : {a, b}) {
    for (const auto& e : fs::directory_iterator(d)) names.insert(e.path().filename().string());
  }
  for (const auto& n : names) {
    const fs::path pa = fs::path(a) / n, pb = fs::path(b) / n;
    if (!fs::exists(pa) || !fs::exists(pb) || ReadFile(pa.string()) != ReadFile(pb.string())) {
      *diff = n;
      return false;
    }
  }
  return true;
}

Outcome Determinism(const Context& ctx) {
  Outcome o;
  const ExperimentConfig cfg = SmallSuite();
  const SuiteData suite = BuildSuite(cfg);
  const ArmData arm = MakeArmData(cfg, suite.registry, ArmSpec::Parse("multilingual_mono"));
  TrainJob job;
  job.policy.batch_size = 16;
  job.policy.max_len = 48;
  job.policy.mono_ratio = 0.5;
  job.policy.seed = 12;
  job.model.n_layers = 1;
  job.model.n_heads = 2;
  job.model.d_model = 32;
  job.model.d_ff = 64;
  job.model.dropout = 0.1;
  job.model.max_positions = 64;
  job.model.vocab_size = suite.vocab.size();
  job.train.total_steps = 500;
  job.train.warmup_steps = 100;
  job.train.checkpoint_every = 250;
  job.train.log_every = 1;
  job.train.seed = 8;

  const std::string a = Fresh(ctx, "determinism/a"), b = Fresh(ctx, "determinism/b");
  const std::string c = Fresh(ctx, "determinism/resumed");
  Train(arm.registry, suite.vocab, job, a);
  Train(arm.registry, suite.vocab, job, b);
  TrainOptions resume;
  resume.resume_from = a + "/checkpoints/step_0000250";
  const TrainResult r = Train(arm.registry, suite.vocab, job, c, resume);

  const auto lines = ReadLines(a + "/metrics.jsonl");
  o.Expect(lines.size() == 500, std::to_string(lines.size()) + " metrics lines");
  std::string diff;
  o.Expect(ReadFile(a + "/metrics.jsonl") == ReadFile(b + "/metrics.jsonl"),
           "repeat run metrics identical");
  o.Expect(SameFiles(a + "/final", b + "/final", &diff), "repeat run final checkpoint identical" +
                                                             (diff.empty() ? "" : " (" + diff + ")"));
  diff.clear();
  o.Expect(r.steps_run == 250, "resume ran " + std::to_string(r.steps_run) + " steps");
  o.Expect(ReadFile(a + "/metrics.jsonl") == ReadFile(c + "/metrics.jsonl"),
           "resumed metrics identical");
  o.Expect(SameFiles(a + "/final", c + "/final", &diff),
           "resumed final checkpoint identical" + (diff.empty() ? "" : " (" + diff + ")"));
  return o;
}

// ---------------------------------------------------------------------------
// 7 and 8. Desk-scale comparisons on the default suite

ExperimentReport RunSuite(const Context& ctx, const std::string& name,
                          const std::vector<std::string>& arms) {
  ExperimentConfig cfg = DefaultSuiteConfig();
  cfg.name = name;
  cfg.arms.clear();
  for (const auto& a : arms) cfg.arms.push_back(ArmSpec::Parse(a));
  cfg.eval.directions = {{"xd", "en"}, {"en", "xd"}};
  cfg.eval.zero_shot.clear();
  cfg.eval.pivots.clear();
  cfg.seeds = {1, 2, 3};
  const fs::path dir = fs::path(ctx.work_dir) / name;
  if (!ctx.reuse) fs::remove_all(dir);
  RunOptions opt;
  opt.progress_every = ctx.progress;
  opt.reuse = ctx.reuse;
  return RunExperiment(cfg, dir.string(), opt);
}

std::string SeedScores(const ExperimentReport& r, const std::string& arm, const std::string& dir) {
  std::string s;
  for (const auto& c : r.cells) {
    if (c.arm != arm || c.direction != dir) continue;
    s += (s.empty() ? "" : "/") + (c.ok ? Fixed(ReportRound(c.bleu.bleu)) : std::string("fail"));
  }
  return s;
}

// Median BLEU of each arm, in order; unset medians count as failures.
bool StrictlyDecreasing(Outcome& o, const ExperimentReport& r, const std::vector<std::string>& arms,
                        const std::string& dir) {
  std::vector<double> med;
  for (const auto& a : arms) {
    const auto m = r.Median(a, dir);
    o.notes.push_back(a + " " + (m ? Fixed(*m) : std::string("none")) + " [" +
                      SeedScores(r, a, dir) + "]");
    if (!m) return false;
    med.push_back(*m);
  }
  for (std::size_t i = 1; i < med.size(); ++i) {
    if (!(med[i - 1] > med[i])) return false;
  }
  return true;
}

Outcome CoTraining(const Context& ctx) {
  Outcome o;
  const std::vector<std::string> arms = {"multilingual_mono", "multilingual", "bilingual"};
  const ExperimentReport r = RunSuite(ctx, "cotraining", arms);
  const bool ok = StrictlyDecreasing(o, r, arms, "xd-en");
  o.Expect(ok, "xd-en median BLEU: multilingual_mono > multilingual > bilingual");
  Outcome info;
  StrictlyDecreasing(info, r, arms, "en-xd");
  for (const auto& n : info.notes) o.notes.push_back("(en-xd, not judged) " + n);
  return o;
}

Outcome LeaveOneOut(const Context& ctx) {
  Outcome o;
  const std::vector<std::string> arms = {"leave_one_out:xd", "mono_only:xd",
                                         "leave_one_out_nomono:xd"};
  const ExperimentReport r = RunSuite(ctx, "leave_one_out", arms);
  std::vector<double> med;
  bool all = true;
  for (const auto& a : arms) {
    const auto m = r.Median(a, "xd-en");
    o.notes.push_back(a + " " + (m ? Fixed(*m) : std::string("none")) + " [" +
                      SeedScores(r, a, "xd-en") + "]");
    all = all && m.has_value();
    med.push_back(m.value_or(0.0));
  }
  o.Expect(all && med[0] > med[1] && med[0] > med[2],
           "xd-en median BLEU: leave_one_out beats mono_only and leave_one_out_nomono");
  for (const auto& a : arms) {
    const auto m = r.Median(a, "en-xd");
    o.notes.push_back("(en-xd, not judged) " + a + " " + (m ? Fixed(*m) : std::string("none")));
  }
  return o;
}

// ---------------------------------------------------------------------------
// 9. Pivot through identity ciphers

Outcome PivotIdentity(const Context& ctx) {
  Outcome o;
  ExperimentConfig cfg;
  cfg.name = "pivot-identity";
  cfg.generator.base_vocab_size = 120;
  cfg.generator.len_min = 4;
  cfg.generator.len_max = 10;
  CipherSpec xa;
  xa.lang = "xa";
  xa.identity_lexicon = true;
  CipherSpec xb = xa;
  xb.lang = "xb";
  cfg.languages = {{xa, 3000, 0}, {xb, 3000, 0}};
  cfg.vocab_size = 250;
  cfg.arms = {ArmSpec::Parse("multilingual")};
  cfg.sampling.batch_size = 32;
  cfg.sampling.max_len = 32;
  cfg.model.n_layers = 2;
  cfg.model.n_heads = 4;
  cfg.model.d_model = 64;
  cfg.model.d_ff = 128;
  cfg.model.dropout = 0.0;
  cfg.model.max_positions = 64;
  cfg.train.total_steps = 1500;
  cfg.train.warmup_steps = 300;
  cfg.train.checkpoint_every = 0;
  cfg.eval.directions = {{"xa", "en"}};
  cfg.eval.pivots = {{"xa", "xb", "en"}};
  cfg.eval.test_size = 500;
  cfg.seeds = {1};
  const fs::path dir = fs::path(ctx.work_dir) / "pivot";
  if (!ctx.reuse) fs::remove_all(dir);
  RunOptions opt;
  opt.progress_every = ctx.progress;
  opt.reuse = ctx.reuse;
  const ExperimentReport r = RunExperiment(cfg, dir.string(), opt);

  const auto direct = r.Median("multilingual", "xa-en");
  const auto pivot = r.Median("multilingual", cfg.eval.pivots[0].Name());
  if (!direct || !pivot) {
    o.Expect(false, "both paths scored");
    return o;
  }
  const SuiteData check = BuildSuite(cfg);
  o.Expect(check.test.at("xa") == check.test.at("en") && check.test.at("xb") == check.test.at("en"),
           "identity renderings equal the base test set");
  o.Expect(std::abs(*direct - *pivot) <= 0.5,
           "direct xa-en " + Fixed(*direct) + ", pivot xa-en-xb " + Fixed(*pivot) + " on " +
               std::to_string(cfg.eval.test_size) + " sentences");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string selection = "all";
  Context ctx;
  ctx.work_dir = (fs::temp_directory_path() / "polymass_acceptance").string();
  app.add_option("--criteria", selection, "Comma-separated criterion numbers or 'all'")
      ->capture_default_str();
  app.add_option("--work-dir", ctx.work_dir, "Directory for training runs")->capture_default_str();
  app.add_option("--progress", ctx.progress, "Training progress interval (0 = silent)");
  app.add_flag("--reuse", ctx.reuse, "Keep finished training cells from an earlier invocation");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "sampling exactness", 60, SamplingExactness},
      {2, "mixing ratio", 60, MixingRatio},
      {3, "MASS statistics", 120, MassStatistics},
      {4, "gradient correctness", 300, GradientCorrectness},
      {5, "BLEU oracle", 60, BleuOracle},
      {6, "determinism", 600, Determinism},
      {7, "co-training benefit", 7200, CoTraining},
      {8, "leave-one-out", 7200, LeaveOneOut},
      {9, "pivot correctness", 300, PivotIdentity},
  };
  std::set<int> chosen;
  if (selection == "all") {
    for (const auto& c : all) chosen.insert(c.id);
  } else {
    std::stringstream ss(selection);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        chosen.insert(std::stoi(item));
      } catch (const std::exception&) {
        std::cerr << "error: bad criterion '" << item << "'\n";
        return 2;
      }
    }
  }
  fs::create_directories(ctx.work_dir);

  int failed = 0;
  for (const auto& c : all) {
    if (!chosen.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o.Expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.Expect(secs < c.budget_seconds,
             "runtime " + Fixed(secs, 1) + " s < " + Fixed(c.budget_seconds, 0) + " s");
    if (!o.pass) ++failed;
    std::string detail;
    for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
    std::cout << "criterion " << c.id << " " << (o.pass ? "PASS" : "FAIL") << "  " << c.name
              << ": " << detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
