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

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "polymass/corpus.hpp"
#include "polymass/eval.hpp"
#include "polymass/harness.hpp"
#include "polymass/json_io.hpp"
#include "polymass/model.hpp"
#include "polymass/sampler.hpp"
#include "polymass/subword.hpp"
#include "polymass/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace polymass;

namespace {

int BuildVocabCmd(const std::vector<std::string>& inputs, std::size_t size,
                  const std::vector<std::string>& langs, const std::string& out) {
  std::vector<std::string> texts;
  for (const auto& path : inputs) {
    for (auto& line : ReadLines(path)) {
      std::string norm = NormalizeWhitespace(line);
      if (!norm.empty()) texts.push_back(std::move(norm));
    }
  }
  const Vocabulary v = TrainVocab(texts, size, langs);
  SaveVocab(v, out);
  std::cout << json{{"pieces", v.size()}, {"merges", v.merges().size()}, {"out", out}}.dump() << "\n";
  return 0;
}

int MakeSynthCmd(const std::string& spec, const std::string& out) {
  const ExperimentConfig config = LoadExperimentConfig(spec);
  const SuiteData suite = BuildSuite(config);
  WriteSuite(suite, config, out);
  std::cout << RegistryStatsJson(suite.registry) << "\n";
  return 0;
}

int CorpusStatsCmd(const std::string& registry) {
  std::cout << RegistryStatsJson(LoadRegistryConfig(registry)) << "\n";
  return 0;
}

int SampleStatsCmd(const std::string& config_path, std::size_t draws) {
  const JobConfig config = LoadJobConfig(config_path);
  if (config.registry.empty()) throw Error("sample-stats: config names no registry");
  const CorpusRegistry registry = LoadRegistryConfig(config.registry);
  std::cout << SampleStatsJson(ComputeSampleStats(registry, config.job.policy, draws)) << "\n";
  return 0;
}

int TrainCmd(const std::string& config_path, const std::string& out, const std::string& resume,
             std::size_t progress) {
  JobConfig config = LoadJobConfig(config_path);
  if (config.registry.empty()) throw Error("train: config names no registry");
  const CorpusRegistry registry = LoadRegistryConfig(config.registry);
  const Vocabulary vocab = JobVocabulary(config, registry);
  config.job.model.vocab_size = vocab.size();
  TrainOptions options;
  options.resume_from = resume;
  options.progress_every = progress;
  const TrainResult r = Train(registry, vocab, config.job, out, options);
  std::cout << json{{"final_checkpoint", r.final_checkpoint},
                    {"metrics", r.metrics_path},
                    {"steps_run", r.steps_run},
                    {"last_loss", r.last_loss},
                    {"seconds", r.seconds}}
                   .dump()
            << "\n";
  return 0;
}

DecodeSettings Decoding(std::size_t beam, double alpha) {
  DecodeSettings s;
  s.beam_size = beam;
  s.length_penalty = alpha;
  return s;
}

std::vector<std::string> ReadSentences(const std::string& path) {
  std::vector<std::string> out;
  for (const auto& line : ReadLines(path)) out.push_back(NormalizeWhitespace(line));
  return out;
}

int TranslateCmd(const std::string& ckpt, const std::string& src, const std::string& tgt_lang,
                 std::size_t beam, double alpha) {
  const LoadedModel m = LoadCheckpoint(ckpt);
  for (const auto& h : Translate(m.params, m.vocab, ReadSentences(src), tgt_lang, Decoding(beam, alpha))) {
    std::cout << h << "\n";
  }
  return 0;
}

int EvaluateCmd(const std::string& ckpt, const std::string& src, const std::string& ref,
                const std::string& tgt_lang, const std::string& pivot, std::size_t beam, double alpha,
                const std::string& smoothing, std::string hyp_out) {
  const LoadedModel m = LoadCheckpoint(ckpt);
  const auto sources = ReadSentences(src);
  const auto refs = ReadSentences(ref);
  if (sources.size() != refs.size()) {
    throw Error("evaluate: " + std::to_string(sources.size()) + " sources vs " +
                std::to_string(refs.size()) + " references");
  }
  const DecodeSettings settings = Decoding(beam, alpha);
  const std::vector<std::string> hyps =
      pivot.empty() ? Translate(m.params, m.vocab, sources, tgt_lang, settings)
                    : PivotTranslate(m.params, m.vocab, sources, pivot, tgt_lang, settings);
  if (hyp_out.empty()) hyp_out = src + "." + (pivot.empty() ? "" : pivot + ".") + tgt_lang + ".hyp";
  WriteLines(hyp_out, hyps);
  json j = BleuToJson(CorpusBleu(hyps, refs, ParseSmoothing(smoothing)));
  j["hypotheses"] = hyp_out;
  std::cout << j.dump(2) << "\n";
  return 0;
}

Batch SyntheticBatch(const Vocabulary& v, Objective objective, std::size_t rows, std::size_t max_len,
                     const MaskSpec& mask, Rng& rng) {
  const TokenId lo = v.first_regular_id();
  const auto span = static_cast<std::uint64_t>(static_cast<TokenId>(v.size()) - lo);
  auto tokens = [&](std::size_t n) {
    std::vector<TokenId> t(n);
    for (auto& x : t) x = static_cast<TokenId>(lo + rng.UniformInt(span));
    return t;
  };
  std::vector<TrainingExample> ex;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t ls = 2 + rng.UniformInt(max_len - 1);
    if (objective == Objective::kTranslation) {
      const std::size_t lt = 2 + rng.UniformInt(max_len - 1);
      ex.push_back(MakeTranslationExample(tokens(ls), tokens(lt), v.Tag(v.languages().back())));
    } else {
      ex.push_back(BuildMassExample(tokens(std::max(ls, mask.min_len)), v.languages().front(), mask, v, rng));
    }
  }
  return MakeBatch(ex, objective, objective == Objective::kTranslation ? "aa-bb" : "aa");
}

int GradCheckCmd(const std::string& config_path, std::size_t stride, std::size_t rows, std::size_t len,
                 double step, double tolerance) {
  const JobConfig config = LoadJobConfig(config_path);
  std::vector<std::string> symbols;
  for (char c = 'a'; c <= 'z'; ++c) {
    symbols.push_back(std::string(1, c));
    symbols.push_back(std::string(1, c) + std::string(kWordEnd));
  }
  const Vocabulary vocab({"aa", "bb"}, symbols, {});
  ModelConfig mc = config.job.model;
  mc.vocab_size = vocab.size();
  mc.dropout = 0.0;
  mc.Validate();
  const ModelParams<double> params = InitParams(mc, MixSeed(config.job.train.seed, 1)).Cast<double>();
  Rng rng(MixSeed(config.job.train.seed, 3));
  json out = {{"tolerance", tolerance}, {"step", step}, {"stride", stride}};
  double worst = 0.0;
  for (const Objective obj : {Objective::kTranslation, Objective::kMass}) {
    const Batch batch = SyntheticBatch(vocab, obj, rows, len, config.job.mask, rng);
    const GradCheckResult r = GradientCheck(params, batch, step, stride);
    worst = std::max(worst, r.max_rel_error);
    out[ObjectiveName(obj)] = {{"max_rel_error", r.max_rel_error},
                               {"max_rel_error_two_point", r.max_rel_error_two_point},
                               {"worst_tensor", r.worst_tensor},
                               {"worst_index", r.worst_index},
                               {"coordinates", r.coordinates}};
  }
  out["max_rel_error"] = worst;
  out["pass"] = worst < tolerance;
  std::cout << out.dump(2) << "\n";
  return worst < tolerance ? 0 : 1;
}

int RunCmd(const std::string& config_path, const std::string& out, bool fresh, std::size_t progress) {
  const ExperimentConfig config = LoadExperimentConfig(config_path);
  RunOptions options;
  options.reuse = !fresh;
  options.progress_every = progress;
  const ExperimentReport report = RunExperiment(config, out, options);
  std::cout << FormatReport(report, "txt");
  return 0;
}

int ReportCmd(const std::string& run, const std::string& format) {
  const ExperimentReport report = LoadExperimentReport(run);
  const std::string path = EmitReport(report, run, format);
  std::cout << ReadFile(path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual translation with co-trained masked sequence-to-sequence objectives"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BuildId());

  std::vector<std::string> inputs, langs;
  std::size_t size = 0;
  std::string out;
  auto* bv = app.add_subcommand("build-vocab", "Train a shared subword vocabulary");
  bv->add_option("--input", inputs, "Text files, one sentence per line")->required()->delimiter(',');
  bv->add_option("--size", size, "Target vocabulary size")->required();
  bv->add_option("--langs", langs, "Language codes for the <2xx> tags")->required()->delimiter(',');
  bv->add_option("--out", out, "Output vocabulary file")->required();

  std::string spec;
  auto* ms = app.add_subcommand("make-synth", "Generate a synthetic cipher-language suite");
  ms->add_option("--spec", spec, "Experiment config describing the languages")->required()->check(CLI::ExistingFile);
  ms->add_option("--out", out, "Output directory")->required();

  std::string registry;
  auto* cs = app.add_subcommand("corpus-stats", "Print store sizes of a registry config");
  cs->add_option("--registry", registry, "Registry config")->required()->check(CLI::ExistingFile);

  std::string config;
  std::size_t draws = 100000;
  auto* ss = app.add_subcommand("sample-stats", "Empirical batch-source frequencies as JSON");
  ss->add_option("--config", config, "Job config")->required()->check(CLI::ExistingFile);
  ss->add_option("--draws", draws, "Batch headers to draw")->capture_default_str();

  std::string resume;
  std::size_t progress = 0;
  auto* tr = app.add_subcommand("train", "Train one model");
  tr->add_option("--config", config, "Job config")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", out, "Run directory")->required();
  tr->add_option("--resume", resume, "Checkpoint directory to continue from")->check(CLI::ExistingDirectory);
  tr->add_option("--progress", progress, "Print progress every n steps")->capture_default_str();

  std::string ckpt, src, ref, tgt_lang, pivot, smoothing = "none", hyp_out;
  std::size_t beam = 1;
  double alpha = 1.0;
  auto* tl = app.add_subcommand("translate", "Translate a file");
  tl->add_option("--ckpt", ckpt, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  tl->add_option("--src", src, "Source sentences")->required()->check(CLI::ExistingFile);
  tl->add_option("--tgt-lang", tgt_lang, "Target language code")->required();
  tl->add_option("--beam", beam, "Beam size; 1 is greedy")->capture_default_str()->check(CLI::PositiveNumber);
  tl->add_option("--alpha", alpha, "Length penalty exponent")->capture_default_str();

  std::size_t stride = 1, rows = 3, len = 6;
  double fd_step = 1e-3, tolerance = 1e-4;
  auto* gc = app.add_subcommand("grad-check", "Compare gradients with finite differences");
  gc->add_option("--config", config, "Job config (model section)")->required()->check(CLI::ExistingFile);
  gc->add_option("--stride", stride, "Check every n-th coordinate")->capture_default_str()->check(CLI::PositiveNumber);
  gc->add_option("--rows", rows, "Batch rows")->capture_default_str()->check(CLI::PositiveNumber);
  gc->add_option("--len", len, "Maximum sentence length")->capture_default_str()->check(CLI::Range(2, 60));
  gc->add_option("--step", fd_step, "Finite-difference step")->capture_default_str();
  gc->add_option("--tolerance", tolerance, "Maximum relative error")->capture_default_str();

  auto* ev = app.add_subcommand("evaluate", "Translate and score against references");
  ev->add_option("--ckpt", ckpt, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--src", src, "Source sentences")->required()->check(CLI::ExistingFile);
  ev->add_option("--ref", ref, "Reference sentences")->required()->check(CLI::ExistingFile);
  ev->add_option("--tgt-lang", tgt_lang, "Target language code")->required();
  ev->add_option("--pivot", pivot, "Translate through this language");
  ev->add_option("--beam", beam, "Beam size; 1 is greedy")->capture_default_str()->check(CLI::PositiveNumber);
  ev->add_option("--alpha", alpha, "Length penalty exponent")->capture_default_str();
  ev->add_option("--smoothing", smoothing, "none or add_k:<k>")->capture_default_str();
  ev->add_option("--hyp-out", hyp_out, "Hypotheses file (default <src>.<tgt>.hyp)");

  bool fresh = false;
  auto* rn = app.add_subcommand("run", "Run an experiment");
  rn->add_option("--config", config, "Experiment config")->required()->check(CLI::ExistingFile);
  rn->add_option("--out", out, "Run directory")->required();
  rn->add_flag("--fresh", fresh, "Retrain cells even when a matching checkpoint exists");
  rn->add_option("--progress", progress, "Print progress every n steps")->capture_default_str();

  std::string run, format = "txt";
  auto* rp = app.add_subcommand("report", "Re-emit the report of a run");
  rp->add_option("--run", run, "Run directory")->required()->check(CLI::ExistingDirectory);
  rp->add_option("--format", format, "Output format")->capture_default_str()->check(
      CLI::IsMember({"json", "txt", "csv"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bv) return BuildVocabCmd(inputs, size, langs, out);
    if (*ms) return MakeSynthCmd(spec, out);
    if (*cs) return CorpusStatsCmd(registry);
    if (*ss) return SampleStatsCmd(config, draws);
    if (*tr) return TrainCmd(config, out, resume, progress);
    if (*tl) return TranslateCmd(ckpt, src, tgt_lang, beam, alpha);
    if (*gc) return GradCheckCmd(config, stride, rows, len, fd_step, tolerance);
    if (*ev) return EvaluateCmd(ckpt, src, ref, tgt_lang, pivot, beam, alpha, smoothing, hyp_out);
    if (*rn) return RunCmd(config, out, fresh, progress);
    if (*rp) return ReportCmd(run, format);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
