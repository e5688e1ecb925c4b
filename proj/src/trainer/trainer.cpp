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

#include "polymass/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "polymass/json_io.hpp"

namespace polymass {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kStateFormat = "polymass-trainer-state";
constexpr int kStateVersion = 1;

std::string StepDirName(std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%07zu", step);
  return buf;
}

std::string Describe(const Batch& b) {
  std::ostringstream os;
  os << ObjectiveName(b.objective) << " batch '" << b.label << "' (" << b.rows << " rows, enc_len "
     << b.enc_len << ", dec_len " << b.dec_len << ", " << b.LossTokens() << " loss tokens)";
  return os.str();
}

void AppendLine(const std::string& path, const std::string& line) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot append to " + path);
  out << line << '\n';
}

struct Snapshot {
  const ModelParams<float>* params;
  const AdamState* adam;
  const Vocabulary* vocab;
  const TrainJob* job;
  std::string sampler_rng;
  std::string dropout_rng;
  const std::vector<std::string>* metrics;
};

void WriteCheckpoint(const Snapshot& s, const std::string& dir) {
  const std::string tmp = dir + ".partial";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  SaveParams(*s.params, tmp);
  SaveVocab(*s.vocab, tmp + "/vocab.txt");
  WriteTensorBlob(s.adam->m, tmp + "/adam_m.bin");
  WriteTensorBlob(s.adam->v, tmp + "/adam_v.bin");
  json state = {{"format", kStateFormat},
                {"version", kStateVersion},
                {"step", s.adam->step},
                {"sampler_rng", s.sampler_rng},
                {"dropout_rng", s.dropout_rng},
                {"sampling", ToJson(s.job->policy)},
                {"mass", ToJson(s.job->mask)},
                {"model", ToJson(s.job->model)},
                {"train", ToJson(s.job->train)}};
  WriteFile(tmp + "/trainer_state.json", state.dump(2) + "\n");
  std::string log;
  for (const auto& line : *s.metrics) log += line + "\n";
  WriteFile(tmp + "/metrics.jsonl", log);
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

}  // namespace

void TrainConfig::Validate() const {
  if (total_steps == 0) throw Error("train.total_steps must be >= 1");
  if (warmup_steps < 1) throw Error("train.warmup_steps must be >= 1");
  if (!(clip_norm > 0.0)) throw Error("train.clip_norm must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw Error("train: Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw Error("train.adam_eps must be > 0");
  if (!(lr_scale > 0.0)) throw Error("train.lr_scale must be > 0");
  if (log_every == 0) throw Error("train.log_every must be >= 1");
}

double LearningRate(std::size_t step, std::size_t d_model, std::size_t warmup) {
  if (step < 1) throw Error("learning rate is defined for step >= 1");
  if (warmup < 1) throw Error("warmup must be >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  return std::pow(static_cast<double>(d_model), -0.5) * std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

std::string MetricsToJsonLine(const MetricsRecord& r) {
  json j = {{"step", r.step},
            {"objective", ObjectiveName(r.objective)},
            {"label", r.label},
            {"loss", r.loss},
            {"nll", r.nll},
            {"tokens", r.tokens},
            {"lr", r.learning_rate},
            {"grad_norm", r.grad_norm}};
  return j.dump();
}

MetricsRecord TrainStep(ModelParams<float>& params, AdamState& state, const Batch& batch,
                        const TrainConfig& config, Rng* dropout_rng) {
  if (state.m.count() != params.count()) state = AdamState::For(params);
  const auto t0 = std::chrono::steady_clock::now();
  ForwardOptions opts;
  opts.train = true;
  opts.dropout_rng = dropout_rng;
  GradResult<float> g = Backward(params, batch, opts);
  if (!std::isfinite(g.loss)) {
    throw Error("non-finite loss at step " + std::to_string(state.step + 1) + " on " + Describe(batch));
  }

  double sq = 0.0;
  for (std::size_t t = 0; t < g.grads.count(); ++t) {
    for (float x : g.grads.tensor(t).data) sq += static_cast<double>(x) * x;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) {
    throw Error("non-finite gradient norm at step " + std::to_string(state.step + 1) + " on " +
                Describe(batch));
  }
  // Only rescale when the cap binds, so any cap above the norm is a no-op.
  const float scale = norm > config.clip_norm ? static_cast<float>(config.clip_norm / norm) : 1.0f;

  state.step += 1;
  const double lr =
      config.lr_scale * LearningRate(state.step, params.config().d_model, config.warmup_steps);
  const double t = static_cast<double>(state.step);
  const float b1 = static_cast<float>(config.adam_beta1);
  const float b2 = static_cast<float>(config.adam_beta2);
  const float c1 = static_cast<float>(1.0 / (1.0 - std::pow(config.adam_beta1, t)));
  const float c2 = static_cast<float>(1.0 / (1.0 - std::pow(config.adam_beta2, t)));
  const float eps = static_cast<float>(config.adam_eps);
  const float lr_f = static_cast<float>(lr);
  for (std::size_t i = 0; i < params.count(); ++i) {
    auto& p = params.tensor(i).data;
    auto& m = state.m.tensor(i).data;
    auto& v = state.v.tensor(i).data;
    const auto& gr = g.grads.tensor(i).data;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const float gj = gr[j] * scale;
      m[j] = b1 * m[j] + (1.0f - b1) * gj;
      v[j] = b2 * v[j] + (1.0f - b2) * gj * gj;
      const float mhat = m[j] * c1;
      const float vhat = v[j] * c2;
      p[j] -= lr_f * mhat / (std::sqrt(vhat) + eps);
    }
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MetricsRecord r;
  r.step = state.step;
  r.objective = batch.objective;
  r.label = batch.label;
  r.loss = g.loss;
  r.nll = g.nll;
  r.tokens = g.token_count;
  r.learning_rate = lr;
  r.grad_norm = norm;
  r.tokens_per_sec = secs > 0.0 ? static_cast<double>(g.token_count) / secs : 0.0;
  return r;
}

LoadedModel LoadCheckpoint(const std::string& dir) {
  if (!fs::exists(dir + "/manifest.json")) throw Error(dir + " is not a checkpoint directory");
  LoadedModel m{LoadParams(dir), LoadVocab(dir + "/vocab.txt")};
  if (m.vocab.size() != m.params.config().vocab_size) {
    throw Error(dir + ": vocabulary has " + std::to_string(m.vocab.size()) +
                " pieces but the model expects " + std::to_string(m.params.config().vocab_size));
  }
  return m;
}

TrainResult Train(const CorpusRegistry& registry, const Vocabulary& vocab, const TrainJob& job,
                  const std::string& out_dir, const TrainOptions& options) {
  job.train.Validate();
  job.policy.Validate();
  job.mask.Validate();
  job.model.Validate();
  if (job.model.vocab_size != vocab.size()) {
    throw Error("model.vocab_size " + std::to_string(job.model.vocab_size) +
                " does not match the vocabulary size " + std::to_string(vocab.size()));
  }
  if (job.policy.max_len > job.model.max_positions) {
    throw Error("sampling.max_len exceeds model.max_positions");
  }

  fs::create_directories(out_dir);
  const std::string metrics_path = out_dir + "/metrics.jsonl";
  const std::string throughput_path = out_dir + "/throughput.jsonl";

  BatchSampler sampler(registry, vocab, job.policy, job.mask);
  Rng dropout_rng(MixSeed(job.train.seed, 2));
  ModelParams<float> params;
  AdamState adam;
  std::vector<std::string> metrics;

  if (options.resume_from.empty()) {
    params = InitParams(job.model, MixSeed(job.train.seed, 1));
    adam = AdamState::For(params);
  } else {
    const std::string& dir = options.resume_from;
    const json state = ParseJsonFile(dir + "/trainer_state.json");
    if (state.value("format", "") != kStateFormat || state.value("version", -1) != kStateVersion) {
      throw Error(dir + ": unsupported trainer state");
    }
    params = LoadParams(dir, &job.model);
    if (!(params.config() == job.model)) throw Error(dir + ": model config differs from the job");
    if (!(LoadVocab(dir + "/vocab.txt") == vocab)) throw Error(dir + ": vocabulary differs");
    adam = AdamState::For(params);
    ReadTensorBlob(adam.m, dir + "/adam_m.bin");
    ReadTensorBlob(adam.v, dir + "/adam_v.bin");
    adam.step = state.at("step").get<std::size_t>();
    sampler.LoadState(state.at("sampler_rng").get<std::string>());
    dropout_rng.LoadState(state.at("dropout_rng").get<std::string>());
    metrics = ReadLines(dir + "/metrics.jsonl");
    if (adam.step > job.train.total_steps) {
      throw Error(dir + ": checkpoint step " + std::to_string(adam.step) + " is past total_steps");
    }
  }

  {
    std::string log;
    for (const auto& line : metrics) log += line + "\n";
    WriteFile(metrics_path, log);
    WriteFile(throughput_path, "");
  }

  auto snapshot = [&] {
    return Snapshot{&params, &adam, &vocab, &job, sampler.SaveState(), dropout_rng.SaveState(),
                    &metrics};
  };

  TrainResult result;
  result.metrics_path = metrics_path;
  const auto start = std::chrono::steady_clock::now();
  while (adam.step < job.train.total_steps) {
    const Batch batch = sampler.Next();
    const MetricsRecord rec = TrainStep(params, adam, batch, job.train, &dropout_rng);
    result.last_loss = rec.loss;
    ++result.steps_run;
    if (rec.step % job.train.log_every == 0 || rec.step == job.train.total_steps) {
      const std::string line = MetricsToJsonLine(rec);
      metrics.push_back(line);
      AppendLine(metrics_path, line);
      json tp = {{"step", rec.step}, {"tokens_per_sec", rec.tokens_per_sec}};
      AppendLine(throughput_path, tp.dump());
    }
    if (options.progress_every != 0 && rec.step % options.progress_every == 0) {
      std::fprintf(stderr, "step %zu %s %s loss %.4f lr %.3g\n", rec.step, ObjectiveName(rec.objective),
                   rec.label.c_str(), rec.loss, rec.learning_rate);
    }
    if (job.train.checkpoint_every != 0 && rec.step % job.train.checkpoint_every == 0 &&
        rec.step != job.train.total_steps) {
      WriteCheckpoint(snapshot(), out_dir + "/checkpoints/" + StepDirName(rec.step));
    }
  }
  result.final_checkpoint = out_dir + "/final";
  WriteCheckpoint(snapshot(), result.final_checkpoint);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace polymass
