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

// Co-training loop: one optimizer and one loss scale for translation and
// MASS batches, which arrive interleaved from the sampler.

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "polymass/batch.hpp"
#include "polymass/corpus.hpp"
#include "polymass/mass.hpp"
#include "polymass/model.hpp"
#include "polymass/sampler.hpp"
#include "polymass/subword.hpp"

namespace polymass {

struct TrainConfig {
  std::size_t total_steps = 1000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-9;
  std::size_t warmup_steps = 4000;
  // Multiplies the inverse-square-root schedule.
  double lr_scale = 1.0;
  // Global gradient-norm cap; infinity disables clipping.
  double clip_norm = 1.0;
  // 0 writes only the final checkpoint.
  std::size_t checkpoint_every = 0;
  std::size_t log_every = 1;
  std::uint64_t seed = 1;

  void Validate() const;
};

// d_model^-0.5 * min(step^-0.5, step * warmup^-1.5), step >= 1.
double LearningRate(std::size_t step, std::size_t d_model, std::size_t warmup);

struct AdamState {
  std::size_t step = 0;
  ModelParams<float> m;
  ModelParams<float> v;

  static AdamState For(const ModelParams<float>& params) {
    return {0, params.ZerosLike(), params.ZerosLike()};
  }
};

struct MetricsRecord {
  std::size_t step = 0;
  Objective objective = Objective::kTranslation;
  std::string label;
  double loss = 0.0;
  double nll = 0.0;
  std::size_t tokens = 0;
  double learning_rate = 0.0;
  double grad_norm = 0.0;
  double tokens_per_sec = 0.0;
};

// Deterministic fields only; throughput is logged separately.
std::string MetricsToJsonLine(const MetricsRecord& r);

// Backward pass, global-norm clip, bias-corrected Adam update. Throws on a
// non-finite loss, naming the batch.
MetricsRecord TrainStep(ModelParams<float>& params, AdamState& state, const Batch& batch,
                        const TrainConfig& config, Rng* dropout_rng = nullptr);

struct TrainJob {
  SamplingPolicy policy;
  MaskSpec mask;
  ModelConfig model;
  TrainConfig train;
};

struct TrainResult {
  std::string final_checkpoint;
  std::string metrics_path;
  std::size_t steps_run = 0;
  double last_loss = 0.0;
  double seconds = 0.0;
};

// Runs the job into `out_dir`:
//   metrics.jsonl, throughput.jsonl, checkpoints/step_NNNNNNN/, final/
// Every checkpoint holds params, optimizer moments, sampler and dropout
// generator states and the metrics written so far, so resuming from it
// reproduces the uninterrupted run bit for bit.
struct TrainOptions {
  // Checkpoint directory to continue from; empty starts fresh.
  std::string resume_from;
  // Prints a progress line to stderr every n steps; 0 is silent.
  std::size_t progress_every = 0;
};

TrainResult Train(const CorpusRegistry& registry, const Vocabulary& vocab, const TrainJob& job,
                  const std::string& out_dir, const TrainOptions& options = {});

// Parameters and vocabulary of a checkpoint directory.
struct LoadedModel {
  ModelParams<float> params;
  Vocabulary vocab;
};
LoadedModel LoadCheckpoint(const std::string& dir);

}  // namespace polymass
