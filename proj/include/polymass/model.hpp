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

// Pre-layer-norm transformer encoder-decoder with a shared (optionally tied)
// token embedding. All language identity comes from the <2xx> tag that the
// batch builder places at the start of the encoder input.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "polymass/batch.hpp"
#include "polymass/common.hpp"
#include "polymass/subword.hpp"
#include "polymass/tensor.hpp"

namespace polymass {

struct ModelConfig {
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_model = 128;
  std::size_t d_ff = 256;
  double dropout = 0.0;
  std::size_t vocab_size = 0;
  std::size_t max_positions = 256;
  bool tie_embeddings = true;
  double label_smoothing = 0.1;
  double layer_norm_eps = 1e-5;

  void Validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Named tensors in a fixed order determined by the config.
template <typename T>
class ModelParams {
 public:
  ModelParams() = default;
  // Shapes implied by `config`; layer-norm gains 1, everything else 0.
  explicit ModelParams(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  std::size_t count() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Matrix<T>& tensor(std::size_t i) { return tensors_[i]; }
  const Matrix<T>& tensor(std::size_t i) const { return tensors_[i]; }
  Matrix<T>& at(const std::string& name);
  const Matrix<T>& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t IndexOf(const std::string& name) const;

  std::size_t ParameterCount() const;
  bool AllFinite() const;
  ModelParams ZerosLike() const {
    ModelParams out(config_);
    for (auto& t : out.tensors_) t.Fill(T(0));
    return out;
  }

  template <typename U>
  ModelParams<U> Cast() const {
    ModelParams<U> out(config_);
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
      const auto& src = tensors_[i].data;
      auto& dst = out.tensor(i).data;
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] = static_cast<U>(src[j]);
    }
    return out;
  }

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.config_ == b.config_ && a.names_ == b.names_ && a.tensors_ == b.tensors_;
  }

 private:
  ModelConfig config_;
  std::vector<std::string> names_;
  std::vector<Matrix<T>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Uniform init with variance 1/fan_in; layer-norm gains 1, all biases 0.
ModelParams<float> InitParams(const ModelConfig& config, std::uint64_t seed);

struct ForwardOptions {
  // Enables dropout; requires `dropout_rng` when config.dropout > 0.
  bool train = false;
  Rng* dropout_rng = nullptr;
};

template <typename T>
struct ForwardResult {
  Matrix<T> logits;  // (rows * dec_len) x vocab_size
  double loss = 0.0;
  double nll = 0.0;
  std::size_t token_count = 0;
};

template <typename T>
struct GradResult {
  double loss = 0.0;
  double nll = 0.0;
  std::size_t token_count = 0;
  ModelParams<T> grads;
};

template <typename T>
ForwardResult<T> Forward(const ModelParams<T>& params, const Batch& batch,
                         const ForwardOptions& options = {});

// Exact gradients of loss_scale * loss. Logits are only formed for rows that
// carry loss.
template <typename T>
GradResult<T> Backward(const ModelParams<T>& params, const Batch& batch,
                       const ForwardOptions& options = {}, T loss_scale = T(1));

// ---------------------------------------------------------------------------
// Decoding

template <typename T>
struct EncodedSource {
  Matrix<T> memory;  // (batch * len) x d_model
  std::vector<std::uint8_t> key_valid;
  std::size_t batch = 0;
  std::size_t len = 0;
};

// Frames each row as [tag] + src + [eos] and runs the encoder.
template <typename T>
EncodedSource<T> RunEncoder(const ModelParams<T>& params,
                            const std::vector<std::vector<TokenId>>& sources,
                            TokenId target_tag);

// Log-probabilities of the next token for each prefix. `source_row[i]` picks
// the encoded source of prefix i. All prefixes start with bos and have equal
// length.
template <typename T>
Matrix<T> NextTokenLogProbs(const ModelParams<T>& params, const EncodedSource<T>& src,
                            const std::vector<std::size_t>& source_row,
                            const std::vector<std::vector<TokenId>>& prefixes);

// Tokens exclude the final eos.
std::vector<TokenId> GreedyDecode(const ModelParams<float>& params, const Vocabulary& vocab,
                                  const std::vector<TokenId>& src, const LangCode& target_lang,
                                  std::size_t max_steps);

// Decodes many sources in lockstep; identical output to one-at-a-time calls.
std::vector<std::vector<TokenId>> GreedyDecodeBatch(
    const ModelParams<float>& params, const Vocabulary& vocab,
    const std::vector<std::vector<TokenId>>& sources, const LangCode& target_lang,
    std::size_t max_steps);

struct Hypothesis {
  std::vector<TokenId> tokens;  // without eos
  double log_prob = 0.0;        // includes the eos step when finished
  std::size_t length = 0;       // emitted tokens, eos included
  bool finished = false;
  double score = 0.0;           // log_prob / length^alpha
};

struct BeamResult {
  Hypothesis best;
  std::vector<Hypothesis> finished;  // every hypothesis that emitted eos
  // Every (prefix, token) expansion kept during the search, in order.
  std::vector<std::vector<TokenId>> explored;
};

// Candidates are ranked by raw log-probability during the search; the
// length penalty only ranks the final hypotheses.
BeamResult BeamDecode(const ModelParams<float>& params, const Vocabulary& vocab,
                      const std::vector<TokenId>& src, const LangCode& target_lang,
                      std::size_t beam_size, std::size_t max_steps, double length_penalty);

// ---------------------------------------------------------------------------
// Finite-difference gradient check in double precision.

struct GradCheckResult {
  double max_rel_error = 0.0;           // fourth-order central stencil
  double max_rel_error_two_point = 0.0;  // (L(x+h) - L(x-h)) / 2h, for reference
  std::string worst_tensor;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
};

// Checks every `stride`-th coordinate of every tensor. Relative error is
// |fd - analytic| / max(|fd|, |analytic|, floor).
GradCheckResult GradientCheck(const ModelParams<double>& params, const Batch& batch,
                              double step = 1e-3, std::size_t stride = 1, double floor = 1e-6);

// ---------------------------------------------------------------------------
// Checkpoints: <dir>/manifest.json + <dir>/params.bin (little-endian f32).

void SaveParams(const ModelParams<float>& params, const std::string& dir);
// When `expected` is given, every tensor shape must match it.
ModelParams<float> LoadParams(const std::string& dir, const ModelConfig* expected = nullptr);

// Raw tensor blobs, shared with the optimizer state files.
void WriteTensorBlob(const ModelParams<float>& params, const std::string& path);
void ReadTensorBlob(ModelParams<float>& params, const std::string& path);

}  // namespace polymass
