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

#include "polymass/model.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "polymass/autodiff.hpp"

namespace polymass {

void ModelConfig::Validate() const {
  if (n_layers == 0 || n_heads == 0 || d_model == 0 || d_ff == 0) {
    throw Error("ModelConfig: layer, head and width sizes must be positive");
  }
  if (d_model % n_heads != 0) {
    throw Error("ModelConfig: d_model " + std::to_string(d_model) +
                " is not divisible by n_heads " + std::to_string(n_heads));
  }
  if (vocab_size < Vocabulary::kNumReserved + 1) {
    throw Error("ModelConfig: vocab_size must cover the reserved ids");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("ModelConfig: dropout must lie in [0, 1)");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw Error("ModelConfig: label_smoothing must lie in [0, 1)");
  }
  if (max_positions == 0) throw Error("ModelConfig: max_positions must be positive");
}

namespace {

struct Shape {
  std::string name;
  std::size_t rows, cols;
  enum class Init { kUniform, kOnes, kZeros } init;
  std::size_t fan_in;
};

std::vector<Shape> ParamShapes(const ModelConfig& c) {
  std::vector<Shape> s;
  const std::size_t d = c.d_model;
  auto linear = [&](const std::string& p, std::size_t in, std::size_t out) {
    s.push_back({p + ".weight", in, out, Shape::Init::kUniform, in});
    s.push_back({p + ".bias", 1, out, Shape::Init::kZeros, 0});
  };
  auto norm = [&](const std::string& p) {
    s.push_back({p + ".gain", 1, d, Shape::Init::kOnes, 0});
    s.push_back({p + ".bias", 1, d, Shape::Init::kZeros, 0});
  };
  s.push_back({"embed", c.vocab_size, d, Shape::Init::kUniform, d});
  if (!c.tie_embeddings) s.push_back({"output", c.vocab_size, d, Shape::Init::kUniform, d});
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const std::string p = "encoder.layer" + std::to_string(l);
    norm(p + ".attn_norm");
    linear(p + ".attn.qkv", d, 3 * d);
    linear(p + ".attn.out", d, d);
    norm(p + ".ffn_norm");
    linear(p + ".ffn.in", d, c.d_ff);
    linear(p + ".ffn.out", c.d_ff, d);
  }
  norm("encoder.final_norm");
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const std::string p = "decoder.layer" + std::to_string(l);
    norm(p + ".self_norm");
    linear(p + ".self_attn.qkv", d, 3 * d);
    linear(p + ".self_attn.out", d, d);
    norm(p + ".cross_norm");
    linear(p + ".cross_attn.q", d, d);
    linear(p + ".cross_attn.kv", d, 2 * d);
    linear(p + ".cross_attn.out", d, d);
    norm(p + ".ffn_norm");
    linear(p + ".ffn.in", d, c.d_ff);
    linear(p + ".ffn.out", c.d_ff, d);
  }
  norm("decoder.final_norm");
  return s;
}

// Sinusoidal table, cached per (width, length).
template <typename T>
const Matrix<T>& PositionTable(std::size_t d, std::size_t max_positions) {
  static std::mutex mu;
  static std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<Matrix<T>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{d, max_positions}];
  if (!slot) {
    slot = std::make_unique<Matrix<T>>(max_positions, d);
    for (std::size_t pos = 0; pos < max_positions; ++pos) {
      for (std::size_t i = 0; i < d; i += 2) {
        const double angle = static_cast<double>(pos) /
                             std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d));
        (*slot)(pos, i) = static_cast<T>(std::sin(angle));
        if (i + 1 < d) (*slot)(pos, i + 1) = static_cast<T>(std::cos(angle));
      }
    }
  }
  return *slot;
}

template <typename T>
Matrix<T> PositionRows(const ModelConfig& c, std::span<const std::int32_t> positions) {
  const Matrix<T>& table = PositionTable<T>(c.d_model, c.max_positions);
  Matrix<T> out(positions.size(), c.d_model);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] < 0 || static_cast<std::size_t>(positions[i]) >= c.max_positions) {
      throw Error("position index " + std::to_string(positions[i]) +
                  " is outside max_positions " + std::to_string(c.max_positions));
    }
    std::copy_n(table.row(static_cast<std::size_t>(positions[i])), c.d_model, out.row(i));
  }
  return out;
}

std::vector<std::uint8_t> NonPad(std::span<const TokenId> ids) {
  std::vector<std::uint8_t> v(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) v[i] = ids[i] != Vocabulary::kPad;
  return v;
}

template <typename T>
class GraphBuilder {
 public:
  GraphBuilder(Tape<T>& tape, const ModelParams<T>& params, ModelParams<T>* grads,
               const ForwardOptions& opts)
      : tape_(tape), p_(params), g_(grads), opts_(opts), c_(params.config()) {
    if (opts_.train && c_.dropout > 0.0 && opts_.dropout_rng == nullptr) {
      throw Error("Forward: dropout needs a random source in training mode");
    }
  }

  Var P(const std::string& name) {
    const std::size_t idx = p_.IndexOf(name);
    auto it = bound_.find(idx);
    if (it != bound_.end()) return it->second;
    Var v = tape_.Parameter(p_.tensor(idx), g_ ? &g_->tensor(idx) : nullptr);
    bound_.emplace(idx, v);
    return v;
  }

  Var Linear(Var x, const std::string& prefix) {
    return tape_.AddBias(tape_.MatMul(x, P(prefix + ".weight")), P(prefix + ".bias"));
  }
  Var Norm(Var x, const std::string& prefix) {
    return tape_.LayerNorm(x, P(prefix + ".gain"), P(prefix + ".bias"),
                           static_cast<T>(c_.layer_norm_eps));
  }
  Var Drop(Var x) {
    if (!opts_.train || c_.dropout <= 0.0) return x;
    return tape_.Dropout(x, c_.dropout, *opts_.dropout_rng);
  }

  Var EmbedTokens(std::span<const TokenId> ids, std::span<const std::int32_t> pos) {
    const T scale = static_cast<T>(std::sqrt(static_cast<double>(c_.d_model)));
    Var x = tape_.Embed(P("embed"), ids, scale);
    return Drop(tape_.AddConstant(x, PositionRows<T>(c_, pos)));
  }

  Var Encoder(std::span<const TokenId> ids, std::span<const std::int32_t> pos,
              std::size_t batch, std::size_t len, std::span<const std::uint8_t> valid) {
    Var x = EmbedTokens(ids, pos);
    for (std::size_t l = 0; l < c_.n_layers; ++l) {
      const std::string p = "encoder.layer" + std::to_string(l);
      Var h = Norm(x, p + ".attn_norm");
      Var qkv = Linear(h, p + ".attn.qkv");
      AttentionArgs<T> a;
      a.q = a.k = a.v = qkv;
      a.k_offset = c_.d_model;
      a.v_offset = 2 * c_.d_model;
      a.batch = batch;
      a.q_len = a.k_len = len;
      a.heads = c_.n_heads;
      a.width = c_.d_model;
      a.key_valid = valid;
      x = tape_.Add(x, Drop(Linear(tape_.Attention(a), p + ".attn.out")));
      x = tape_.Add(x, Drop(FeedForward(Norm(x, p + ".ffn_norm"), p + ".ffn")));
    }
    return Norm(x, "encoder.final_norm");
  }

  Var Decoder(std::span<const TokenId> ids, std::span<const std::int32_t> pos,
              std::size_t batch, std::size_t len, std::span<const std::uint8_t> self_valid,
              Var memory, std::size_t src_len, std::span<const std::uint8_t> src_valid) {
    Var x = EmbedTokens(ids, pos);
    for (std::size_t l = 0; l < c_.n_layers; ++l) {
      const std::string p = "decoder.layer" + std::to_string(l);
      {
        Var qkv = Linear(Norm(x, p + ".self_norm"), p + ".self_attn.qkv");
        AttentionArgs<T> a;
        a.q = a.k = a.v = qkv;
        a.k_offset = c_.d_model;
        a.v_offset = 2 * c_.d_model;
        a.batch = batch;
        a.q_len = a.k_len = len;
        a.heads = c_.n_heads;
        a.width = c_.d_model;
        a.key_valid = self_valid;
        a.causal = true;
        x = tape_.Add(x, Drop(Linear(tape_.Attention(a), p + ".self_attn.out")));
      }
      {
        Var q = Linear(Norm(x, p + ".cross_norm"), p + ".cross_attn.q");
        Var kv = Linear(memory, p + ".cross_attn.kv");
        AttentionArgs<T> a;
        a.q = q;
        a.k = a.v = kv;
        a.v_offset = c_.d_model;
        a.batch = batch;
        a.q_len = len;
        a.k_len = src_len;
        a.heads = c_.n_heads;
        a.width = c_.d_model;
        a.key_valid = src_valid;
        x = tape_.Add(x, Drop(Linear(tape_.Attention(a), p + ".cross_attn.out")));
      }
      x = tape_.Add(x, Drop(FeedForward(Norm(x, p + ".ffn_norm"), p + ".ffn")));
    }
    return Norm(x, "decoder.final_norm");
  }

  Var Logits(Var h) { return tape_.MatMulNT(h, P(c_.tie_embeddings ? "embed" : "output")); }

 private:
  Var FeedForward(Var h, const std::string& prefix) {
    return Linear(tape_.Gelu(Linear(h, prefix + ".in")), prefix + ".out");
  }

  Tape<T>& tape_;
  const ModelParams<T>& p_;
  ModelParams<T>* g_;
  ForwardOptions opts_;
  const ModelConfig& c_;
  std::unordered_map<std::size_t, Var> bound_;
};

void CheckBatch(const ModelConfig& c, const Batch& b) {
  if (b.rows == 0) throw Error("Forward: empty batch");
  if (b.enc_ids.size() != b.rows * b.enc_len || b.dec_in_ids.size() != b.rows * b.dec_len ||
      b.target_ids.size() != b.rows * b.dec_len || b.loss_mask.size() != b.rows * b.dec_len ||
      b.enc_pos.size() != b.enc_ids.size() || b.dec_pos.size() != b.dec_in_ids.size()) {
    throw Error("Forward: batch matrices have inconsistent shapes");
  }
  for (auto* ids : {&b.enc_ids, &b.dec_in_ids, &b.target_ids}) {
    for (TokenId t : *ids) {
      if (t < 0 || static_cast<std::size_t>(t) >= c.vocab_size) {
        throw Error("Forward: token id " + std::to_string(t) + " outside vocabulary");
      }
    }
  }
}

template <typename T>
struct GraphOut {
  Var loss;
  Var logits;
  LossStats stats;
};

template <typename T>
GraphOut<T> BuildGraph(Tape<T>& tape, const ModelParams<T>& params, ModelParams<T>* grads,
                       const Batch& b, const ForwardOptions& opts, bool loss_rows_only) {
  const ModelConfig& c = params.config();
  CheckBatch(c, b);
  GraphBuilder<T> g(tape, params, grads, opts);
  const auto enc_valid = NonPad(b.enc_ids);
  const auto dec_valid = NonPad(b.dec_in_ids);
  Var memory = g.Encoder(b.enc_ids, b.enc_pos, b.rows, b.enc_len, enc_valid);
  Var h = g.Decoder(b.dec_in_ids, b.dec_pos, b.rows, b.dec_len, dec_valid, memory, b.enc_len,
                    enc_valid);
  GraphOut<T> out;
  if (loss_rows_only) {
    std::vector<std::size_t> rows;
    std::vector<TokenId> targets;
    for (std::size_t i = 0; i < b.loss_mask.size(); ++i) {
      if (b.loss_mask[i]) {
        rows.push_back(i);
        targets.push_back(b.target_ids[i]);
      }
    }
    const std::vector<std::uint8_t> ones(rows.size(), 1);
    out.logits = g.Logits(tape.GatherRows(h, rows));
    out.loss = tape.CrossEntropy(out.logits, targets, ones,
                                 static_cast<T>(c.label_smoothing), &out.stats);
  } else {
    out.logits = g.Logits(h);
    out.loss = tape.CrossEntropy(out.logits, b.target_ids, b.loss_mask,
                                 static_cast<T>(c.label_smoothing), &out.stats);
  }
  return out;
}

}  // namespace

template <typename T>
ModelParams<T>::ModelParams(const ModelConfig& config) : config_(config) {
  config_.Validate();
  for (const auto& s : ParamShapes(config_)) {
    index_.emplace(s.name, names_.size());
    names_.push_back(s.name);
    tensors_.emplace_back(s.rows, s.cols);
    if (s.init == Shape::Init::kOnes) tensors_.back().Fill(T(1));
  }
}

template <typename T>
std::size_t ModelParams<T>::IndexOf(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("no parameter tensor named '" + name + "'");
  return it->second;
}

template <typename T>
Matrix<T>& ModelParams<T>::at(const std::string& name) {
  return tensors_[IndexOf(name)];
}

template <typename T>
const Matrix<T>& ModelParams<T>::at(const std::string& name) const {
  return tensors_[IndexOf(name)];
}

template <typename T>
std::size_t ModelParams<T>::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

template <typename T>
bool ModelParams<T>::AllFinite() const {
  for (const auto& t : tensors_) {
    for (T v : t.data) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

template class ModelParams<float>;
template class ModelParams<double>;

ModelParams<float> InitParams(const ModelConfig& config, std::uint64_t seed) {
  ModelParams<float> params(config);
  Rng rng(seed);
  const auto shapes = ParamShapes(config);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (shapes[i].init != Shape::Init::kUniform) continue;
    const double limit = std::sqrt(3.0 / static_cast<double>(shapes[i].fan_in));
    for (auto& v : params.tensor(i).data) {
      v = static_cast<float>((2.0 * rng.UniformReal() - 1.0) * limit);
    }
  }
  return params;
}

template <typename T>
ForwardResult<T> Forward(const ModelParams<T>& params, const Batch& batch,
                         const ForwardOptions& options) {
  Tape<T> tape(false);
  GraphOut<T> g = BuildGraph<T>(tape, params, nullptr, batch, options, false);
  ForwardResult<T> r;
  r.logits = tape.value(g.logits);
  r.loss = g.stats.loss;
  r.nll = g.stats.nll;
  r.token_count = g.stats.tokens;
  return r;
}

template <typename T>
GradResult<T> Backward(const ModelParams<T>& params, const Batch& batch,
                       const ForwardOptions& options, T loss_scale) {
  GradResult<T> r;
  r.grads = params.ZerosLike();
  Tape<T> tape(true);
  GraphOut<T> g = BuildGraph(tape, params, &r.grads, batch, options, true);
  r.loss = g.stats.loss;
  r.nll = g.stats.nll;
  r.token_count = g.stats.tokens;
  if (r.token_count > 0) tape.Backward(g.loss, loss_scale);
  return r;
}

template ForwardResult<float> Forward(const ModelParams<float>&, const Batch&,
                                      const ForwardOptions&);
template ForwardResult<double> Forward(const ModelParams<double>&, const Batch&,
                                       const ForwardOptions&);
template GradResult<float> Backward(const ModelParams<float>&, const Batch&,
                                    const ForwardOptions&, float);
template GradResult<double> Backward(const ModelParams<double>&, const Batch&,
                                     const ForwardOptions&, double);

template <typename T>
EncodedSource<T> RunEncoder(const ModelParams<T>& params,
                            const std::vector<std::vector<TokenId>>& sources,
                            TokenId target_tag) {
  if (sources.empty()) throw Error("RunEncoder: no sources");
  std::vector<TrainingExample> rows;
  rows.reserve(sources.size());
  for (const auto& s : sources) rows.push_back(MakeTranslationExample(s, {}, target_tag));
  const Batch b = MakeBatch(rows, Objective::kTranslation, "");
  Tape<T> tape(false);
  GraphBuilder<T> g(tape, params, nullptr, {});
  EncodedSource<T> out;
  out.key_valid = NonPad(b.enc_ids);
  out.batch = b.rows;
  out.len = b.enc_len;
  for (TokenId t : b.enc_ids) {
    if (t < 0 || static_cast<std::size_t>(t) >= params.config().vocab_size) {
      throw Error("RunEncoder: token id " + std::to_string(t) + " outside vocabulary");
    }
  }
  Var m = g.Encoder(b.enc_ids, b.enc_pos, b.rows, b.enc_len, out.key_valid);
  out.memory = tape.value(m);
  return out;
}

template <typename T>
Matrix<T> NextTokenLogProbs(const ModelParams<T>& params, const EncodedSource<T>& src,
                            const std::vector<std::size_t>& source_row,
                            const std::vector<std::vector<TokenId>>& prefixes) {
  const ModelConfig& c = params.config();
  const std::size_t n = prefixes.size();
  if (n == 0 || source_row.size() != n) throw Error("NextTokenLogProbs: bad prefix set");
  const std::size_t t = prefixes[0].size();
  std::vector<TokenId> ids;
  std::vector<std::int32_t> pos;
  ids.reserve(n * t);
  pos.reserve(n * t);
  for (const auto& p : prefixes) {
    if (p.size() != t) throw Error("NextTokenLogProbs: prefixes differ in length");
    for (std::size_t i = 0; i < t; ++i) {
      ids.push_back(p[i]);
      pos.push_back(static_cast<std::int32_t>(i));
    }
  }
  Matrix<T> memory(n * src.len, c.d_model);
  std::vector<std::uint8_t> valid(n * src.len);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = source_row[i];
    std::copy_n(src.memory.row(r * src.len), src.len * c.d_model, memory.row(i * src.len));
    std::copy_n(src.key_valid.begin() + r * src.len, src.len, valid.begin() + i * src.len);
  }
  Tape<T> tape(false);
  GraphBuilder<T> g(tape, params, nullptr, {});
  const auto self_valid = NonPad(ids);
  Var mem = tape.Constant(std::move(memory));
  Var h = g.Decoder(ids, pos, n, t, self_valid, mem, src.len, valid);
  std::vector<std::size_t> last(n);
  for (std::size_t i = 0; i < n; ++i) last[i] = i * t + t - 1;
  Matrix<T> z = tape.value(g.Logits(tape.GatherRows(h, last)));
  for (std::size_t r = 0; r < n; ++r) {
    T* zr = z.row(r);
    T mx = zr[0];
    for (std::size_t v = 1; v < z.cols; ++v) mx = std::max(mx, zr[v]);
    double sum = 0.0;
    for (std::size_t v = 0; v < z.cols; ++v) sum += std::exp(static_cast<double>(zr[v] - mx));
    const T lse = static_cast<T>(static_cast<double>(mx) + std::log(sum));
    for (std::size_t v = 0; v < z.cols; ++v) zr[v] -= lse;
  }
  return z;
}

template EncodedSource<float> RunEncoder(const ModelParams<float>&,
                                         const std::vector<std::vector<TokenId>>&, TokenId);
template EncodedSource<double> RunEncoder(const ModelParams<double>&,
                                          const std::vector<std::vector<TokenId>>&, TokenId);
template Matrix<float> NextTokenLogProbs(const ModelParams<float>&, const EncodedSource<float>&,
                                         const std::vector<std::size_t>&,
                                         const std::vector<std::vector<TokenId>>&);
template Matrix<double> NextTokenLogProbs(const ModelParams<double>&,
                                          const EncodedSource<double>&,
                                          const std::vector<std::size_t>&,
                                          const std::vector<std::vector<TokenId>>&);

}  // namespace polymass
