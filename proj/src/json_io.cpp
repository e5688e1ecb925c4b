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

#include "polymass/json_io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <string>

namespace polymass {
namespace {

using nlohmann::json;

void RequireKeys(const json& j, const char* what, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(std::string(what) + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw Error(std::string(what) + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
void Get(const json& j, const char* key, T& out, const char* what) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw Error(std::string(what) + "." + key + ": " + e.what());
  }
}

// JSON has no infinity; the clip norm uses null or the string "inf".
json DoubleOrInf(double x) {
  if (std::isinf(x)) return "inf";
  return x;
}

double ReadDoubleOrInf(const json& j, const char* key, double fallback, const char* what) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (it->is_null()) return std::numeric_limits<double>::infinity();
  if (it->is_string()) {
    if (it->get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw Error(std::string(what) + "." + key + ": expected a number or \"inf\"");
  }
  if (!it->is_number()) throw Error(std::string(what) + "." + key + ": expected a number");
  return it->get<double>();
}

}  // namespace

json ToJson(const ModelConfig& c) {
  return {{"n_layers", c.n_layers},
          {"n_heads", c.n_heads},
          {"d_model", c.d_model},
          {"d_ff", c.d_ff},
          {"dropout", c.dropout},
          {"vocab_size", c.vocab_size},
          {"max_positions", c.max_positions},
          {"tie_embeddings", c.tie_embeddings},
          {"label_smoothing", c.label_smoothing},
          {"layer_norm_eps", c.layer_norm_eps}};
}

ModelConfig ModelConfigFromJson(const json& j) {
  const char* w = "model";
  RequireKeys(j, w,
              {"n_layers", "n_heads", "d_model", "d_ff", "dropout", "vocab_size", "max_positions",
               "tie_embeddings", "label_smoothing", "layer_norm_eps"});
  ModelConfig c;
  Get(j, "n_layers", c.n_layers, w);
  Get(j, "n_heads", c.n_heads, w);
  Get(j, "d_model", c.d_model, w);
  Get(j, "d_ff", c.d_ff, w);
  Get(j, "dropout", c.dropout, w);
  Get(j, "vocab_size", c.vocab_size, w);
  Get(j, "max_positions", c.max_positions, w);
  Get(j, "tie_embeddings", c.tie_embeddings, w);
  Get(j, "label_smoothing", c.label_smoothing, w);
  Get(j, "layer_norm_eps", c.layer_norm_eps, w);
  return c;
}

json ToJson(const SamplingPolicy& p) {
  return {{"temperature", p.temperature},
          {"mono_ratio", p.mono_ratio},
          {"batch_size", p.batch_size},
          {"max_len", p.max_len},
          {"seed", p.seed}};
}

SamplingPolicy SamplingPolicyFromJson(const json& j) {
  const char* w = "sampling";
  RequireKeys(j, w, {"temperature", "mono_ratio", "batch_size", "max_len", "seed"});
  SamplingPolicy p;
  Get(j, "temperature", p.temperature, w);
  Get(j, "mono_ratio", p.mono_ratio, w);
  Get(j, "batch_size", p.batch_size, w);
  Get(j, "max_len", p.max_len, w);
  Get(j, "seed", p.seed, w);
  return p;
}

json ToJson(const MaskSpec& m) {
  return {{"fragment_ratio", m.fragment_ratio},
          {"mask_prob", m.mask_prob},
          {"random_prob", m.random_prob},
          {"keep_prob", m.keep_prob},
          {"min_len", m.min_len},
          {"absolute_positions", m.absolute_positions}};
}

MaskSpec MaskSpecFromJson(const json& j) {
  const char* w = "mass";
  RequireKeys(j, w,
              {"fragment_ratio", "mask_prob", "random_prob", "keep_prob", "min_len",
               "absolute_positions"});
  MaskSpec m;
  Get(j, "fragment_ratio", m.fragment_ratio, w);
  Get(j, "mask_prob", m.mask_prob, w);
  Get(j, "random_prob", m.random_prob, w);
  Get(j, "keep_prob", m.keep_prob, w);
  Get(j, "min_len", m.min_len, w);
  Get(j, "absolute_positions", m.absolute_positions, w);
  return m;
}

json ToJson(const TrainConfig& t) {
  return {{"total_steps", t.total_steps},
          {"adam_beta1", t.adam_beta1},
          {"adam_beta2", t.adam_beta2},
          {"adam_eps", t.adam_eps},
          {"warmup_steps", t.warmup_steps},
          {"lr_scale", t.lr_scale},
          {"clip_norm", DoubleOrInf(t.clip_norm)},
          {"checkpoint_every", t.checkpoint_every},
          {"log_every", t.log_every},
          {"seed", t.seed}};
}

TrainConfig TrainConfigFromJson(const json& j) {
  const char* w = "train";
  RequireKeys(j, w,
              {"total_steps", "adam_beta1", "adam_beta2", "adam_eps", "warmup_steps", "lr_scale",
               "clip_norm", "checkpoint_every", "log_every", "seed"});
  TrainConfig t;
  Get(j, "total_steps", t.total_steps, w);
  Get(j, "adam_beta1", t.adam_beta1, w);
  Get(j, "adam_beta2", t.adam_beta2, w);
  Get(j, "adam_eps", t.adam_eps, w);
  Get(j, "warmup_steps", t.warmup_steps, w);
  Get(j, "lr_scale", t.lr_scale, w);
  t.clip_norm = ReadDoubleOrInf(j, "clip_norm", t.clip_norm, w);
  Get(j, "checkpoint_every", t.checkpoint_every, w);
  Get(j, "log_every", t.log_every, w);
  Get(j, "seed", t.seed, w);
  return t;
}

json ToJson(const CipherSpec& s) {
  json j = {{"lang", s.lang},
            {"lexicon_seed", s.lexicon_seed},
            {"shared_fraction", s.shared_fraction},
            {"identity_lexicon", s.identity_lexicon},
            {"reorder", ReorderToString(s.reorder)}};
  if (s.relative) j["relative"] = *s.relative;
  return j;
}

CipherSpec CipherSpecFromJson(const json& j) {
  const char* w = "cipher";
  RequireKeys(j, w,
              {"lang", "lexicon_seed", "shared_fraction", "relative", "identity_lexicon",
               "reorder"});
  if (!j.contains("lang")) throw Error("cipher: missing 'lang'");
  CipherSpec s;
  Get(j, "lang", s.lang, w);
  Get(j, "lexicon_seed", s.lexicon_seed, w);
  Get(j, "shared_fraction", s.shared_fraction, w);
  Get(j, "identity_lexicon", s.identity_lexicon, w);
  if (j.contains("relative") && !j["relative"].is_null()) {
    std::string rel;
    Get(j, "relative", rel, w);
    s.relative = rel;
  }
  std::string reorder = "none";
  Get(j, "reorder", reorder, w);
  s.reorder = ParseReorder(reorder);
  return s;
}

json ToJson(const GeneratorConfig& g) {
  return {{"base_vocab_size", g.base_vocab_size},
          {"zipf_s", g.zipf_s},
          {"len_min", g.len_min},
          {"len_max", g.len_max},
          {"context_strength", g.context_strength},
          {"successors_per_word", g.successors_per_word},
          {"grammar_seed", g.grammar_seed}};
}

GeneratorConfig GeneratorConfigFromJson(const json& j) {
  const char* w = "generator";
  RequireKeys(j, w,
              {"base_vocab_size", "zipf_s", "len_min", "len_max", "context_strength",
               "successors_per_word", "grammar_seed"});
  GeneratorConfig g;
  Get(j, "base_vocab_size", g.base_vocab_size, w);
  Get(j, "zipf_s", g.zipf_s, w);
  Get(j, "len_min", g.len_min, w);
  Get(j, "len_max", g.len_max, w);
  Get(j, "context_strength", g.context_strength, w);
  Get(j, "successors_per_word", g.successors_per_word, w);
  Get(j, "grammar_seed", g.grammar_seed, w);
  return g;
}

json ParseJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace polymass
