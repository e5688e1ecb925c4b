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

#include <algorithm>

#include "polymass/batch.hpp"
#include "polymass/subword.hpp"

namespace polymass {

const char* ObjectiveName(Objective o) {
  return o == Objective::kTranslation ? "translation" : "mass";
}

std::size_t Batch::LossTokens() const {
  std::size_t n = 0;
  for (auto m : loss_mask) n += m;
  return n;
}

Batch MakeBatch(const std::vector<TrainingExample>& rows, Objective objective,
                std::string label) {
  Batch b;
  b.objective = objective;
  b.label = std::move(label);
  b.rows = rows.size();
  for (const auto& r : rows) {
    if (r.enc.size() != r.enc_pos.size() || r.dec_in.size() != r.target.size() ||
        r.dec_in.size() != r.dec_pos.size() || r.dec_in.size() != r.loss_mask.size()) {
      throw Error("MakeBatch: inconsistent row lengths");
    }
    b.enc_len = std::max(b.enc_len, r.enc.size());
    b.dec_len = std::max(b.dec_len, r.dec_in.size());
  }
  b.enc_ids.assign(b.rows * b.enc_len, Vocabulary::kPad);
  b.enc_pos.assign(b.rows * b.enc_len, 0);
  b.dec_in_ids.assign(b.rows * b.dec_len, Vocabulary::kPad);
  b.target_ids.assign(b.rows * b.dec_len, Vocabulary::kPad);
  b.dec_pos.assign(b.rows * b.dec_len, 0);
  b.loss_mask.assign(b.rows * b.dec_len, 0);
  for (std::size_t i = 0; i < b.rows; ++i) {
    const auto& r = rows[i];
    std::copy(r.enc.begin(), r.enc.end(), b.enc_ids.begin() + i * b.enc_len);
    std::copy(r.enc_pos.begin(), r.enc_pos.end(), b.enc_pos.begin() + i * b.enc_len);
    std::copy(r.dec_in.begin(), r.dec_in.end(), b.dec_in_ids.begin() + i * b.dec_len);
    std::copy(r.target.begin(), r.target.end(), b.target_ids.begin() + i * b.dec_len);
    std::copy(r.dec_pos.begin(), r.dec_pos.end(), b.dec_pos.begin() + i * b.dec_len);
    std::copy(r.loss_mask.begin(), r.loss_mask.end(), b.loss_mask.begin() + i * b.dec_len);
  }
  return b;
}

TrainingExample MakeTranslationExample(const std::vector<TokenId>& src,
                                       const std::vector<TokenId>& tgt,
                                       TokenId target_tag) {
  TrainingExample ex;
  ex.enc.reserve(src.size() + 2);
  ex.enc.push_back(target_tag);
  ex.enc.insert(ex.enc.end(), src.begin(), src.end());
  ex.enc.push_back(Vocabulary::kEos);
  ex.dec_in.push_back(Vocabulary::kBos);
  ex.dec_in.insert(ex.dec_in.end(), tgt.begin(), tgt.end());
  ex.target = tgt;
  ex.target.push_back(Vocabulary::kEos);
  for (std::size_t i = 0; i < ex.enc.size(); ++i) ex.enc_pos.push_back(static_cast<std::int32_t>(i));
  for (std::size_t i = 0; i < ex.dec_in.size(); ++i) ex.dec_pos.push_back(static_cast<std::int32_t>(i));
  ex.loss_mask.assign(ex.target.size(), 1);
  return ex;
}

Batch PermuteRows(const Batch& b, const std::vector<std::size_t>& order) {
  if (order.size() != b.rows) throw Error("PermuteRows: order size mismatch");
  Batch out = b;
  auto copy_row = [&](const auto& src, auto& dst, std::size_t len, std::size_t to,
                      std::size_t from) {
    std::copy_n(src.begin() + from * len, len, dst.begin() + to * len);
  };
  for (std::size_t i = 0; i < order.size(); ++i) {
    copy_row(b.enc_ids, out.enc_ids, b.enc_len, i, order[i]);
    copy_row(b.enc_pos, out.enc_pos, b.enc_len, i, order[i]);
    copy_row(b.dec_in_ids, out.dec_in_ids, b.dec_len, i, order[i]);
    copy_row(b.target_ids, out.target_ids, b.dec_len, i, order[i]);
    copy_row(b.dec_pos, out.dec_pos, b.dec_len, i, order[i]);
    copy_row(b.loss_mask, out.loss_mask, b.dec_len, i, order[i]);
  }
  return out;
}

Batch PadColumns(const Batch& b, std::size_t extra_enc, std::size_t extra_dec) {
  Batch out;
  out.objective = b.objective;
  out.label = b.label;
  out.rows = b.rows;
  out.enc_len = b.enc_len + extra_enc;
  out.dec_len = b.dec_len + extra_dec;
  auto widen = [&](const auto& src, auto& dst, std::size_t old_len, std::size_t new_len) {
    dst.assign(b.rows * new_len, 0);
    for (std::size_t r = 0; r < b.rows; ++r) {
      std::copy_n(src.begin() + r * old_len, old_len, dst.begin() + r * new_len);
    }
  };
  widen(b.enc_ids, out.enc_ids, b.enc_len, out.enc_len);
  widen(b.enc_pos, out.enc_pos, b.enc_len, out.enc_len);
  widen(b.dec_in_ids, out.dec_in_ids, b.dec_len, out.dec_len);
  widen(b.target_ids, out.target_ids, b.dec_len, out.dec_len);
  widen(b.dec_pos, out.dec_pos, b.dec_len, out.dec_len);
  widen(b.loss_mask, out.loss_mask, b.dec_len, out.dec_len);
  return out;
}

}  // namespace polymass
