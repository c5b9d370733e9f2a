// Copyright 2026 The GenSR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gensr/dualrepr.hpp"

namespace gensr {

using ad::Tape;
using ad::Var;

void create_dualrepr_params(ParamStore& store, const DualReprConfig& config,
                            Rng& rng) {
  const int d = config.d_cf, dm = config.d_model;
  nn::init_normal(store, "dual.cf.pos", config.max_positions, d, 0.02, rng);
  nn::create_attention_params(store, "dual.cf.enc.attn", d, rng);
  nn::create_ffn_params(store, "dual.cf.enc.ffn", d, config.ffn_mult * d, rng);
  nn::create_attention_params(store, "dual.cf.mca", d, rng);

  nn::init_normal(store, "dual.sem.pos", config.max_positions, dm, 0.02, rng);
  nn::create_attention_params(store, "dual.sem.enc.attn", dm, rng);
  nn::create_ffn_params(store, "dual.sem.enc.ffn", dm, config.ffn_mult * dm, rng);
  nn::create_attention_params(store, "dual.sem.mca", dm, rng);

  nn::init_normal(store, "dual.proj.w", d, dm, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  store.create("dual.proj.b", 1, dm).setZero();
}

Mat lookup_cf_history(const UserHistory& history, const CFEmbeddingTable& table) {
  const int64_t n = static_cast<int64_t>(history.interactions.size());
  Mat out(n, table.d);
  for (int64_t j = 0; j < n; ++j) {
    int64_t item = history.interactions[static_cast<size_t>(j)].item_id;
    if (item < 0 || item >= table.item_embeddings.rows()) {
      throw ConfigError("cf lookup: unknown item id " + std::to_string(item));
    }
    out.row(j) = table.item_embeddings.row(item);
  }
  return out;
}

Var embed_semantic_history(Tape& t, Var token_table,
                           const std::vector<std::vector<int>>& item_token_ids) {
  std::vector<Var> rows;
  rows.reserve(item_token_ids.size());
  for (const auto& ids : item_token_ids) {
    if (ids.empty()) throw ConfigError("semantic history: empty token list");
    rows.push_back(t.mean_rows(t.gather_rows(token_table, ids)));
  }
  return t.concat_rows(rows);
}

namespace {

Var encode_view(Tape& t, ParamStore& s, const std::string& view_prefix, int heads,
                int max_positions, Var e, bool use_positions) {
  int n = static_cast<int>(t.val(e).rows());
  if (n < 1) throw ConfigError("encoder: empty history");
  Var x = e;
  if (use_positions) {
    if (n > max_positions) {
      throw ConfigError("history longer than max_positions: " + std::to_string(n));
    }
    std::vector<int> idx(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) idx[static_cast<size_t>(j)] = j;
    Var pos = t.gather_rows(t.param(s, view_prefix + ".pos"), idx);
    x = t.add(x, pos);
  }
  Var attended =
      nn::multi_head_attention(t, s, view_prefix + ".enc.attn", heads, x, x);
  return nn::ffn(t, s, view_prefix + ".enc.ffn", attended);
}

}  // namespace

Var encode_cf(Tape& t, ParamStore& s, const DualReprConfig& config, Var e_cf,
              bool use_positions) {
  return encode_view(t, s, "dual.cf", config.heads, config.max_positions, e_cf,
                     use_positions);
}

Var encode_semantic(Tape& t, ParamStore& s, const DualReprConfig& config,
                    Var e_sem, bool use_positions) {
  return encode_view(t, s, "dual.sem", config.heads, config.max_positions, e_sem,
                     use_positions);
}

Var importance_scores(Tape& t, ParamStore& s, const std::string& mca_prefix,
                      int heads, Var query_row, Var encoded) {
  Var scores = nn::mha_scalar_scores(t, s, mca_prefix, heads, query_row, encoded);
  return t.softmax_rows(scores);
}

Var soft_filter(Tape& t, ParamStore& s, const std::string& mca_prefix, Var alpha,
                Var encoded) {
  Var values = t.matmul(encoded, t.param(s, mca_prefix + ".wv"));  // N x d
  return t.matmul(alpha, values);                                  // 1 x d
}

Var project_to_model_width(Tape& t, ParamStore& s, Var v) {
  return t.add_row_broadcast(t.matmul(v, t.param(s, "dual.proj.w")),
                             t.param(s, "dual.proj.b"));
}

FilteredRepresentation dual_filtered(Tape& t, ParamStore& s,
                                     const DualReprConfig& config, Var e_cf,
                                     Var e_sem, Var e_ic, Var s_ic) {
  Var c_u = encode_cf(t, s, config, e_cf);
  Var s_u = encode_semantic(t, s, config, e_sem);
  Var alpha_c = importance_scores(t, s, "dual.cf.mca", config.heads, e_ic, c_u);
  Var alpha_s = importance_scores(t, s, "dual.sem.mca", config.heads, s_ic, s_u);
  FilteredRepresentation out;
  out.c_filter = soft_filter(t, s, "dual.cf.mca", alpha_c, c_u);
  out.s_filter = soft_filter(t, s, "dual.sem.mca", alpha_s, s_u);
  out.c_filter_proj = project_to_model_width(t, s, out.c_filter);
  return out;
}

}  // namespace gensr
