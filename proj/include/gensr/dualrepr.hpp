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

#pragma once

#include "gensr/cf.hpp"
#include "gensr/nn.hpp"

namespace gensr {

// Dual-view encoders: C_u = FFN(MSA(E, E, E)) per view, no residual path and
// no causal mask; learned positional embeddings added to the inputs.
struct DualReprConfig {
  int d_cf = 32;     // CF-view width (matches the pretrained table)
  int d_model = 64;  // semantic/model width d'
  int heads = 4;
  int ffn_mult = 2;       // encoder FFN inner width = ffn_mult * view width
  int max_positions = 64;
};

// Parameter blocks under the "dual." prefix:
//   dual.cf.pos, dual.cf.enc.{attn,ffn}, dual.cf.mca.{wq,wk,wv,wo}
//   dual.sem.pos, dual.sem.enc.{attn,ffn}, dual.sem.mca.{wq,wk,wv,wo}
//   dual.proj.{w,b}
void create_dualrepr_params(ParamStore& store, const DualReprConfig& config,
                            Rng& rng);

// Rows of the CF table for the history's items, chronological order.
Mat lookup_cf_history(const UserHistory& history, const CFEmbeddingTable& table);

// Per-item mean pooling of description-token embeddings; one row per item.
ad::Var embed_semantic_history(ad::Tape& t, ad::Var token_table,
                               const std::vector<std::vector<int>>& item_token_ids);

ad::Var encode_cf(ad::Tape& t, ParamStore& s, const DualReprConfig& config,
                  ad::Var e_cf, bool use_positions = true);
ad::Var encode_semantic(ad::Tape& t, ParamStore& s, const DualReprConfig& config,
                        ad::Var e_sem, bool use_positions = true);

// alpha_j = softmax_j MCA(e_ic, h_j); scalar per-head scaled dot compatibility
// averaged over heads. query_row is 1 x d, encoded is N x d. Returns 1 x N.
ad::Var importance_scores(ad::Tape& t, ParamStore& s, const std::string& mca_prefix,
                          int heads, ad::Var query_row, ad::Var encoded);

// C^filter = sum_j alpha_j W_V h_j; returns 1 x d.
ad::Var soft_filter(ad::Tape& t, ParamStore& s, const std::string& mca_prefix,
                    ad::Var alpha, ad::Var encoded);

ad::Var project_to_model_width(ad::Tape& t, ParamStore& s, ad::Var v);

struct FilteredRepresentation {
  ad::Var c_filter;       // 1 x d_cf
  ad::Var s_filter;       // 1 x d_model
  ad::Var c_filter_proj;  // 1 x d_model, via dual.proj
};

// Full soft-filtering pipeline for one (history, candidate) pair.
// e_cf: N x d_cf, e_sem: N x d_model, e_ic: 1 x d_cf, s_ic: 1 x d_model.
FilteredRepresentation dual_filtered(ad::Tape& t, ParamStore& s,
                                     const DualReprConfig& config, ad::Var e_cf,
                                     ad::Var e_sem, ad::Var e_ic, ad::Var s_ic);

}  // namespace gensr
