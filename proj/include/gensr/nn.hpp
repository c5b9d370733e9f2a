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

#include "gensr/autodiff.hpp"

namespace gensr::nn {

using ad::Tape;
using ad::Var;

void init_normal(ParamStore& store, const std::string& name, int rows, int cols,
                 double stddev, Rng& rng);

// Multi-head attention parameters: prefix.{wq,wk,wv,wo}, each d x d.
void create_attention_params(ParamStore& store, const std::string& prefix, int d,
                             Rng& rng);
Var multi_head_attention(Tape& t, ParamStore& s, const std::string& prefix,
                         int heads, Var q_in, Var kv_in, bool causal = false);

// Scalar per-position compatibility scores for cross attention: mean over
// heads of scaled dot products; returns 1 x N (pre-softmax).
Var mha_scalar_scores(Tape& t, ParamStore& s, const std::string& prefix,
                      int heads, Var query_row, Var keys);

// Position-wise feed-forward: prefix.{w1,b1,w2,b2}, tanh nonlinearity.
void create_ffn_params(ParamStore& store, const std::string& prefix, int d,
                       int dff, Rng& rng);
Var ffn(Tape& t, ParamStore& s, const std::string& prefix, Var x);

void create_layernorm_params(ParamStore& store, const std::string& prefix, int d);
Var layernorm(Tape& t, ParamStore& s, const std::string& prefix, Var x);

// Pre-LN residual transformer layers.
void create_encoder_layer_params(ParamStore& store, const std::string& prefix,
                                 int d, int dff, Rng& rng);
Var encoder_layer(Tape& t, ParamStore& s, const std::string& prefix, int heads,
                  Var x);

void create_decoder_layer_params(ParamStore& store, const std::string& prefix,
                                 int d, int dff, Rng& rng);
Var decoder_layer(Tape& t, ParamStore& s, const std::string& prefix, int heads,
                  Var x, Var enc_out);

// Adam over every parameter of a store (used by analysis-side critics only;
// model training stays plain SGD).
class Adam {
 public:
  Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(ParamStore& store);

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::unordered_map<std::string, std::pair<Mat, Mat>> state_;
};

}  // namespace gensr::nn
