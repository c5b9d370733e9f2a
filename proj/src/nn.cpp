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

#include "gensr/nn.hpp"

#include <cmath>

namespace gensr::nn {

void init_normal(ParamStore& store, const std::string& name, int rows, int cols,
                 double stddev, Rng& rng) {
  Mat& m = store.create(name, rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = stddev * rng.next_normal();
}

void create_attention_params(ParamStore& store, const std::string& prefix, int d,
                             Rng& rng) {
  double s = 1.0 / std::sqrt(static_cast<double>(d));
  init_normal(store, prefix + ".wq", d, d, s, rng);
  init_normal(store, prefix + ".wk", d, d, s, rng);
  init_normal(store, prefix + ".wv", d, d, s, rng);
  init_normal(store, prefix + ".wo", d, d, s, rng);
}

Var multi_head_attention(Tape& t, ParamStore& s, const std::string& prefix,
                         int heads, Var q_in, Var kv_in, bool causal) {
  int d = static_cast<int>(t.val(q_in).cols());
  if (d % heads != 0) throw ConfigError("attention width not divisible by heads");
  int dk = d / heads;
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));

  Var q = t.matmul(q_in, t.param(s, prefix + ".wq"));
  Var k = t.matmul(kv_in, t.param(s, prefix + ".wk"));
  Var v = t.matmul(kv_in, t.param(s, prefix + ".wv"));

  int m = static_cast<int>(t.val(q_in).rows());
  int n = static_cast<int>(t.val(kv_in).rows());
  Mat mask;
  if (causal) {
    mask = Mat::Zero(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < n; ++j) mask(i, j) = -1e30;
  }

  std::vector<Var> head_outs;
  head_outs.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Var qh = t.slice_cols(q, h * dk, dk);
    Var kh = t.slice_cols(k, h * dk, dk);
    Var vh = t.slice_cols(v, h * dk, dk);
    Var scores = t.scale(t.matmul_nt(qh, kh), inv_sqrt);
    Var att = causal ? t.softmax_rows_masked(scores, mask) : t.softmax_rows(scores);
    head_outs.push_back(t.matmul(att, vh));
  }
  Var merged = t.concat_cols(head_outs);
  return t.matmul(merged, t.param(s, prefix + ".wo"));
}

Var mha_scalar_scores(Tape& t, ParamStore& s, const std::string& prefix,
                      int heads, Var query_row, Var keys) {
  int d = static_cast<int>(t.val(query_row).cols());
  if (d % heads != 0) throw ConfigError("attention width not divisible by heads");
  int dk = d / heads;
  double c = 1.0 / (std::sqrt(static_cast<double>(dk)) * heads);

  Var q = t.matmul(query_row, t.param(s, prefix + ".wq"));
  Var k = t.matmul(keys, t.param(s, prefix + ".wk"));
  Var acc{-1};
  for (int h = 0; h < heads; ++h) {
    Var qh = t.slice_cols(q, h * dk, dk);
    Var kh = t.slice_cols(k, h * dk, dk);
    Var dots = t.matmul_nt(qh, kh);  // 1 x N
    acc = (h == 0) ? dots : t.add(acc, dots);
  }
  return t.scale(acc, c);
}

void create_ffn_params(ParamStore& store, const std::string& prefix, int d,
                       int dff, Rng& rng) {
  init_normal(store, prefix + ".w1", d, dff, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  store.create(prefix + ".b1", 1, dff).setZero();
  init_normal(store, prefix + ".w2", dff, d, 1.0 / std::sqrt(static_cast<double>(dff)), rng);
  store.create(prefix + ".b2", 1, d).setZero();
}

Var ffn(Tape& t, ParamStore& s, const std::string& prefix, Var x) {
  Var h = t.add_row_broadcast(t.matmul(x, t.param(s, prefix + ".w1")),
                              t.param(s, prefix + ".b1"));
  h = t.tanh_(h);
  return t.add_row_broadcast(t.matmul(h, t.param(s, prefix + ".w2")),
                             t.param(s, prefix + ".b2"));
}

void create_layernorm_params(ParamStore& store, const std::string& prefix, int d) {
  store.create(prefix + ".g", 1, d).setOnes();
  store.create(prefix + ".b", 1, d).setZero();
}

Var layernorm(Tape& t, ParamStore& s, const std::string& prefix, Var x) {
  return t.layernorm_rows(x, t.param(s, prefix + ".g"), t.param(s, prefix + ".b"));
}

void create_encoder_layer_params(ParamStore& store, const std::string& prefix,
                                 int d, int dff, Rng& rng) {
  create_layernorm_params(store, prefix + ".ln1", d);
  create_attention_params(store, prefix + ".attn", d, rng);
  create_layernorm_params(store, prefix + ".ln2", d);
  create_ffn_params(store, prefix + ".ffn", d, dff, rng);
}

Var encoder_layer(Tape& t, ParamStore& s, const std::string& prefix, int heads,
                  Var x) {
  Var n1 = layernorm(t, s, prefix + ".ln1", x);
  Var a = multi_head_attention(t, s, prefix + ".attn", heads, n1, n1);
  Var x1 = t.add(x, a);
  Var n2 = layernorm(t, s, prefix + ".ln2", x1);
  return t.add(x1, ffn(t, s, prefix + ".ffn", n2));
}

void create_decoder_layer_params(ParamStore& store, const std::string& prefix,
                                 int d, int dff, Rng& rng) {
  create_layernorm_params(store, prefix + ".ln1", d);
  create_attention_params(store, prefix + ".self", d, rng);
  create_layernorm_params(store, prefix + ".ln2", d);
  create_attention_params(store, prefix + ".cross", d, rng);
  create_layernorm_params(store, prefix + ".ln3", d);
  create_ffn_params(store, prefix + ".ffn", d, dff, rng);
}

Var decoder_layer(Tape& t, ParamStore& s, const std::string& prefix, int heads,
                  Var x, Var enc_out) {
  Var n1 = layernorm(t, s, prefix + ".ln1", x);
  Var a = multi_head_attention(t, s, prefix + ".self", heads, n1, n1, /*causal=*/true);
  Var x1 = t.add(x, a);
  Var n2 = layernorm(t, s, prefix + ".ln2", x1);
  Var c = multi_head_attention(t, s, prefix + ".cross", heads, n2, enc_out);
  Var x2 = t.add(x1, c);
  Var n3 = layernorm(t, s, prefix + ".ln3", x2);
  return t.add(x2, ffn(t, s, prefix + ".ffn", n3));
}

void Adam::step(ParamStore& store) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  for (const std::string& name : store.names()) {
    Mat& w = store.val(name);
    const Mat& g = store.grad(name);
    auto it = state_.find(name);
    if (it == state_.end()) {
      it = state_.emplace(name, std::make_pair(Mat::Zero(w.rows(), w.cols()),
                                               Mat::Zero(w.rows(), w.cols())))
               .first;
    }
    Mat& m = it->second.first;
    Mat& v = it->second.second;
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    Mat mhat = m / bc1;
    Mat vhat = v / bc2;
    w -= lr_ * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
  }
}

}  // namespace gensr::nn
