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

#include "gensr/training.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace gensr {

using ad::Tape;
using ad::Var;

// -- example stream ---------------------------------------------------------

namespace {

void shuffle_indices(std::vector<size_t>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = rng.next_below(i);
    std::swap(v[i - 1], v[j]);
  }
}

int64_t sample_negative(const EvalInstance& inst, Rng& rng) {
  int64_t neg;
  do {
    neg = inst.candidates[rng.next_below(inst.candidates.size())];
  } while (neg == inst.target_item);
  return neg;
}

}  // namespace

std::vector<ExampleRef> example_stream(const DatasetSplit& split, uint64_t seed,
                                       int epoch) {
  std::vector<size_t> s_idx, r_idx;
  for (size_t i = 0; i < split.train.size(); ++i) {
    (split.train[i].task == Task::kSearch ? s_idx : r_idx).push_back(i);
  }
  Rng rng(derive_seed(seed, "stream", static_cast<uint64_t>(epoch)));
  shuffle_indices(s_idx, rng);
  shuffle_indices(r_idx, rng);

  std::vector<size_t> order;
  order.reserve(split.train.size());
  size_t si = 0, ri = 0;
  while (si < s_idx.size() && ri < r_idx.size()) {
    order.push_back(s_idx[si++]);
    order.push_back(r_idx[ri++]);
  }
  while (si < s_idx.size()) order.push_back(s_idx[si++]);
  while (ri < r_idx.size()) order.push_back(r_idx[ri++]);

  std::vector<ExampleRef> stream;
  stream.reserve(order.size());
  for (size_t idx : order) {
    stream.push_back({idx, sample_negative(split.train[idx], rng)});
  }
  return stream;
}

// -- losses -----------------------------------------------------------------

Var contrastive_loss(Tape& t, const std::vector<Var>& c_vecs,
                     const std::vector<Var>& s_vecs, double tau) {
  if (c_vecs.empty() || c_vecs.size() != s_vecs.size()) {
    throw ConfigError("contrastive loss: need matched non-empty vector batches");
  }
  if (tau <= 0.0) throw ConfigError("contrastive loss: tau must be positive");
  const double inv_b = 1.0 / static_cast<double>(c_vecs.size());
  Var C = c_vecs.size() == 1 ? c_vecs[0] : t.concat_rows(c_vecs);
  Var S = s_vecs.size() == 1 ? s_vecs[0] : t.concat_rows(s_vecs);
  Var sim = t.cosine_matrix(C, S);  // sim(i, j) = cos(C_i, S_j)
  Var e = t.exp_(t.scale(sim, 1.0 / tau));
  Var denom = t.add(t.sum_rows(e), t.sum_rows(t.transpose(e)));  // both directions
  Var per_user = t.sub(t.log_(denom), t.log_(t.take_diag(e)));
  return t.scale(t.sum_all(per_user), inv_b);
}

Var total_loss(Tape& t, Var gen_loss, Var contrastive, double beta) {
  return t.add(gen_loss, t.scale(contrastive, beta));
}

// -- GenSR model ------------------------------------------------------------

GenSRModel GenSRModel::init(const Corpus& corpus, const CFEmbeddingTable& cf,
                            const TrainConfig& config,
                            const PromptLibrary& prompts) {
  if (cf.d != config.dual.d_cf) {
    throw ConfigError("cf table width does not match dual-repr d_cf");
  }
  if (config.dual.d_model != config.gen.d_model) {
    throw ConfigError("dual-repr and backbone model widths must agree");
  }
  GenSRModel m;
  m.prompts = prompts;
  m.dual = config.dual;
  m.gen = config.gen;
  m.cf = cf;
  m.vocab = build_vocabulary(corpus, prompts.all_texts());
  Rng rng(derive_seed(config.seed, "gensr_init", 0));
  create_dualrepr_params(m.params, m.dual, rng);
  create_genmodel_params(m.params, m.gen, m.vocab.size(), rng);
  return m;
}

GenSRModel::Forward GenSRModel::forward_features(
    Tape& t, const Corpus& corpus, const UserHistory& prefix, Task task,
    const std::optional<QueryRecord>& query, int64_t candidate) {
  if (prefix.interactions.empty()) {
    throw ConfigError("forward: empty history prefix");
  }
  Var ecf = t.constant(lookup_cf_history(prefix, cf));
  Var tok = t.param(params, "gen.tok");
  std::vector<std::vector<int>> hist_tokens;
  hist_tokens.reserve(prefix.interactions.size());
  for (const auto& r : prefix.interactions) {
    hist_tokens.push_back(vocab.encode(corpus.item(r.item_id).description_tokens));
  }
  Var esem = embed_semantic_history(t, tok, hist_tokens);
  Var eic = t.constant(Mat(cf.item_embeddings.row(candidate)));
  Var sic = t.mean_rows(
      t.gather_rows(tok, vocab.encode(corpus.item(candidate).description_tokens)));

  Forward f;
  f.rep = dual_filtered(t, params, dual, ecf, esem, eic, sic);
  Var eic_proj = project_to_model_width(t, params, eic);
  PromptTemplate tmpl = build_prompt(prompts, task, /*fullranking=*/false, query);
  f.input = assemble_embeddings(t, params, vocab, tmpl, f.rep.c_filter_proj,
                                f.rep.s_filter, eic_proj, sic);
  return f;
}

Var GenSRModel::example_nll(Tape& t, const Corpus& corpus,
                            const EvalInstance& instance, int64_t candidate,
                            bool positive, Forward* forward_out) {
  Forward f = forward_features(t, corpus, instance.history_prefix, instance.task,
                               instance.query, candidate);
  std::vector<int> target = {positive ? Vocabulary::kYes : Vocabulary::kNo,
                             Vocabulary::kEos};
  auto res = forward_nll(t, params, gen, f.input, target);
  if (forward_out) *forward_out = f;
  return res.loss;
}

double GenSRModel::score(const Corpus& corpus, const EvalInstance& instance,
                         int64_t candidate) {
  Tape t;
  Forward f = forward_features(t, corpus, instance.history_prefix, instance.task,
                               instance.query, candidate);
  return score_yes_no(t, params, gen, f.input);
}

std::vector<BeamHypothesis> GenSRModel::full_rank(const Corpus& corpus,
                                                  const EvalInstance& instance,
                                                  int beam) {
  Tape t;
  const UserHistory& prefix = instance.history_prefix;
  if (prefix.interactions.empty()) throw ConfigError("forward: empty history prefix");
  Var ecf = t.constant(lookup_cf_history(prefix, cf));
  Var tok = t.param(params, "gen.tok");
  std::vector<std::vector<int>> hist_tokens;
  for (const auto& r : prefix.interactions) {
    hist_tokens.push_back(vocab.encode(corpus.item(r.item_id).description_tokens));
  }
  Var esem = embed_semantic_history(t, tok, hist_tokens);
  Var cu = encode_cf(t, params, dual, ecf);
  Var su = encode_semantic(t, params, dual, esem);
  Var c_pooled = project_to_model_width(t, params, t.mean_rows(cu));
  Var s_pooled = t.mean_rows(su);
  PromptTemplate tmpl = build_prompt(prompts, instance.task, /*fullranking=*/true,
                                     instance.query);
  AssembledInput input =
      assemble_fullranking(t, params, vocab, tmpl, c_pooled, s_pooled);
  std::vector<int64_t> allowed(static_cast<size_t>(corpus.num_items()));
  for (int64_t i = 0; i < corpus.num_items(); ++i) allowed[static_cast<size_t>(i)] = i;
  return constrained_beam_search(t, params, gen, vocab, input, allowed, beam);
}

std::pair<Eigen::RowVectorXd, double> GenSRModel::analyze_forward(
    const Corpus& corpus, const EvalInstance& instance, int64_t candidate) {
  Tape t;
  Forward f = forward_features(t, corpus, instance.history_prefix, instance.task,
                               instance.query, candidate);
  Var enc = encode_sequence(t, params, gen, f.input.sequence);
  Var pooled = t.mean_rows(enc);
  Var logits = decoder_logits(t, params, gen, enc, {Vocabulary::kBos});
  double p = yes_no_from_logits(t.val(logits)(0, Vocabulary::kYes),
                                t.val(logits)(0, Vocabulary::kNo));
  return {Eigen::RowVectorXd(t.val(pooled).row(0)), p};
}

ModelCheckpoint GenSRModel::to_checkpoint(
    std::map<std::string, std::string> extra) const {
  ModelCheckpoint ckpt;
  ckpt.vocab = vocab;
  ckpt.gen_config = gen;
  ckpt.dual_config = dual;
  ckpt.params = params;
  ckpt.extra = std::move(extra);
  ckpt.extra["paradigm"] = "gensr";
  return ckpt;
}

GenSRModel GenSRModel::from_checkpoint(const ModelCheckpoint& ckpt,
                                       const CFEmbeddingTable& cf,
                                       const PromptLibrary& prompts) {
  GenSRModel m;
  m.vocab = ckpt.vocab;
  m.gen = ckpt.gen_config;
  m.dual = ckpt.dual_config;
  m.params = ckpt.params;
  m.cf = cf;
  m.prompts = prompts;
  return m;
}

// -- trace file -------------------------------------------------------------

void write_trace_csv(const std::string& path, const TrainStats& stats,
                     const std::string& paradigm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << "# paradigm=" << paradigm << " param_count=" << stats.param_count
      << " aborted=" << (stats.aborted ? 1 : 0) << "\n";
  out << "step,task_mix,gen_loss,contrastive_loss,total_loss\n";
  out << std::setprecision(17);
  for (const auto& r : stats.trace) {
    out << r.step << "," << r.n_search << ":" << r.n_rec << "," << r.gen_loss
        << "," << r.contrastive_loss << "," << r.total_loss << "\n";
  }
}

// -- shared trainer scaffolding ---------------------------------------------

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string snapshot_params(const ParamStore& store) {
  std::ostringstream buf;
  store.save(buf);
  return buf.str();
}

void restore_params(ParamStore& store, const std::string& snapshot) {
  std::istringstream buf(snapshot);
  store.load(buf);
}

Var mean_of(Tape& t, const std::vector<Var>& terms, double denom) {
  Var acc = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) acc = t.add(acc, terms[i]);
  return t.scale(acc, 1.0 / denom);
}

double probe_cosine(Tape& t, ParamStore& params, const char* prefix, Var l_search,
                    Var l_rec) {
  params.zero_grads();
  t.backward(l_search);
  Eigen::VectorXd gs = params.flat_grad_prefix(prefix);
  params.zero_grads();
  t.backward(l_rec);
  Eigen::VectorXd gr = params.flat_grad_prefix(prefix);
  double nn = gs.norm() * gr.norm();
  return nn > 0.0 ? gs.dot(gr) / nn : kNan;
}

}  // namespace

// -- GenSR trainer ----------------------------------------------------------

GenSRTrainOutput train_gensr(const Corpus& corpus, const DatasetSplit& split,
                             const CFEmbeddingTable& cf,
                             const TrainConfig& config,
                             const PromptLibrary& prompts) {
  if (split.train.empty()) throw ConfigError("train: empty training split");
  GenSRTrainOutput out{GenSRModel::init(corpus, cf, config, prompts), {}};
  GenSRModel& m = out.model;
  out.stats.param_count = m.params.scalar_count();

  std::string last_good = snapshot_params(m.params);
  int step = 0;
  bool done = false;
  for (int epoch = 0; epoch < config.epochs && !done; ++epoch) {
    auto stream = example_stream(split, config.seed, epoch);
    for (size_t b = 0; b < stream.size() && !done; b += static_cast<size_t>(config.batch_size)) {
      size_t e = std::min(stream.size(), b + static_cast<size_t>(config.batch_size));
      Tape t;
      std::vector<Var> s_terms, r_terms, c_vecs, s_vecs;
      for (size_t i = b; i < e; ++i) {
        const EvalInstance& inst = split.train[stream[i].instance_index];
        GenSRModel::Forward fwd;
        Var lp = m.example_nll(t, corpus, inst, inst.target_item, true, &fwd);
        Var ln_ = m.example_nll(t, corpus, inst, stream[i].negative_item, false);
        Var pair = t.add(lp, ln_);
        (inst.task == Task::kSearch ? s_terms : r_terms).push_back(pair);
        c_vecs.push_back(fwd.rep.c_filter_proj);
        s_vecs.push_back(fwd.rep.s_filter);
      }
      int ns = static_cast<int>(s_terms.size());
      int nr = static_cast<int>(r_terms.size());

      std::vector<Var> all_terms = s_terms;
      all_terms.insert(all_terms.end(), r_terms.begin(), r_terms.end());
      Var gen_l = mean_of(t, all_terms, 2.0 * (ns + nr));
      Var lc = contrastive_loss(t, c_vecs, s_vecs, config.tau);
      Var tot = total_loss(t, gen_l, lc, config.beta);

      double cosine = kNan;
      if (config.track_gradients && ns > 0 && nr > 0) {
        Var ls = mean_of(t, s_terms, 2.0 * ns);
        Var lr_ = mean_of(t, r_terms, 2.0 * nr);
        cosine = probe_cosine(t, m.params, kGenSRProbePrefix, ls, lr_);
      }

      double tot_v = t.val(tot)(0, 0);
      if (!std::isfinite(tot_v)) {
        restore_params(m.params, last_good);
        out.stats.aborted = true;
        return out;
      }
      m.params.zero_grads();
      t.backward(tot);
      m.params.sgd_step(config.lr);

      out.stats.trace.push_back({step, ns, nr, t.val(gen_l)(0, 0),
                                 t.val(lc)(0, 0), tot_v, cosine});
      ++step;
      if (config.max_steps > 0 && step >= config.max_steps) done = true;
    }
    last_good = snapshot_params(m.params);
  }
  return out;
}

// -- discriminative baseline ------------------------------------------------

DiscModel DiscModel::init(const Corpus& corpus, const CFEmbeddingTable& cf,
                          const TrainConfig& config, size_t match_param_count) {
  if (cf.d != config.dual.d_cf) {
    throw ConfigError("cf table width does not match dual-repr d_cf");
  }
  DiscModel m;
  m.dual = config.dual;
  m.cf = cf;
  m.vocab = build_vocabulary(corpus);
  Rng rng(derive_seed(config.seed, "disc_init", 0));
  const int d = m.dual.d_model, dcf = m.dual.d_cf;

  nn::init_normal(m.params, "disc.tok", m.vocab.size(), d, 0.05, rng);
  nn::init_normal(m.params, "disc.in.w", dcf + d, d,
                  1.0 / std::sqrt(static_cast<double>(dcf + d)), rng);
  m.params.create("disc.in.b", 1, d).setZero();
  nn::init_normal(m.params, "disc.pos", m.dual.max_positions, d, 0.02, rng);
  nn::create_attention_params(m.params, "disc.enc.attn", d, rng);
  nn::create_ffn_params(m.params, "disc.enc.ffn", d, m.dual.ffn_mult * d, rng);
  nn::init_normal(m.params, "disc.projcf.w", dcf, d,
                  1.0 / std::sqrt(static_cast<double>(dcf)), rng);
  m.params.create("disc.projcf.b", 1, d).setZero();

  // solve the head width so the paradigms' parameter counts match; each head
  // is a 2-layer perceptron over the 4d-wide feature concat
  size_t base = m.params.scalar_count();
  double remaining = static_cast<double>(match_param_count) - static_cast<double>(base);
  int h = std::max(8, static_cast<int>(std::llround(remaining / (2.0 * (4 * d + 2)))));
  m.head_hidden = h;
  for (const std::string head : {"disc.head.s", "disc.head.r"}) {
    nn::init_normal(m.params, head + ".w1", 4 * d, h,
                    1.0 / std::sqrt(static_cast<double>(4 * d)), rng);
    m.params.create(head + ".b1", 1, h).setZero();
    nn::init_normal(m.params, head + ".w2", h, 1,
                    1.0 / std::sqrt(static_cast<double>(h)), rng);
    m.params.create(head + ".b2", 1, 1).setZero();
  }
  return m;
}

DiscModel::Forward DiscModel::forward(Tape& t, const Corpus& corpus,
                                      const EvalInstance& instance,
                                      int64_t candidate) {
  const UserHistory& prefix = instance.history_prefix;
  if (prefix.interactions.empty()) throw ConfigError("forward: empty history prefix");
  const int d = dual.d_model;
  int n = static_cast<int>(prefix.interactions.size());
  if (n > dual.max_positions) {
    throw ConfigError("history longer than max_positions: " + std::to_string(n));
  }

  Var tok = t.param(params, "disc.tok");
  Var ecf = t.constant(lookup_cf_history(prefix, cf));
  std::vector<std::vector<int>> hist_tokens;
  for (const auto& r : prefix.interactions) {
    hist_tokens.push_back(vocab.encode(corpus.item(r.item_id).description_tokens));
  }
  Var esem = embed_semantic_history(t, tok, hist_tokens);

  Var cat = t.concat_cols({ecf, esem});
  Var x = t.add_row_broadcast(t.matmul(cat, t.param(params, "disc.in.w")),
                              t.param(params, "disc.in.b"));
  std::vector<int> idx(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) idx[static_cast<size_t>(j)] = j;
  x = t.add(x, t.gather_rows(t.param(params, "disc.pos"), idx));
  Var att = nn::multi_head_attention(t, params, "disc.enc.attn", dual.heads, x, x);
  Var enc = nn::ffn(t, params, "disc.enc.ffn", att);
  Var pooled = t.mean_rows(enc);

  Var eic = t.constant(Mat(cf.item_embeddings.row(candidate)));
  Var eic_proj = t.add_row_broadcast(t.matmul(eic, t.param(params, "disc.projcf.w")),
                                     t.param(params, "disc.projcf.b"));
  Var sic = t.mean_rows(
      t.gather_rows(tok, vocab.encode(corpus.item(candidate).description_tokens)));
  Var qmean = instance.query
                  ? t.mean_rows(t.gather_rows(tok, vocab.encode(instance.query->tokens)))
                  : t.constant(Mat::Zero(1, d));

  Var features = t.concat_cols({pooled, eic_proj, sic, qmean});
  const std::string head =
      instance.task == Task::kSearch ? "disc.head.s" : "disc.head.r";
  Var h1 = t.tanh_(t.add_row_broadcast(t.matmul(features, t.param(params, head + ".w1")),
                                       t.param(params, head + ".b1")));
  Forward f;
  f.pooled = pooled;
  f.logit = t.add_row_broadcast(t.matmul(h1, t.param(params, head + ".w2")),
                                t.param(params, head + ".b2"));
  return f;
}

double DiscModel::score(const Corpus& corpus, const EvalInstance& instance,
                        int64_t candidate) {
  Tape t;
  Forward f = forward(t, corpus, instance, candidate);
  return 1.0 / (1.0 + std::exp(-t.val(f.logit)(0, 0)));
}

std::pair<Eigen::RowVectorXd, double> DiscModel::analyze_forward(
    const Corpus& corpus, const EvalInstance& instance, int64_t candidate) {
  Tape t;
  Forward f = forward(t, corpus, instance, candidate);
  double p = 1.0 / (1.0 + std::exp(-t.val(f.logit)(0, 0)));
  return {Eigen::RowVectorXd(t.val(f.pooled).row(0)), p};
}

ModelCheckpoint DiscModel::to_checkpoint(
    std::map<std::string, std::string> extra) const {
  ModelCheckpoint ckpt;
  ckpt.vocab = vocab;
  ckpt.dual_config = dual;
  ckpt.params = params;
  ckpt.extra = std::move(extra);
  ckpt.extra["paradigm"] = "disc";
  ckpt.extra["head_hidden"] = std::to_string(head_hidden);
  return ckpt;
}

DiscModel DiscModel::from_checkpoint(const ModelCheckpoint& ckpt,
                                     const CFEmbeddingTable& cf) {
  DiscModel m;
  m.vocab = ckpt.vocab;
  m.dual = ckpt.dual_config;
  m.params = ckpt.params;
  m.cf = cf;
  auto it = ckpt.extra.find("head_hidden");
  if (it != ckpt.extra.end()) m.head_hidden = std::stoi(it->second);
  return m;
}

DiscTrainOutput train_discriminative(const Corpus& corpus,
                                     const DatasetSplit& split,
                                     const CFEmbeddingTable& cf,
                                     const TrainConfig& config) {
  if (split.train.empty()) throw ConfigError("train: empty training split");
  // match capacity to the generative model within 10%
  size_t gensr_count;
  {
    ParamStore probe;
    Rng rng(derive_seed(config.seed, "gensr_init", 0));
    create_dualrepr_params(probe, config.dual, rng);
    Vocabulary v = build_vocabulary(corpus, PromptLibrary::builtin().all_texts());
    create_genmodel_params(probe, config.gen, v.size(), rng);
    gensr_count = probe.scalar_count();
  }
  DiscTrainOutput out{DiscModel::init(corpus, cf, config, gensr_count), {}};
  DiscModel& m = out.model;
  out.stats.param_count = m.params.scalar_count();

  std::string last_good = snapshot_params(m.params);
  int step = 0;
  bool done = false;
  for (int epoch = 0; epoch < config.epochs && !done; ++epoch) {
    auto stream = example_stream(split, config.seed, epoch);
    for (size_t b = 0; b < stream.size() && !done; b += static_cast<size_t>(config.batch_size)) {
      size_t e = std::min(stream.size(), b + static_cast<size_t>(config.batch_size));
      Tape t;
      std::vector<Var> s_terms, r_terms;
      for (size_t i = b; i < e; ++i) {
        const EvalInstance& inst = split.train[stream[i].instance_index];
        Var lp = t.bce_logit(m.forward(t, corpus, inst, inst.target_item).logit, 1.0);
        Var ln_ = t.bce_logit(
            m.forward(t, corpus, inst, stream[i].negative_item).logit, 0.0);
        (inst.task == Task::kSearch ? s_terms : r_terms).push_back(t.add(lp, ln_));
      }
      int ns = static_cast<int>(s_terms.size());
      int nr = static_cast<int>(r_terms.size());

      // Eq. 1: L = L_s + gamma * L_r
      Var zero = t.constant(Mat::Zero(1, 1));
      Var ls = ns > 0 ? mean_of(t, s_terms, 2.0 * ns) : zero;
      Var lr_ = nr > 0 ? mean_of(t, r_terms, 2.0 * nr) : zero;
      Var tot = t.add(ls, t.scale(lr_, config.gamma));

      double cosine = kNan;
      if (config.track_gradients && ns > 0 && nr > 0) {
        cosine = probe_cosine(t, m.params, kDiscProbePrefix, ls, lr_);
      }

      double tot_v = t.val(tot)(0, 0);
      if (!std::isfinite(tot_v)) {
        restore_params(m.params, last_good);
        out.stats.aborted = true;
        return out;
      }
      m.params.zero_grads();
      t.backward(tot);
      m.params.sgd_step(config.lr);

      out.stats.trace.push_back({step, ns, nr, tot_v, 0.0, tot_v, cosine});
      ++step;
      if (config.max_steps > 0 && step >= config.max_steps) done = true;
    }
    last_good = snapshot_params(m.params);
  }
  return out;
}

}  // namespace gensr
