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

#include "gensr/genmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gensr {

using ad::Tape;
using ad::Var;

// -- vocabulary -------------------------------------------------------------

namespace {

const char* kSpecialTexts[Vocabulary::kReserved] = {
    "⟨unk⟩", "⟨bos⟩", "⟨eos⟩",
    "⟨yes⟩", "⟨no⟩",  "⟨PH1⟩",
    "⟨PH2⟩", "⟨PH3⟩", "⟨PH4⟩"};

}  // namespace

const char kPhMarkers[4][12] = {"⟨PH1⟩", "⟨PH2⟩",
                                "⟨PH3⟩", "⟨PH4⟩"};
const char kQueryMarker[] = "⟨QRY⟩";

int Vocabulary::add_word(const std::string& word) {
  auto it = word_ids_.find(word);
  if (it != word_ids_.end()) return it->second;
  int id = static_cast<int>(texts_.size());
  word_ids_.emplace(word, id);
  texts_.push_back(word);
  return id;
}

int Vocabulary::item_token(int64_t item_id) const {
  if (item_id < 0 || item_id >= num_items_) {
    throw ConfigError("vocabulary: unknown item id " + std::to_string(item_id));
  }
  return kReserved + static_cast<int>(item_id);
}

int64_t Vocabulary::token_item(int token) const {
  if (token < kReserved || token >= kReserved + num_items_) return -1;
  return token - kReserved;
}

int Vocabulary::word_token(const std::string& word) const {
  auto it = word_ids_.find(word);
  return it == word_ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& words) const {
  std::vector<int> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(word_token(w));
  return out;
}

const std::string& Vocabulary::text(int token) const {
  if (token < 0 || token >= size()) {
    throw ConfigError("vocabulary: token id out of range " + std::to_string(token));
  }
  return texts_[static_cast<size_t>(token)];
}

void Vocabulary::save(std::ostream& out) const {
  out.write(reinterpret_cast<const char*>(&num_items_), 8);
  uint64_t n = texts_.size();
  out.write(reinterpret_cast<const char*>(&n), 8);
  for (const auto& t : texts_) {
    uint64_t len = t.size();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(t.data(), static_cast<std::streamsize>(len));
  }
}

void Vocabulary::load(std::istream& in) {
  texts_.clear();
  word_ids_.clear();
  in.read(reinterpret_cast<char*>(&num_items_), 8);
  uint64_t n;
  in.read(reinterpret_cast<char*>(&n), 8);
  for (uint64_t i = 0; i < n; ++i) {
    uint64_t len;
    in.read(reinterpret_cast<char*>(&len), 8);
    std::string t(len, '\0');
    in.read(t.data(), static_cast<std::streamsize>(len));
    texts_.push_back(t);
    if (i >= static_cast<uint64_t>(kReserved + num_items_)) {
      word_ids_.emplace(t, static_cast<int>(i));
    }
  }
  if (!in) throw ConfigError("truncated vocabulary block");
}

Vocabulary build_vocabulary(const Corpus& corpus,
                            const std::vector<std::string>& extra_texts) {
  Vocabulary v;
  for (const char* t : kSpecialTexts) v.texts_.emplace_back(t);
  v.num_items_ = corpus.num_items();
  for (int64_t i = 0; i < v.num_items_; ++i) {
    v.texts_.push_back("⟨item_" + std::to_string(i) + "⟩");
  }
  // words by first occurrence: item descriptions, then query tokens, then
  // any extra text (prompt templates)
  for (const auto& it : corpus.items) {
    for (const auto& w : it.description_tokens) v.add_word(w);
  }
  for (const auto& q : corpus.queries) {
    for (const auto& w : q.tokens) v.add_word(w);
  }
  for (const auto& text : extra_texts) {
    for (const auto& w : tokenize_lower(text)) v.add_word(w);
  }
  return v;
}

// -- prompt templates -------------------------------------------------------

PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;
  lib.search_rerank =
      "a user searched for ⟨QRY⟩ with browsing history "
      "⟨PH1⟩ and interest profile ⟨PH2⟩ consider the "
      "candidate item ⟨PH3⟩ described as ⟨PH4⟩ would the "
      "user click yes or no";
  lib.rec_rerank =
      "recommend for a user with browsing history ⟨PH1⟩ and "
      "interest profile ⟨PH2⟩ consider the candidate item "
      "⟨PH3⟩ described as ⟨PH4⟩ would the user click yes "
      "or no";
  lib.search_fullrank =
      "a user searched for ⟨QRY⟩ with browsing history "
      "⟨PH1⟩ and interest profile ⟨PH2⟩ generate the next "
      "item id";
  lib.rec_fullrank =
      "recommend for a user with browsing history ⟨PH1⟩ and "
      "interest profile ⟨PH2⟩ generate the next item id";
  return lib;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PrerequisiteError("cannot read template file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  std::string s = os.str();
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

std::string strip_markers(std::string text) {
  for (const auto& marker : kPhMarkers) {
    for (size_t p; (p = text.find(marker)) != std::string::npos;) {
      text.erase(p, std::strlen(marker));
    }
  }
  for (size_t p; (p = text.find(kQueryMarker)) != std::string::npos;) {
    text.erase(p, std::strlen(kQueryMarker));
  }
  return text;
}

}  // namespace

PromptLibrary PromptLibrary::load(const std::string& dir) {
  PromptLibrary lib;
  lib.search_rerank = read_file(dir + "/search_rerank.txt");
  lib.rec_rerank = read_file(dir + "/rec_rerank.txt");
  lib.search_fullrank = read_file(dir + "/search_fullrank.txt");
  lib.rec_fullrank = read_file(dir + "/rec_fullrank.txt");
  return lib;
}

std::vector<std::string> PromptLibrary::all_texts() const {
  return {strip_markers(search_rerank), strip_markers(rec_rerank),
          strip_markers(search_fullrank), strip_markers(rec_fullrank)};
}

PromptTemplate build_prompt(const PromptLibrary& library, Task task,
                            bool fullranking,
                            const std::optional<QueryRecord>& query) {
  if ((task == Task::kSearch) != query.has_value()) {
    throw ConfigError(task == Task::kSearch
                          ? "search prompt requires a query"
                          : "recommendation prompt must not carry a query");
  }
  std::string text;
  if (task == Task::kSearch) {
    text = fullranking ? library.search_fullrank : library.search_rerank;
  } else {
    text = fullranking ? library.rec_fullrank : library.rec_rerank;
  }

  if (query) {
    size_t p = text.find(kQueryMarker);
    if (p == std::string::npos) {
      throw ConfigError("search template lacks the query marker");
    }
    std::string joined;
    for (const auto& tok : query->tokens) {
      if (!joined.empty()) joined += ' ';
      joined += tok;
    }
    text.replace(p, std::strlen(kQueryMarker), joined);
  }

  const int n_ph = fullranking ? 2 : 4;
  PromptTemplate tmpl;
  tmpl.task = task;
  tmpl.fullranking = fullranking;
  size_t cursor = 0;
  for (int k = 0; k < n_ph; ++k) {
    size_t p = text.find(kPhMarkers[k], cursor);
    if (p == std::string::npos) {
      throw ConfigError("template missing placeholder " + std::to_string(k + 1));
    }
    tmpl.segments.push_back(tokenize_lower(text.substr(cursor, p - cursor)));
    cursor = p + std::strlen(kPhMarkers[k]);
  }
  tmpl.segments.push_back(tokenize_lower(text.substr(cursor)));
  for (const auto& seg : tmpl.segments) {
    if (seg.empty()) throw ConfigError("template segment is empty");
  }
  return tmpl;
}

// -- assembly ---------------------------------------------------------------

namespace {

AssembledInput assemble(Tape& t, ParamStore& s, const Vocabulary& vocab,
                        const PromptTemplate& tmpl,
                        const std::vector<Var>& features) {
  Var table = t.param(s, "gen.tok");
  int d = static_cast<int>(t.val(table).cols());
  if (tmpl.segments.size() != features.size() + 1) {
    throw ConfigError("template/feature arity mismatch");
  }
  for (Var f : features) {
    if (t.val(f).rows() != 1 || t.val(f).cols() != d) {
      throw ConfigError("inserted feature vector width mismatch");
    }
  }
  AssembledInput out;
  std::vector<Var> parts;
  int pos = 0;
  for (size_t k = 0; k < tmpl.segments.size(); ++k) {
    std::vector<int> ids = vocab.encode(tmpl.segments[k]);
    parts.push_back(t.gather_rows(table, ids));
    for (int id : ids) out.text_tokens.push_back(id);
    pos += static_cast<int>(ids.size());
    if (k < features.size()) {
      parts.push_back(features[k]);
      out.inserted_positions.push_back(pos);
      ++pos;
    }
  }
  out.sequence = t.concat_rows(parts);
  return out;
}

}  // namespace

AssembledInput assemble_embeddings(Tape& t, ParamStore& s,
                                   const Vocabulary& vocab,
                                   const PromptTemplate& tmpl, Var c_f, Var s_f,
                                   Var e_ic_proj, Var s_ic) {
  if (tmpl.fullranking) throw ConfigError("re-ranking assembly needs a 5-segment template");
  return assemble(t, s, vocab, tmpl, {c_f, s_f, e_ic_proj, s_ic});
}

AssembledInput assemble_fullranking(Tape& t, ParamStore& s,
                                    const Vocabulary& vocab,
                                    const PromptTemplate& tmpl, Var c_pooled,
                                    Var s_pooled) {
  if (!tmpl.fullranking) throw ConfigError("full-ranking assembly needs a 3-segment template");
  return assemble(t, s, vocab, tmpl, {c_pooled, s_pooled});
}

// -- backbone ---------------------------------------------------------------

void create_genmodel_params(ParamStore& store, const GenModelConfig& config,
                            int vocab_size, Rng& rng) {
  const int d = config.d_model;
  nn::init_normal(store, "gen.tok", vocab_size, d, 0.05, rng);
  nn::init_normal(store, "gen.pos.enc", config.max_positions, d, 0.02, rng);
  nn::init_normal(store, "gen.pos.dec", config.max_positions, d, 0.02, rng);
  for (int l = 0; l < config.enc_layers; ++l) {
    nn::create_encoder_layer_params(store, "gen.enc." + std::to_string(l), d,
                                    config.ffn_inner, rng);
  }
  nn::create_layernorm_params(store, "gen.enc.ln", d);
  for (int l = 0; l < config.dec_layers; ++l) {
    nn::create_decoder_layer_params(store, "gen.dec." + std::to_string(l), d,
                                    config.ffn_inner, rng);
  }
  nn::create_layernorm_params(store, "gen.dec.ln", d);
}

namespace {

Var add_positions(Tape& t, ParamStore& s, const std::string& name, Var x,
                  int max_positions) {
  int n = static_cast<int>(t.val(x).rows());
  if (n > max_positions) {
    throw ConfigError("sequence exceeds max_positions: " + std::to_string(n));
  }
  std::vector<int> idx(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) idx[static_cast<size_t>(j)] = j;
  return t.add(x, t.gather_rows(t.param(s, name), idx));
}

}  // namespace

Var encode_sequence(Tape& t, ParamStore& s, const GenModelConfig& config,
                    Var seq) {
  Var x = add_positions(t, s, "gen.pos.enc", seq, config.max_positions);
  for (int l = 0; l < config.enc_layers; ++l) {
    x = nn::encoder_layer(t, s, "gen.enc." + std::to_string(l), config.heads, x);
  }
  return nn::layernorm(t, s, "gen.enc.ln", x);
}

Var decoder_logits(Tape& t, ParamStore& s, const GenModelConfig& config,
                   Var enc_out, const std::vector<int>& decoder_input) {
  if (decoder_input.empty()) throw ConfigError("empty decoder input");
  Var emb = t.gather_rows(t.param(s, "gen.tok"), decoder_input);
  Var x = add_positions(t, s, "gen.pos.dec", emb, config.max_positions);
  for (int l = 0; l < config.dec_layers; ++l) {
    x = nn::decoder_layer(t, s, "gen.dec." + std::to_string(l), config.heads, x,
                          enc_out);
  }
  x = nn::layernorm(t, s, "gen.dec.ln", x);
  return t.matmul_nt(x, t.param(s, "gen.tok"));  // tied output projection
}

NllResult forward_nll(Tape& t, ParamStore& s, const GenModelConfig& config,
                      const AssembledInput& input,
                      const std::vector<int>& targets) {
  if (targets.empty()) throw ConfigError("forward_nll: empty target");
  Var enc = encode_sequence(t, s, config, input.sequence);
  std::vector<int> dec_input;
  dec_input.push_back(Vocabulary::kBos);
  dec_input.insert(dec_input.end(), targets.begin(), targets.end() - 1);
  NllResult res;
  res.logits = decoder_logits(t, s, config, enc, dec_input);
  res.loss = t.nll_rows(res.logits, targets);
  return res;
}

double yes_no_from_logits(double logit_yes, double logit_no) {
  return 1.0 / (1.0 + std::exp(logit_no - logit_yes));
}

double score_yes_no(Tape& t, ParamStore& s, const GenModelConfig& config,
                    const AssembledInput& input) {
  Var enc = encode_sequence(t, s, config, input.sequence);
  Var logits = decoder_logits(t, s, config, enc, {Vocabulary::kBos});
  return yes_no_from_logits(t.val(logits)(0, Vocabulary::kYes),
                            t.val(logits)(0, Vocabulary::kNo));
}

std::vector<BeamHypothesis> constrained_beam_search(
    Tape& t, ParamStore& s, const GenModelConfig& config,
    const Vocabulary& vocab, const AssembledInput& input,
    const std::vector<int64_t>& allowed_items, int beam, int length) {
  if (allowed_items.empty()) throw ConfigError("beam search: empty allowed set");
  if (beam < 1) throw ConfigError("beam search: beam size must be positive");
  if (length != 1) {
    throw ConfigError("beam search: only single-ID generation (L = 1) is supported");
  }
  Var enc = encode_sequence(t, s, config, input.sequence);
  Var logits = decoder_logits(t, s, config, enc, {Vocabulary::kBos});
  const Mat& row = t.val(logits);

  std::vector<int64_t> allowed(allowed_items);
  std::sort(allowed.begin(), allowed.end());
  allowed.erase(std::unique(allowed.begin(), allowed.end()), allowed.end());

  double mx = -1e300;
  for (int64_t id : allowed) mx = std::max(mx, row(0, vocab.item_token(id)));
  double z = 0.0;
  for (int64_t id : allowed) z += std::exp(row(0, vocab.item_token(id)) - mx);
  double log_z = mx + std::log(z);

  std::vector<BeamHypothesis> hyps;
  hyps.reserve(allowed.size());
  for (int64_t id : allowed) {
    hyps.push_back({id, row(0, vocab.item_token(id)) - log_z});
  }
  std::stable_sort(hyps.begin(), hyps.end(), [](const auto& a, const auto& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.item_id < b.item_id;
  });
  if (static_cast<int>(hyps.size()) > beam) hyps.resize(static_cast<size_t>(beam));
  return hyps;
}

// -- checkpointing ----------------------------------------------------------

void save_model_checkpoint(const std::string& path, const ModelCheckpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  const char magic[8] = {'G', 'S', 'R', 'M', 'D', '1', 0, 0};
  out.write(magic, 8);
  ckpt.vocab.save(out);
  int32_t g[6] = {ckpt.gen_config.d_model,    ckpt.gen_config.heads,
                  ckpt.gen_config.enc_layers, ckpt.gen_config.dec_layers,
                  ckpt.gen_config.ffn_inner,  ckpt.gen_config.max_positions};
  out.write(reinterpret_cast<const char*>(g), sizeof(g));
  int32_t d[5] = {ckpt.dual_config.d_cf, ckpt.dual_config.d_model,
                  ckpt.dual_config.heads, ckpt.dual_config.ffn_mult,
                  ckpt.dual_config.max_positions};
  out.write(reinterpret_cast<const char*>(d), sizeof(d));
  uint64_t n_extra = ckpt.extra.size();
  out.write(reinterpret_cast<const char*>(&n_extra), 8);
  auto write_str = [&](const std::string& s) {
    uint64_t len = s.size();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(s.data(), static_cast<std::streamsize>(len));
  };
  for (const auto& [k, v] : ckpt.extra) {
    write_str(k);
    write_str(v);
  }
  ckpt.params.save(out);
}

ModelCheckpoint load_model_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PrerequisiteError("missing model checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "GSRMD1\0\0", 8) != 0) {
    throw ConfigError("bad model checkpoint magic in " + path);
  }
  ModelCheckpoint ckpt;
  ckpt.vocab.load(in);
  int32_t g[6];
  in.read(reinterpret_cast<char*>(g), sizeof(g));
  ckpt.gen_config = {g[0], g[1], g[2], g[3], g[4], g[5]};
  int32_t d[5];
  in.read(reinterpret_cast<char*>(d), sizeof(d));
  ckpt.dual_config = {d[0], d[1], d[2], d[3], d[4]};
  uint64_t n_extra;
  in.read(reinterpret_cast<char*>(&n_extra), 8);
  auto read_str = [&]() {
    uint64_t len;
    in.read(reinterpret_cast<char*>(&len), 8);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    return s;
  };
  for (uint64_t i = 0; i < n_extra; ++i) {
    std::string k = read_str();
    ckpt.extra[k] = read_str();
  }
  ckpt.params.load(in);
  if (!in) throw ConfigError("truncated model checkpoint: " + path);
  return ckpt;
}

}  // namespace gensr
