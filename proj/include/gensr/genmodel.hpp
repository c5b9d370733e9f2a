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

#include <map>

#include "gensr/dualrepr.hpp"

namespace gensr {

// Word-level vocabulary with reserved special slots, then one token per
// corpus item, then words by first occurrence.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kYes = 3;
  static constexpr int kNo = 4;
  static constexpr int kPh1 = 5;  // kPh1..kPh4 are consecutive
  static constexpr int kReserved = 9;

  int size() const { return static_cast<int>(texts_.size()); }
  int64_t num_items() const { return num_items_; }

  int item_token(int64_t item_id) const;
  int64_t token_item(int token) const;  // -1 when not an item token
  int word_token(const std::string& word) const;  // kUnk when unknown
  std::vector<int> encode(const std::vector<std::string>& words) const;
  const std::string& text(int token) const;

  void save(std::ostream& out) const;
  void load(std::istream& in);

  friend Vocabulary build_vocabulary(const Corpus& corpus,
                                     const std::vector<std::string>& extra_texts);

 private:
  int add_word(const std::string& word);

  int64_t num_items_ = 0;
  std::vector<std::string> texts_;
  std::unordered_map<std::string, int> word_ids_;
};

Vocabulary build_vocabulary(const Corpus& corpus,
                            const std::vector<std::string>& extra_texts = {});

// -- prompt templates -------------------------------------------------------

// Raw template texts with literal placeholder markers. Re-ranking templates
// carry 4 placeholders; full-ranking templates carry 2 (no candidate item).
// Search templates additionally carry one query marker.
struct PromptLibrary {
  std::string search_rerank;
  std::string rec_rerank;
  std::string search_fullrank;
  std::string rec_fullrank;

  static PromptLibrary builtin();
  // Reads {search,rec}_{rerank,fullrank}.txt from a directory.
  static PromptLibrary load(const std::string& dir);
  // Marker-free texts, for vocabulary construction.
  std::vector<std::string> all_texts() const;
};

extern const char kPhMarkers[4][12];  // UTF-8 placeholder markers
extern const char kQueryMarker[];

struct PromptTemplate {
  Task task = Task::kRec;
  bool fullranking = false;
  std::vector<std::vector<std::string>> segments;  // 5 (rerank) or 3 (fullrank)
};

// Selects the task's template and substitutes query tokens; throws when the
// query presence does not match the task.
PromptTemplate build_prompt(const PromptLibrary& library, Task task,
                            bool fullranking,
                            const std::optional<QueryRecord>& query);

// -- embedding assembly (Eq. 9) ---------------------------------------------

struct AssembledInput {
  ad::Var sequence{-1};                 // M x d'
  std::vector<int> inserted_positions;  // 0-based feature-vector positions
  std::vector<int> text_tokens;         // token ids, text positions in order
};

// [emb(p1), C_f, emb(p2), S_f, emb(p3), e_ic_proj, emb(p4), s_ic, emb(p5)]
AssembledInput assemble_embeddings(ad::Tape& t, ParamStore& s,
                                   const Vocabulary& vocab,
                                   const PromptTemplate& tmpl, ad::Var c_f,
                                   ad::Var s_f, ad::Var e_ic_proj, ad::Var s_ic);

// Full-ranking variant: two insertions (mean-pooled views), no candidate.
AssembledInput assemble_fullranking(ad::Tape& t, ParamStore& s,
                                    const Vocabulary& vocab,
                                    const PromptTemplate& tmpl, ad::Var c_pooled,
                                    ad::Var s_pooled);

// -- tiny encoder-decoder backbone ------------------------------------------

struct GenModelConfig {
  int d_model = 64;
  int heads = 4;
  int enc_layers = 2;
  int dec_layers = 2;
  int ffn_inner = 128;
  int max_positions = 128;
};

// Parameter blocks under the "gen." prefix: gen.tok (V x d'), gen.pos.{enc,dec},
// gen.enc.<i>.*, gen.enc.ln, gen.dec.<i>.*, gen.dec.ln. Output projection is
// tied to gen.tok.
void create_genmodel_params(ParamStore& store, const GenModelConfig& config,
                            int vocab_size, Rng& rng);

ad::Var encode_sequence(ad::Tape& t, ParamStore& s, const GenModelConfig& config,
                        ad::Var seq);

// Teacher-forced decoder logits for input tokens [bos, y_1, ..., y_{T-1}].
ad::Var decoder_logits(ad::Tape& t, ParamStore& s, const GenModelConfig& config,
                       ad::Var enc_out, const std::vector<int>& decoder_input);

struct NllResult {
  ad::Var loss{-1};    // 1 x 1
  ad::Var logits{-1};  // T x V
};
NllResult forward_nll(ad::Tape& t, ParamStore& s, const GenModelConfig& config,
                      const AssembledInput& input,
                      const std::vector<int>& targets);

// Softmax restricted to the two verbalizer tokens: P(yes) + P(no) = 1.
double yes_no_from_logits(double logit_yes, double logit_no);

// Restricted first-step softmax over the yes/no verbalizer tokens.
double score_yes_no(ad::Tape& t, ParamStore& s, const GenModelConfig& config,
                    const AssembledInput& input);

struct BeamHypothesis {
  int64_t item_id = 0;
  double log_prob = 0.0;
};
// L = 1 single-ID generation; only allowed item tokens are scored. Returns up
// to `beam` hypotheses, descending log-probability, ties by ascending id.
std::vector<BeamHypothesis> constrained_beam_search(
    ad::Tape& t, ParamStore& s, const GenModelConfig& config,
    const Vocabulary& vocab, const AssembledInput& input,
    const std::vector<int64_t>& allowed_items, int beam, int length = 1);

// -- checkpointing ----------------------------------------------------------

struct ModelCheckpoint {
  Vocabulary vocab;
  GenModelConfig gen_config;
  DualReprConfig dual_config;
  ParamStore params;
  std::map<std::string, std::string> extra;  // training provenance
};

void save_model_checkpoint(const std::string& path, const ModelCheckpoint& ckpt);
ModelCheckpoint load_model_checkpoint(const std::string& path);

}  // namespace gensr
