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

#include "gensr/genmodel.hpp"

namespace gensr {

struct TrainConfig {
  double tau = 0.05;    // contrastive temperature
  double beta = 0.1;    // loss balance factor
  double gamma = 1.0;   // discriminative task trade-off
  double lr = 0.05;
  int epochs = 12;
  int batch_size = 8;
  uint64_t seed = 0;
  bool track_gradients = false;  // per-step probe-layer task cosines
  int max_steps = 0;             // 0 = no cap
  DualReprConfig dual;
  GenModelConfig gen;
};

// Probe blocks for gradient-conflict measurement: the first self-attention
// block of each paradigm's shared encoder.
inline constexpr const char kGenSRProbePrefix[] = "gen.enc.0.attn.";
inline constexpr const char kDiscProbePrefix[] = "disc.enc.attn.";

// One example: a training instance plus one sampled negative candidate.
struct ExampleRef {
  size_t instance_index = 0;
  int64_t negative_item = 0;
};

// Deterministic per-epoch example order, search and rec interleaved 1:1 while
// both task pools last. Both trainers consume exactly this stream.
std::vector<ExampleRef> example_stream(const DatasetSplit& split, uint64_t seed,
                                       int epoch);

struct StepRecord {
  int step = 0;
  int n_search = 0;
  int n_rec = 0;
  double gen_loss = 0.0;
  double contrastive_loss = 0.0;
  double total_loss = 0.0;
  double grad_cosine = 0.0;  // NaN unless tracked and defined
};

struct TrainStats {
  std::vector<StepRecord> trace;
  size_t param_count = 0;
  bool aborted = false;
};

// CSV: comment header with paradigm + parameter count, then
// step,task_mix,gen_loss,contrastive_loss,total_loss rows.
void write_trace_csv(const std::string& path, const TrainStats& stats,
                     const std::string& paradigm);

// Eq. 10, literal: denominator sums both directions over all users in the
// batch including u' = u; sim is cosine; mean over the batch.
ad::Var contrastive_loss(ad::Tape& t, const std::vector<ad::Var>& c_vecs,
                         const std::vector<ad::Var>& s_vecs, double tau);

// Eq. 11: L = L_S&R + beta * L_c.
ad::Var total_loss(ad::Tape& t, ad::Var gen_loss, ad::Var contrastive,
                   double beta);

// -- GenSR ------------------------------------------------------------------

class GenSRModel {
 public:
  Vocabulary vocab;
  PromptLibrary prompts;
  DualReprConfig dual;
  GenModelConfig gen;
  CFEmbeddingTable cf;  // frozen
  ParamStore params;

  static GenSRModel init(const Corpus& corpus, const CFEmbeddingTable& cf,
                         const TrainConfig& config,
                         const PromptLibrary& prompts);

  struct Forward {
    AssembledInput input;
    FilteredRepresentation rep;
  };
  // Soft-filtered features + assembled re-ranking prompt for one candidate.
  Forward forward_features(ad::Tape& t, const Corpus& corpus,
                           const UserHistory& prefix, Task task,
                           const std::optional<QueryRecord>& query,
                           int64_t candidate);

  // Teacher-forced NLL of the yes/no answer for one (instance, candidate).
  ad::Var example_nll(ad::Tape& t, const Corpus& corpus,
                      const EvalInstance& instance, int64_t candidate,
                      bool positive, Forward* forward_out = nullptr);

  // Re-ranking preference in [0, 1]; fresh tape per call.
  double score(const Corpus& corpus, const EvalInstance& instance,
               int64_t candidate);

  // Full-ranking constrained decode over every corpus item.
  std::vector<BeamHypothesis> full_rank(const Corpus& corpus,
                                        const EvalInstance& instance, int beam);

  // Mean-pooled final encoder state + yes-probability, for MI estimation.
  std::pair<Eigen::RowVectorXd, double> analyze_forward(
      const Corpus& corpus, const EvalInstance& instance, int64_t candidate);

  ModelCheckpoint to_checkpoint(std::map<std::string, std::string> extra) const;
  static GenSRModel from_checkpoint(const ModelCheckpoint& ckpt,
                                    const CFEmbeddingTable& cf,
                                    const PromptLibrary& prompts);
};

struct GenSRTrainOutput {
  GenSRModel model;
  TrainStats stats;
};
GenSRTrainOutput train_gensr(const Corpus& corpus, const DatasetSplit& split,
                             const CFEmbeddingTable& cf,
                             const TrainConfig& config,
                             const PromptLibrary& prompts = PromptLibrary::builtin());

// -- discriminative shared-encoder baseline (Eq. 1) -------------------------

class DiscModel {
 public:
  Vocabulary vocab;
  DualReprConfig dual;  // widths/heads shared with GenSR
  CFEmbeddingTable cf;
  int head_hidden = 32;
  ParamStore params;

  // `match_param_count`: GenSR's scalar count; head widths are solved so the
  // totals agree within 10%.
  static DiscModel init(const Corpus& corpus, const CFEmbeddingTable& cf,
                        const TrainConfig& config, size_t match_param_count);

  struct Forward {
    ad::Var pooled{-1};  // 1 x d_model shared-encoder summary
    ad::Var logit{-1};   // 1 x 1 task-head click logit
  };
  Forward forward(ad::Tape& t, const Corpus& corpus, const EvalInstance& instance,
                  int64_t candidate);

  double score(const Corpus& corpus, const EvalInstance& instance,
               int64_t candidate);  // sigmoid(logit)

  std::pair<Eigen::RowVectorXd, double> analyze_forward(
      const Corpus& corpus, const EvalInstance& instance, int64_t candidate);

  ModelCheckpoint to_checkpoint(std::map<std::string, std::string> extra) const;
  static DiscModel from_checkpoint(const ModelCheckpoint& ckpt,
                                   const CFEmbeddingTable& cf);
};

struct DiscTrainOutput {
  DiscModel model;
  TrainStats stats;
};
DiscTrainOutput train_discriminative(const Corpus& corpus,
                                     const DatasetSplit& split,
                                     const CFEmbeddingTable& cf,
                                     const TrainConfig& config);

}  // namespace gensr
