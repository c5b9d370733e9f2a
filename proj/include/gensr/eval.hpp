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

#include <functional>

#include "gensr/genmodel.hpp"

namespace gensr {

// Descending-score ranking; ids distinct.
struct RankedList {
  std::vector<int64_t> ids;
  std::vector<double> scores;
};

// Sort candidates by score descending, ties broken by ascending item id.
RankedList rank_candidates(const std::vector<int64_t>& candidates,
                           const std::function<double(int64_t)>& scorer);

// 1 iff the target's 1-based rank is <= K. Target must be in the list.
int recall_at_k(const RankedList& ranked, int64_t target, int k);

// 1/log2(rank+1) if rank <= K else 0; single relevant item, so ideal DCG = 1.
double ndcg_at_k(const RankedList& ranked, int64_t target, int k);

struct TaskMetrics {
  double recall5 = 0.0, recall10 = 0.0;
  double ndcg5 = 0.0, ndcg10 = 0.0;
  int count = 0;
};

struct MetricsReport {
  TaskMetrics search;
  TaskMetrics rec;
  std::string mode;      // "rerank" | "fullrank"
  std::string paradigm;  // "gensr" | "disc" | ...
};

using CandidateScorer =
    std::function<double(const EvalInstance&, int64_t candidate)>;

// Score all 100 candidates per instance and average metrics per task.
MetricsReport evaluate_reranking(const std::vector<EvalInstance>& instances,
                                 const CandidateScorer& scorer);

using FullRanker =
    std::function<std::vector<BeamHypothesis>(const EvalInstance&, int beam)>;

// Constrained decode over the whole corpus; targets outside the returned
// top-B list contribute zero.
MetricsReport evaluate_fullranking(const std::vector<EvalInstance>& instances,
                                   const FullRanker& ranker, int beam);

// Exact expectation under a uniform random permutation with one relevant item.
double random_baseline_expectation(int n_candidates, int k,
                                   const std::string& metric);

// Stable-key JSON, one file per (paradigm, mode).
void save_metrics_json(const std::string& path, const MetricsReport& report);

}  // namespace gensr
