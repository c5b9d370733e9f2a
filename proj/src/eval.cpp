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

#include "gensr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace gensr {

RankedList rank_candidates(const std::vector<int64_t>& candidates,
                           const std::function<double(int64_t)>& scorer) {
  RankedList out;
  out.ids = candidates;
  std::sort(out.ids.begin(), out.ids.end());
  if (std::adjacent_find(out.ids.begin(), out.ids.end()) != out.ids.end()) {
    throw ConfigError("rank_candidates: duplicate candidate id");
  }
  std::vector<double> score_by_pos(out.ids.size());
  for (size_t i = 0; i < out.ids.size(); ++i) score_by_pos[i] = scorer(out.ids[i]);
  std::vector<size_t> order(out.ids.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  // ids are pre-sorted ascending, so a stable sort on score alone breaks
  // ties by ascending id
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return score_by_pos[a] > score_by_pos[b];
  });
  RankedList ranked;
  ranked.ids.reserve(order.size());
  ranked.scores.reserve(order.size());
  for (size_t i : order) {
    ranked.ids.push_back(out.ids[i]);
    ranked.scores.push_back(score_by_pos[i]);
  }
  return ranked;
}

namespace {

// 1-based rank of target; 0 when absent.
size_t rank_of(const RankedList& ranked, int64_t target) {
  for (size_t i = 0; i < ranked.ids.size(); ++i) {
    if (ranked.ids[i] == target) return i + 1;
  }
  return 0;
}

}  // namespace

int recall_at_k(const RankedList& ranked, int64_t target, int k) {
  size_t r = rank_of(ranked, target);
  if (r == 0) throw ConfigError("recall_at_k: target not in ranked list");
  return r <= static_cast<size_t>(k) ? 1 : 0;
}

double ndcg_at_k(const RankedList& ranked, int64_t target, int k) {
  size_t r = rank_of(ranked, target);
  if (r == 0) throw ConfigError("ndcg_at_k: target not in ranked list");
  if (r > static_cast<size_t>(k)) return 0.0;
  return 1.0 / std::log2(static_cast<double>(r) + 1.0);
}

namespace {

void accumulate(TaskMetrics& m, const RankedList& ranked, int64_t target,
                bool target_may_be_absent) {
  if (target_may_be_absent && rank_of(ranked, target) == 0) {
    // beam never surfaced the target: all contributions zero
    m.count += 1;
    return;
  }
  m.recall5 += recall_at_k(ranked, target, 5);
  m.recall10 += recall_at_k(ranked, target, 10);
  m.ndcg5 += ndcg_at_k(ranked, target, 5);
  m.ndcg10 += ndcg_at_k(ranked, target, 10);
  m.count += 1;
}

void finalize(TaskMetrics& m) {
  if (m.count == 0) return;
  m.recall5 /= m.count;
  m.recall10 /= m.count;
  m.ndcg5 /= m.count;
  m.ndcg10 /= m.count;
}

}  // namespace

MetricsReport evaluate_reranking(const std::vector<EvalInstance>& instances,
                                 const CandidateScorer& scorer) {
  MetricsReport report;
  report.mode = "rerank";
  for (const EvalInstance& inst : instances) {
    RankedList ranked = rank_candidates(
        inst.candidates, [&](int64_t c) { return scorer(inst, c); });
    accumulate(inst.task == Task::kSearch ? report.search : report.rec, ranked,
               inst.target_item, /*target_may_be_absent=*/false);
  }
  finalize(report.search);
  finalize(report.rec);
  return report;
}

MetricsReport evaluate_fullranking(const std::vector<EvalInstance>& instances,
                                   const FullRanker& ranker, int beam) {
  MetricsReport report;
  report.mode = "fullrank";
  for (const EvalInstance& inst : instances) {
    std::vector<BeamHypothesis> hyps = ranker(inst, beam);
    RankedList ranked;
    for (const BeamHypothesis& h : hyps) {
      ranked.ids.push_back(h.item_id);
      ranked.scores.push_back(h.log_prob);
    }
    accumulate(inst.task == Task::kSearch ? report.search : report.rec, ranked,
               inst.target_item, /*target_may_be_absent=*/true);
  }
  finalize(report.search);
  finalize(report.rec);
  return report;
}

double random_baseline_expectation(int n_candidates, int k,
                                   const std::string& metric) {
  if (n_candidates < k || k < 1) {
    throw ConfigError("random_baseline_expectation: need n >= K >= 1");
  }
  if (metric == "recall") {
    return static_cast<double>(k) / n_candidates;
  }
  if (metric == "ndcg") {
    double acc = 0.0;
    for (int r = 1; r <= k; ++r) acc += 1.0 / std::log2(r + 1.0);
    return acc / n_candidates;
  }
  throw ConfigError("random_baseline_expectation: unknown metric " + metric);
}

void save_metrics_json(const std::string& path, const MetricsReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << std::setprecision(17);
  auto task_block = [&](const TaskMetrics& m) {
    out << "{\"count\": " << m.count << ", \"ndcg@10\": " << m.ndcg10
        << ", \"ndcg@5\": " << m.ndcg5 << ", \"recall@10\": " << m.recall10
        << ", \"recall@5\": " << m.recall5 << "}";
  };
  out << "{\n  \"mode\": \"" << report.mode << "\",\n  \"paradigm\": \""
      << report.paradigm << "\",\n  \"rec\": ";
  task_block(report.rec);
  out << ",\n  \"search\": ";
  task_block(report.search);
  out << "\n}\n";
}

}  // namespace gensr
