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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "gensr/eval.hpp"

using namespace gensr;

namespace {

RankedList make_ranked(std::vector<int64_t> ids) {
  RankedList r;
  r.ids = std::move(ids);
  for (size_t i = 0; i < r.ids.size(); ++i) {
    r.scores.push_back(static_cast<double>(r.ids.size() - i));
  }
  return r;
}

// independent metric oracle: scan for the target, apply the formulas directly
double oracle_metric(const std::vector<int64_t>& ids, int64_t target, int k,
                     bool ndcg) {
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != target) continue;
    size_t rank = i + 1;
    if (rank > static_cast<size_t>(k)) return 0.0;
    return ndcg ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 1.0;
  }
  return -1.0;  // absent
}

EvalInstance tiny_instance(Task task, int64_t target,
                           std::vector<int64_t> candidates) {
  EvalInstance inst;
  inst.task = task;
  inst.target_item = target;
  inst.candidates = std::move(candidates);
  if (task == Task::kSearch) inst.query = QueryRecord{0, {"q"}, {}};
  InteractionRecord r;
  r.item_id = 0;
  inst.history_prefix.interactions.push_back(r);
  return inst;
}

}  // namespace

TEST_CASE("recall/ndcg hand values") {
  RankedList r = make_ranked({10, 20, 30, 40, 50, 60, 70, 80, 90, 100});
  CHECK(recall_at_k(r, 30, 5) == 1);   // rank 3
  CHECK(recall_at_k(r, 70, 5) == 0);   // rank 7
  CHECK(recall_at_k(r, 70, 10) == 1);
  CHECK(ndcg_at_k(r, 10, 5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ndcg_at_k(r, 20, 5) ==
        doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-12));
  CHECK(ndcg_at_k(r, 20, 5) == doctest::Approx(0.6309).epsilon(1e-4));
  CHECK(ndcg_at_k(r, 60, 5) == 0.0);   // rank 6
  CHECK_THROWS_AS((void)recall_at_k(r, 999, 5), ConfigError);
  CHECK_THROWS_AS((void)ndcg_at_k(r, 999, 5), ConfigError);
}

TEST_CASE("metrics equal the brute-force oracle on 1000 fuzzed lists") {
  Rng rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 1 + static_cast<int>(rng.next_below(30));
    std::vector<int64_t> ids(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<size_t>(i)] = i;
    for (int i = n; i > 1; --i) {
      std::swap(ids[static_cast<size_t>(i - 1)],
                ids[rng.next_below(static_cast<uint64_t>(i))]);
    }
    RankedList r = make_ranked(ids);
    int64_t target = static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(n)));
    int k = 1 + static_cast<int>(rng.next_below(12));
    REQUIRE(recall_at_k(r, target, k) ==
            (oracle_metric(ids, target, k, false) > 0.0 ? 1 : 0));
    REQUIRE(ndcg_at_k(r, target, k) ==
            doctest::Approx(oracle_metric(ids, target, k, true)).epsilon(1e-15));
  }
}

TEST_CASE("rank_candidates sorts by score desc with id-ascending ties") {
  std::map<int64_t, double> score = {{5, 0.2}, {1, 0.9}, {9, 0.2}, {3, 0.9}};
  RankedList r = rank_candidates({5, 1, 9, 3},
                                 [&](int64_t id) { return score.at(id); });
  CHECK(r.ids == std::vector<int64_t>{1, 3, 5, 9});
  CHECK(std::is_sorted(r.scores.begin(), r.scores.end(), std::greater<>()));
  CHECK_THROWS_AS(rank_candidates({1, 1}, [](int64_t) { return 0.0; }),
                  ConfigError);
}

TEST_CASE("evaluate_reranking: oracle scorer gives all-ones metrics") {
  std::vector<EvalInstance> insts;
  insts.push_back(tiny_instance(Task::kSearch, 7, {3, 7, 11, 15}));
  insts.push_back(tiny_instance(Task::kRec, 11, {3, 7, 11, 15}));
  auto report = evaluate_reranking(insts, [](const EvalInstance& i, int64_t c) {
    return c == i.target_item ? 1.0 : 0.0;
  });
  for (const TaskMetrics* m : {&report.search, &report.rec}) {
    CHECK(m->count == 1);
    CHECK(m->recall5 == 1.0);
    CHECK(m->recall10 == 1.0);
    CHECK(m->ndcg5 == 1.0);
    CHECK(m->ndcg10 == 1.0);
  }
}

TEST_CASE("evaluate_reranking: constant scorer hits the tie-break ranking") {
  // constant scores rank candidates by ascending id; target 11 lands at rank 3
  std::vector<EvalInstance> insts = {tiny_instance(Task::kRec, 11, {3, 7, 11, 15})};
  auto report = evaluate_reranking(insts,
                                   [](const EvalInstance&, int64_t) { return 0.5; });
  CHECK(report.rec.recall5 == 1.0);
  CHECK(report.rec.ndcg5 == doctest::Approx(1.0 / std::log2(4.0)).epsilon(1e-12));
}

TEST_CASE("evaluate_reranking matches an independent re-implementation") {
  Rng rng(9);
  std::vector<EvalInstance> insts;
  std::map<std::pair<int64_t, int64_t>, double> score;  // (target, cand) -> s
  for (int i = 0; i < 50; ++i) {
    std::vector<int64_t> cands;
    for (int64_t c = 0; c < 20; ++c) cands.push_back(c);
    int64_t target = static_cast<int64_t>(rng.next_below(20));
    insts.push_back(tiny_instance(i % 2 ? Task::kSearch : Task::kRec, target, cands));
    for (int64_t c = 0; c < 20; ++c) {
      score[{target, c}] = static_cast<double>(rng.next_below(5));  // force ties
    }
  }
  auto scorer = [&](const EvalInstance& inst, int64_t c) {
    return score.at({inst.target_item, c});
  };
  auto report = evaluate_reranking(insts, scorer);

  // brute force: sort (score desc, id asc) per instance, then average
  TaskMetrics os, orm;
  for (const auto& inst : insts) {
    std::vector<int64_t> ids = inst.candidates;
    std::sort(ids.begin(), ids.end(), [&](int64_t a, int64_t b) {
      double sa = scorer(inst, a), sb = scorer(inst, b);
      return sa != sb ? sa > sb : a < b;
    });
    TaskMetrics& m = inst.task == Task::kSearch ? os : orm;
    m.recall5 += oracle_metric(ids, inst.target_item, 5, false) > 0 ? 1 : 0;
    m.recall10 += oracle_metric(ids, inst.target_item, 10, false) > 0 ? 1 : 0;
    m.ndcg5 += oracle_metric(ids, inst.target_item, 5, true);
    m.ndcg10 += oracle_metric(ids, inst.target_item, 10, true);
    m.count += 1;
  }
  CHECK(report.search.recall5 == doctest::Approx(os.recall5 / os.count).epsilon(1e-15));
  CHECK(report.search.ndcg10 == doctest::Approx(os.ndcg10 / os.count).epsilon(1e-15));
  CHECK(report.rec.recall10 == doctest::Approx(orm.recall10 / orm.count).epsilon(1e-15));
  CHECK(report.rec.ndcg5 == doctest::Approx(orm.ndcg5 / orm.count).epsilon(1e-15));
  CHECK(report.search.count == os.count);
  CHECK(report.rec.count == orm.count);
}

TEST_CASE("evaluate_fullranking: beam list semantics") {
  std::vector<EvalInstance> insts = {tiny_instance(Task::kRec, 2, {0, 1, 2})};
  auto ranker = [](const EvalInstance&, int beam) {
    std::vector<BeamHypothesis> h = {{2, -0.1}, {0, -1.0}, {1, -2.0}};
    h.resize(static_cast<size_t>(std::min<int>(beam, 3)));
    return h;
  };
  auto r5 = evaluate_fullranking(insts, ranker, 5);
  CHECK(r5.rec.recall5 == 1.0);
  CHECK(r5.rec.ndcg5 == 1.0);

  // target outside the returned list contributes zero, not an error
  auto miss = evaluate_fullranking(
      insts, [](const EvalInstance&, int) {
        return std::vector<BeamHypothesis>{{0, -1.0}};
      },
      5);
  CHECK(miss.rec.count == 1);
  CHECK(miss.rec.recall10 == 0.0);
  CHECK(miss.rec.ndcg10 == 0.0);
}

TEST_CASE("NDCG <= recall per report; monotone score transform invariance") {
  Rng rng(21);
  std::vector<EvalInstance> insts;
  for (int i = 0; i < 20; ++i) {
    std::vector<int64_t> cands;
    for (int64_t c = 0; c < 15; ++c) cands.push_back(c);
    insts.push_back(tiny_instance(Task::kRec,
                                  static_cast<int64_t>(rng.next_below(15)), cands));
  }
  auto base = [](const EvalInstance& inst, int64_t c) {
    return std::sin(static_cast<double>(c * 13 + inst.target_item));
  };
  auto rep = evaluate_reranking(insts, base);
  CHECK(rep.rec.ndcg5 <= rep.rec.recall5 + 1e-15);
  CHECK(rep.rec.ndcg10 <= rep.rec.recall10 + 1e-15);
  // exp is strictly monotone: identical argsort, identical metrics
  auto rep2 = evaluate_reranking(insts, [&](const EvalInstance& i, int64_t c) {
    return std::exp(base(i, c));
  });
  CHECK(rep.rec.recall5 == rep2.rec.recall5);
  CHECK(rep.rec.ndcg10 == rep2.rec.ndcg10);
}

TEST_CASE("random baseline expectations") {
  CHECK(random_baseline_expectation(100, 5, "recall") == doctest::Approx(0.05));
  CHECK(random_baseline_expectation(100, 100, "recall") == doctest::Approx(1.0));
  double ndcg10 = 0.0;
  for (int r = 1; r <= 10; ++r) ndcg10 += 1.0 / std::log2(r + 1.0);
  ndcg10 /= 100.0;
  CHECK(random_baseline_expectation(100, 10, "ndcg") ==
        doctest::Approx(ndcg10).epsilon(1e-15));
  CHECK(random_baseline_expectation(100, 10, "ndcg") ==
        doctest::Approx(0.04527).epsilon(1e-3));
  CHECK_THROWS_AS((void)random_baseline_expectation(3, 5, "recall"), ConfigError);
  CHECK_THROWS_AS((void)random_baseline_expectation(10, 5, "mrr"), ConfigError);

  // Monte-Carlo cross-check of the ndcg expectation
  Rng rng(77);
  double acc = 0.0;
  const int trials = 20000;
  for (int tr = 0; tr < trials; ++tr) {
    // target uniform among 100 ranks
    int rank = 1 + static_cast<int>(rng.next_below(100));
    if (rank <= 10) acc += 1.0 / std::log2(rank + 1.0);
  }
  CHECK(acc / trials ==
        doctest::Approx(random_baseline_expectation(100, 10, "ndcg")).epsilon(0.05));
}

TEST_CASE("metrics JSON has stable keys and bit-identical reruns") {
  MetricsReport rep;
  rep.mode = "rerank";
  rep.paradigm = "gensr";
  rep.search = {0.5, 0.75, 0.25, 0.3, 4};
  rep.rec = {1.0, 1.0, 0.8, 0.85, 2};
  std::string p1 = "build_eval_a.json", p2 = "build_eval_b.json";
  save_metrics_json(p1, rep);
  save_metrics_json(p2, rep);
  std::ifstream a(p1), b(p2);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().find("\"recall@5\": 0.5") != std::string::npos);
  CHECK(sa.str().find("\"mode\": \"rerank\"") != std::string::npos);
  CHECK(sa.str().find("\"paradigm\": \"gensr\"") != std::string::npos);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}
