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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "gensr/corpus.hpp"

using namespace gensr;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Minimal hand corpus: `n_items` rec-only single-user-friendly items.
Corpus tiny_corpus(int64_t n_items) {
  Corpus c;
  for (int64_t i = 0; i < n_items; ++i) {
    ItemRecord it;
    it.item_id = i;
    it.category_path = {"cat" + std::to_string(i % 7)};
    it.description_tokens = {"desc" + std::to_string(i % 11)};
    c.items.push_back(std::move(it));
  }
  return c;
}

void add_rec_history(Corpus& c, int64_t user, const std::vector<int64_t>& items,
                     int64_t ts_start = 1) {
  UserHistory h;
  h.user_id = user;
  int64_t ts = ts_start;
  for (int64_t it : items) {
    InteractionRecord r;
    r.user_id = user;
    r.item_id = it;
    r.behavior = Behavior::kRec;
    r.timestamp = ts++;
    r.label = true;
    h.interactions.push_back(r);
  }
  c.histories.push_back(std::move(h));
}

}  // namespace

TEST_CASE("generator is deterministic: same seed, byte-identical files") {
  GeneratorConfig cfg;
  cfg.users = 5;
  cfg.items = 120;
  cfg.seed = 0;
  Corpus a = generate_synthetic_corpus(cfg);
  Corpus b = generate_synthetic_corpus(cfg);
  fs::path da = fs::temp_directory_path() / "gensr_corpus_a";
  fs::path db = fs::temp_directory_path() / "gensr_corpus_b";
  fs::create_directories(da);
  fs::create_directories(db);
  save_corpus(a, da.string());
  save_corpus(b, db.string());
  for (const char* f : {"items.jsonl", "queries.jsonl", "interactions.jsonl"}) {
    CHECK(slurp(da / f) == slurp(db / f));
    CHECK(!slurp(da / f).empty());
  }
  fs::remove_all(da);
  fs::remove_all(db);
}

TEST_CASE("generator rejects configs that break candidate sampling") {
  GeneratorConfig cfg;
  cfg.users = 1;
  cfg.items = 99;
  CHECK_THROWS_AS(generate_synthetic_corpus(cfg), ConfigError);
  cfg.items = 120;
  cfg.mean_interactions = 4;
  CHECK_THROWS_AS(generate_synthetic_corpus(cfg), ConfigError);
}

TEST_CASE("generator stats match requested counts within sampling bounds") {
  GeneratorConfig cfg;
  cfg.users = 50;
  cfg.items = 300;
  cfg.mean_interactions = 20;
  cfg.seed = 3;
  Corpus c = generate_synthetic_corpus(cfg);
  CorpusStats s = compute_stats(c);
  CHECK(s.users == 50);
  CHECK(s.items == 300);
  CHECK(s.queries > 0);
  // per-user interaction count jitters by at most mean/4 around the mean
  for (const auto& h : c.histories) {
    CHECK(h.interactions.size() >= 15);
    CHECK(h.interactions.size() <= 25);
  }
  // independent recount
  int64_t src = 0, rec = 0;
  for (const auto& h : c.histories)
    for (const auto& r : h.interactions)
      (r.behavior == Behavior::kSearch ? src : rec)++;
  CHECK(s.inter_search == src);
  CHECK(s.inter_rec == rec);
  CHECK(src + rec >= 50 * 15);
}

TEST_CASE("every src interaction carries a query consistent with its item") {
  GeneratorConfig cfg;
  cfg.users = 10;
  cfg.items = 150;
  cfg.seed = 4;
  Corpus c = generate_synthetic_corpus(cfg);
  int64_t seen = 0;
  for (const auto& h : c.histories) {
    for (const auto& r : h.interactions) {
      if (r.behavior != Behavior::kSearch) continue;
      ++seen;
      REQUIRE(r.query_id.has_value());
      const auto& q = c.query(*r.query_id);
      CHECK(q.source_category_path == c.item(r.item_id).category_path);
    }
  }
  CHECK(seen > 0);
}

TEST_CASE("derive_query_from_categories: lowercase, dedup, stop-term removal") {
  ItemRecord it;
  it.item_id = 0;
  it.description_tokens = {"x"};

  it.category_path = {"Books"};
  CHECK(derive_query_from_categories(it).tokens == std::vector<std::string>{"books"});

  it.category_path = {"Kindle Store", "Kindle eBooks", "Mystery"};
  CHECK(derive_query_from_categories(it).tokens ==
        std::vector<std::string>{"kindle", "store", "ebooks", "mystery"});

  it.category_path = {"A", "A"};
  CHECK(derive_query_from_categories(it).tokens == std::vector<std::string>{"a"});

  it.category_path = {"The Art of War"};
  CHECK(derive_query_from_categories(it).tokens ==
        std::vector<std::string>{"art", "war"});
}

TEST_CASE("compute_stats on an empty corpus is all zeros") {
  Corpus c;
  CorpusStats s = compute_stats(c);
  CHECK(s == CorpusStats{});
}

TEST_CASE("sample_candidates: forced set, determinism, seed sensitivity") {
  // exactly 99 non-interacted items: the negatives are forced
  std::unordered_set<int64_t> positives = {42};
  auto forced = sample_candidates(42, positives, 100, 99, 7);
  REQUIRE(forced.size() == 100);
  std::set<int64_t> distinct(forced.begin(), forced.end());
  CHECK(distinct.size() == 100);  // every item exactly once

  auto a = sample_candidates(5, {5, 6}, 10000, 99, 0);
  auto b = sample_candidates(5, {5, 6}, 10000, 99, 0);
  CHECK(a == b);
  auto d = sample_candidates(5, {5, 6}, 10000, 99, 1);
  CHECK(a != d);

  // insufficient pool names the failure
  CHECK_THROWS_AS(sample_candidates(0, {0, 1}, 100, 99, 0), ConfigError);
}

TEST_CASE("leave-one-out: [a,b,c] -> train history {a}, valid b, test c") {
  Corpus c = tiny_corpus(150);
  add_rec_history(c, 0, {10, 20, 30});
  c.validate();
  DatasetSplit split = split_leave_one_out(c, 1);
  CHECK(split.train.empty());  // no non-empty-prefix train targets remain
  REQUIRE(split.valid.size() == 1);
  REQUIRE(split.test.size() == 1);
  CHECK(split.valid[0].target_item == 20);
  CHECK(split.test[0].target_item == 30);
  REQUIRE(split.train_histories.size() == 1);
  REQUIRE(split.train_histories[0].interactions.size() == 1);
  CHECK(split.train_histories[0].interactions[0].item_id == 10);
  // prefixes strictly precede targets
  for (const auto& r : split.test[0].history_prefix.interactions) {
    CHECK(r.timestamp < 3);
  }
}

TEST_CASE("leave-one-out rejects short histories naming the user") {
  Corpus c = tiny_corpus(150);
  add_rec_history(c, 0, {1, 2});
  CHECK_THROWS_WITH_AS(split_leave_one_out(c, 0),
                       doctest::Contains("user 0"), ConfigError);
}

TEST_CASE("leave-one-out re-merge reproduces the interaction multiset") {
  GeneratorConfig cfg;
  cfg.users = 8;
  cfg.items = 150;
  cfg.seed = 9;
  Corpus c = generate_synthetic_corpus(cfg);
  DatasetSplit split = split_leave_one_out(c, 2);
  // per user: first interaction + train targets + valid target + test target
  std::map<int64_t, std::multiset<int64_t>> rebuilt, original;
  for (const auto& h : c.histories)
    for (const auto& r : h.interactions) original[h.user_id].insert(r.item_id);
  for (const auto& h : c.histories)
    rebuilt[h.user_id].insert(h.interactions.front().item_id);
  for (const auto& inst : split.train) rebuilt[inst.user_id].insert(inst.target_item);
  for (const auto& inst : split.valid) rebuilt[inst.user_id].insert(inst.target_item);
  for (const auto& inst : split.test) rebuilt[inst.user_id].insert(inst.target_item);
  CHECK(rebuilt == original);
}

TEST_CASE("eval instances satisfy the 99-negative protocol invariants") {
  GeneratorConfig cfg;
  cfg.users = 6;
  cfg.items = 150;
  cfg.seed = 11;
  Corpus c = generate_synthetic_corpus(cfg);
  DatasetSplit split = split_leave_one_out(c, 5);
  auto check_instances = [&](const std::vector<EvalInstance>& insts) {
    for (const auto& inst : insts) {
      REQUIRE(inst.candidates.size() == 100);
      std::set<int64_t> cand(inst.candidates.begin(), inst.candidates.end());
      CHECK(cand.size() == 100);
      CHECK(cand.count(inst.target_item) == 1);
      std::unordered_set<int64_t> pos;
      for (int64_t p : c.positives_of(inst.user_id)) pos.insert(p);
      for (int64_t cd : inst.candidates) {
        if (cd != inst.target_item) CHECK(pos.count(cd) == 0);
      }
      CHECK((inst.task == Task::kSearch) == inst.query.has_value());
    }
  };
  check_instances(split.train);
  check_instances(split.valid);
  check_instances(split.test);
}

TEST_CASE("temporal split: day windows on timestamps {1,2,3}") {
  Corpus c = tiny_corpus(150);
  add_rec_history(c, 0, {10, 20, 30});  // timestamps 1, 2, 3
  c.validate();
  DatasetSplit split = split_temporal(c, /*test_window_start=*/3,
                                      /*valid_window_start=*/2, 0);
  REQUIRE(split.train_histories.size() == 1);
  REQUIRE(split.train_histories[0].interactions.size() == 1);
  CHECK(split.train_histories[0].interactions[0].timestamp == 1);
  REQUIRE(split.valid.size() == 1);
  CHECK(split.valid[0].target_item == 20);
  REQUIRE(split.test.size() == 1);
  CHECK(split.test[0].target_item == 30);

  // boundaries are inclusive-exclusive on window starts: ts == start goes in
  Corpus c2 = tiny_corpus(150);
  add_rec_history(c2, 0, {1, 2, 3, 4});  // timestamps 1..4
  DatasetSplit s2 = split_temporal(c2, 4, 2, 0);
  CHECK(s2.valid.size() == 2);  // ts 2 and 3
  CHECK(s2.test.size() == 1);   // ts 4

  CHECK_THROWS_AS(split_temporal(c, 100, 2, 0), ConfigError);  // empty test
  CHECK_THROWS_AS(split_temporal(c, 2, 2, 0), ConfigError);    // degenerate
}

TEST_CASE("save/load roundtrip preserves the corpus and is byte-stable") {
  GeneratorConfig cfg;
  cfg.users = 5;
  cfg.items = 110;
  cfg.seed = 17;
  Corpus c = generate_synthetic_corpus(cfg);
  fs::path d1 = fs::temp_directory_path() / "gensr_corpus_rt1";
  fs::path d2 = fs::temp_directory_path() / "gensr_corpus_rt2";
  fs::create_directories(d1);
  fs::create_directories(d2);
  save_corpus(c, d1.string());
  Corpus back = load_corpus(d1.string());
  CHECK(compute_stats(back) == compute_stats(c));
  CHECK(back.items[7].description_tokens == c.items[7].description_tokens);
  save_corpus(back, d2.string());
  for (const char* f : {"items.jsonl", "queries.jsonl", "interactions.jsonl"}) {
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("load_corpus on a missing directory is a prerequisite error") {
  CHECK_THROWS_AS(load_corpus("/nonexistent/gensr_nowhere"), PrerequisiteError);
}
