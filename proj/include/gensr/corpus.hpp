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

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gensr/common.hpp"

namespace gensr {

enum class Behavior { kSearch, kRec };
enum class Task { kSearch, kRec };

std::string behavior_to_string(Behavior b);
Behavior behavior_from_string(const std::string& s);

struct ItemRecord {
  int64_t item_id = 0;
  std::vector<std::string> category_path;     // length >= 1
  std::vector<std::string> description_tokens;  // length >= 1
};

struct QueryRecord {
  int64_t query_id = 0;
  std::vector<std::string> tokens;  // non-empty
  std::vector<std::string> source_category_path;
};

struct InteractionRecord {
  int64_t user_id = 0;
  int64_t item_id = 0;
  Behavior behavior = Behavior::kRec;
  std::optional<int64_t> query_id;  // present iff behavior == kSearch
  int64_t timestamp = 0;
  bool label = false;  // clicked
};

struct UserHistory {
  int64_t user_id = 0;
  std::vector<InteractionRecord> interactions;  // chronological
};

struct Corpus {
  std::vector<ItemRecord> items;          // indexed by item_id
  std::vector<QueryRecord> queries;       // indexed by query_id
  std::vector<UserHistory> histories;     // indexed by user_id
  // Planted latent factors, kept for diagnostics on synthetic corpora.
  // Row-major [num x factor_dim]; empty for ingested corpora.
  std::vector<double> user_factors;
  std::vector<double> item_factors;
  int factor_dim = 0;

  int64_t num_users() const { return static_cast<int64_t>(histories.size()); }
  int64_t num_items() const { return static_cast<int64_t>(items.size()); }

  const ItemRecord& item(int64_t id) const;
  const QueryRecord& query(int64_t id) const;

  // All clicked item ids of a user (either behavior).
  std::vector<int64_t> positives_of(int64_t user_id) const;

  void validate() const;  // throws ConfigError on invariant violations
};

struct CorpusStats {
  int64_t users = 0;
  int64_t items = 0;
  int64_t queries = 0;
  int64_t inter_search = 0;
  int64_t inter_rec = 0;
  bool operator==(const CorpusStats&) const = default;
};

struct EvalInstance {
  int64_t user_id = 0;
  UserHistory history_prefix;
  int64_t target_item = 0;
  std::vector<int64_t> candidates;  // exactly 100, target included
  Task task = Task::kRec;
  std::optional<QueryRecord> query;  // present iff task == kSearch
};

struct DatasetSplit {
  std::vector<EvalInstance> train;  // training targets with their prefixes
  std::vector<EvalInstance> valid;
  std::vector<EvalInstance> test;
  // Per-user full training histories (everything before the validation target
  // for leave-one-out; the train window for temporal splits).
  std::vector<UserHistory> train_histories;
};

struct GeneratorConfig {
  int64_t users = 50;
  int64_t items = 300;
  int category_depth = 3;
  int category_branching = 4;
  int mean_interactions = 40;   // per user, >= 5
  double search_ratio = 0.5;    // fraction of src interactions
  uint64_t seed = 0;
  int factor_dim = 8;
  double affinity_scale = 8.0;  // logistic scale of planted inner products
};

// -- operations -------------------------------------------------------------

Corpus generate_synthetic_corpus(const GeneratorConfig& config);

QueryRecord derive_query_from_categories(const ItemRecord& item);

CorpusStats compute_stats(const Corpus& corpus);

// Candidate sampling: k distinct negatives outside user_positives, plus the
// target, total k+1. Deterministic for a fixed seed.
std::vector<int64_t> sample_candidates(int64_t target,
                                       const std::unordered_set<int64_t>& user_positives,
                                       int64_t num_items, int k, uint64_t seed);

// Per user: last interaction -> test, second-to-last -> valid, rest -> train.
DatasetSplit split_leave_one_out(const Corpus& corpus, uint64_t seed,
                                 int num_candidates = 100);

// Timestamp-window partition; [train | valid_window | test_window], boundaries
// inclusive-exclusive on window starts.
DatasetSplit split_temporal(const Corpus& corpus, int64_t test_window_start,
                            int64_t valid_window_start, uint64_t seed,
                            int num_candidates = 100);

// -- JSONL interface --------------------------------------------------------

void save_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

}  // namespace gensr
