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

#include "gensr/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace gensr {

using nlohmann::json;

std::string behavior_to_string(Behavior b) {
  return b == Behavior::kSearch ? "src" : "rec";
}

Behavior behavior_from_string(const std::string& s) {
  if (s == "src") return Behavior::kSearch;
  if (s == "rec") return Behavior::kRec;
  throw ConfigError("unknown behavior: " + s);
}

const ItemRecord& Corpus::item(int64_t id) const {
  if (id < 0 || id >= num_items()) {
    throw ConfigError("unknown item id: " + std::to_string(id));
  }
  return items[static_cast<size_t>(id)];
}

const QueryRecord& Corpus::query(int64_t id) const {
  if (id < 0 || id >= static_cast<int64_t>(queries.size())) {
    throw ConfigError("unknown query id: " + std::to_string(id));
  }
  return queries[static_cast<size_t>(id)];
}

std::vector<int64_t> Corpus::positives_of(int64_t user_id) const {
  if (user_id < 0 || user_id >= num_users()) {
    throw ConfigError("unknown user id: " + std::to_string(user_id));
  }
  std::vector<int64_t> out;
  for (const auto& rec : histories[static_cast<size_t>(user_id)].interactions) {
    if (rec.label) out.push_back(rec.item_id);
  }
  return out;
}

void Corpus::validate() const {
  for (int64_t i = 0; i < num_items(); ++i) {
    const auto& it = items[static_cast<size_t>(i)];
    if (it.item_id != i) throw ConfigError("item ids must be dense and sorted");
    if (it.category_path.empty()) throw ConfigError("empty category_path for item " + std::to_string(i));
    if (it.description_tokens.empty()) throw ConfigError("empty description for item " + std::to_string(i));
  }
  for (size_t q = 0; q < queries.size(); ++q) {
    if (queries[q].query_id != static_cast<int64_t>(q)) throw ConfigError("query ids must be dense");
    if (queries[q].tokens.empty()) throw ConfigError("empty query tokens");
  }
  for (int64_t u = 0; u < num_users(); ++u) {
    const auto& h = histories[static_cast<size_t>(u)];
    if (h.user_id != u) throw ConfigError("user ids must be dense");
    int64_t prev_ts = INT64_MIN;
    for (const auto& rec : h.interactions) {
      if (rec.user_id != u) throw ConfigError("interaction user mismatch");
      if (rec.item_id < 0 || rec.item_id >= num_items()) {
        throw ConfigError("interaction references unknown item " + std::to_string(rec.item_id));
      }
      bool is_search = rec.behavior == Behavior::kSearch;
      if (is_search != rec.query_id.has_value()) {
        throw ConfigError("behavior/query mismatch for user " + std::to_string(u));
      }
      if (rec.query_id && (*rec.query_id < 0 ||
                           *rec.query_id >= static_cast<int64_t>(queries.size()))) {
        throw ConfigError("interaction references unknown query");
      }
      if (rec.timestamp <= prev_ts) {
        throw ConfigError("timestamps not strictly increasing for user " + std::to_string(u));
      }
      prev_ts = rec.timestamp;
    }
  }
}

QueryRecord derive_query_from_categories(const ItemRecord& item) {
  static const std::set<std::string> kStopTerms = {"and", "of", "the"};
  QueryRecord q;
  q.source_category_path = item.category_path;
  std::set<std::string> seen;
  for (const auto& level : item.category_path) {
    for (const auto& tok : tokenize_lower(level)) {
      if (kStopTerms.count(tok)) continue;
      if (seen.insert(tok).second) q.tokens.push_back(tok);
    }
  }
  if (q.tokens.empty()) {
    // a path made purely of stop terms still needs a non-empty query
    for (const auto& level : item.category_path) {
      for (const auto& tok : tokenize_lower(level)) {
        if (seen.insert(tok).second) q.tokens.push_back(tok);
      }
    }
  }
  return q;
}

namespace {

// Small word pool for item descriptions; indexes are drawn deterministically.
const char* kFlavorWords[] = {
    "classic", "deluxe", "compact", "vivid",  "prime",  "quiet",
    "bright",  "rustic", "modern",  "smooth", "bold",   "gentle",
    "rapid",   "solid",  "light",   "cosmic", "amber",  "coral",
    "ivory",   "jade",   "onyx",    "pearl",  "ruby",   "slate"};
constexpr int kNumFlavorWords = sizeof(kFlavorWords) / sizeof(kFlavorWords[0]);

std::string category_name(int level, int index) {
  std::ostringstream os;
  os << "cat" << level << "n" << index;
  return os.str();
}

}  // namespace

Corpus generate_synthetic_corpus(const GeneratorConfig& config) {
  if (config.items < 100) {
    throw ConfigError("generator: need >= 100 items for 99-negative candidate sampling");
  }
  if (config.mean_interactions < 5) {
    throw ConfigError("generator: users need >= 5 interactions");
  }
  if (config.users < 1 || config.category_depth < 1 || config.category_branching < 1) {
    throw ConfigError("generator: users, depth and branching must be positive");
  }

  Corpus corpus;
  corpus.factor_dim = config.factor_dim;

  // Items: random leaf in the category tree, description from path + flavor.
  Rng item_rng(derive_seed(config.seed, "items", 0));
  corpus.items.reserve(static_cast<size_t>(config.items));
  for (int64_t i = 0; i < config.items; ++i) {
    ItemRecord it;
    it.item_id = i;
    int index = 0;
    for (int level = 0; level < config.category_depth; ++level) {
      index = index * config.category_branching +
              static_cast<int>(item_rng.next_below(config.category_branching));
      it.category_path.push_back(category_name(level, index));
    }
    for (const auto& level : it.category_path) {
      for (const auto& tok : tokenize_lower(level)) it.description_tokens.push_back(tok);
    }
    it.description_tokens.push_back(kFlavorWords[item_rng.next_below(kNumFlavorWords)]);
    it.description_tokens.push_back(kFlavorWords[item_rng.next_below(kNumFlavorWords)]);
    corpus.items.push_back(std::move(it));
  }

  // Planted factors.
  Rng factor_rng(derive_seed(config.seed, "factors", 0));
  const int fd = config.factor_dim;
  corpus.user_factors.resize(static_cast<size_t>(config.users * fd));
  corpus.item_factors.resize(static_cast<size_t>(config.items * fd));
  const double fscale = 1.0 / std::sqrt(static_cast<double>(fd));
  for (auto& v : corpus.user_factors) v = factor_rng.next_normal() * fscale;
  for (auto& v : corpus.item_factors) v = factor_rng.next_normal() * fscale;

  auto affinity = [&](int64_t u, int64_t i) {
    double s = 0.0;
    for (int k = 0; k < fd; ++k) {
      s += corpus.user_factors[static_cast<size_t>(u * fd + k)] *
           corpus.item_factors[static_cast<size_t>(i * fd + k)];
    }
    return s * config.affinity_scale;
  };

  // Query table, deduplicated by category path.
  std::map<std::vector<std::string>, int64_t> query_ids;
  auto query_for_item = [&](int64_t item_id) {
    const auto& it = corpus.items[static_cast<size_t>(item_id)];
    auto found = query_ids.find(it.category_path);
    if (found != query_ids.end()) return found->second;
    QueryRecord q = derive_query_from_categories(it);
    q.query_id = static_cast<int64_t>(corpus.queries.size());
    query_ids.emplace(it.category_path, q.query_id);
    corpus.queries.push_back(std::move(q));
    return static_cast<int64_t>(corpus.queries.size()) - 1;
  };

  // Per-user histories from derived seeds; clicks follow a softmax over
  // planted affinities within a sampled slate.
  corpus.histories.reserve(static_cast<size_t>(config.users));
  for (int64_t u = 0; u < config.users; ++u) {
    Rng rng(derive_seed(config.seed, "user", static_cast<uint64_t>(u)));
    UserHistory hist;
    hist.user_id = u;
    int64_t jitter = config.mean_interactions / 4;
    int64_t n = config.mean_interactions;
    if (jitter > 0) n += static_cast<int64_t>(rng.next_below(2 * jitter + 1)) - jitter;
    n = std::max<int64_t>(n, 5);
    constexpr int kSlate = 20;
    for (int64_t j = 0; j < n; ++j) {
      // slate of distinct items, clicked one ~ softmax(affinity)
      auto slate = rng.sample_distinct(config.items, kSlate, {});
      double mx = -1e300;
      std::vector<double> a(kSlate);
      for (int s = 0; s < kSlate; ++s) {
        a[s] = affinity(u, slate[s]);
        mx = std::max(mx, a[s]);
      }
      double z = 0.0;
      for (int s = 0; s < kSlate; ++s) z += std::exp(a[s] - mx);
      double r = rng.next_double() * z, acc = 0.0;
      int picked = kSlate - 1;
      for (int s = 0; s < kSlate; ++s) {
        acc += std::exp(a[s] - mx);
        if (r <= acc) { picked = s; break; }
      }
      InteractionRecord rec;
      rec.user_id = u;
      rec.item_id = slate[picked];
      rec.timestamp = j + 1;
      rec.label = true;
      if (rng.next_double() < config.search_ratio) {
        rec.behavior = Behavior::kSearch;
        rec.query_id = query_for_item(rec.item_id);
      } else {
        rec.behavior = Behavior::kRec;
      }
      hist.interactions.push_back(rec);
    }
    corpus.histories.push_back(std::move(hist));
  }

  corpus.validate();
  return corpus;
}

CorpusStats compute_stats(const Corpus& corpus) {
  CorpusStats s;
  s.users = corpus.num_users();
  s.items = corpus.num_items();
  s.queries = static_cast<int64_t>(corpus.queries.size());
  for (const auto& h : corpus.histories) {
    for (const auto& rec : h.interactions) {
      if (rec.behavior == Behavior::kSearch) ++s.inter_search;
      else ++s.inter_rec;
    }
  }
  return s;
}

std::vector<int64_t> sample_candidates(int64_t target,
                                       const std::unordered_set<int64_t>& user_positives,
                                       int64_t num_items, int k, uint64_t seed) {
  std::vector<int64_t> excluded(user_positives.begin(), user_positives.end());
  std::sort(excluded.begin(), excluded.end());
  if (!user_positives.count(target)) excluded.push_back(target);
  if (num_items - static_cast<int64_t>(user_positives.size() +
                                       (user_positives.count(target) ? 0 : 1)) < k) {
    throw ConfigError("not enough negatives for target " + std::to_string(target));
  }
  Rng rng(seed);
  auto negatives = rng.sample_distinct(num_items, k, excluded);
  negatives.push_back(target);
  return negatives;
}

namespace {

EvalInstance make_instance(const Corpus& corpus, const UserHistory& full,
                           size_t target_index, uint64_t seed, int num_candidates) {
  const auto& target = full.interactions[target_index];
  EvalInstance inst;
  inst.user_id = full.user_id;
  inst.history_prefix.user_id = full.user_id;
  inst.history_prefix.interactions.assign(full.interactions.begin(),
                                          full.interactions.begin() + target_index);
  inst.target_item = target.item_id;
  inst.task = target.behavior == Behavior::kSearch ? Task::kSearch : Task::kRec;
  if (target.query_id) inst.query = corpus.query(*target.query_id);

  std::unordered_set<int64_t> positives;
  for (const auto& rec : full.interactions) {
    if (rec.label) positives.insert(rec.item_id);
  }
  try {
    inst.candidates = sample_candidates(target.item_id, positives, corpus.num_items(),
                                        num_candidates - 1, seed);
  } catch (const ConfigError& e) {
    throw ConfigError("user " + std::to_string(full.user_id) + ": " + e.what());
  }
  return inst;
}

}  // namespace

DatasetSplit split_leave_one_out(const Corpus& corpus, uint64_t seed,
                                 int num_candidates) {
  DatasetSplit split;
  for (const auto& full : corpus.histories) {
    size_t n = full.interactions.size();
    if (n < 3) {
      throw ConfigError("leave-one-out requires >= 3 interactions, user " +
                        std::to_string(full.user_id));
    }
    // Training instances need a non-empty prefix, so the first interaction
    // contributes to histories only.
    for (size_t i = 1; i + 2 < n; ++i) {
      split.train.push_back(make_instance(
          corpus, full, i, derive_seed(seed, "cand_train", fnv1a(&i, sizeof(i),
                                       static_cast<uint64_t>(full.user_id))),
          num_candidates));
    }
    split.valid.push_back(make_instance(
        corpus, full, n - 2,
        derive_seed(seed, "cand_valid", static_cast<uint64_t>(full.user_id)),
        num_candidates));
    split.test.push_back(make_instance(
        corpus, full, n - 1,
        derive_seed(seed, "cand_test", static_cast<uint64_t>(full.user_id)),
        num_candidates));
    UserHistory train_hist;
    train_hist.user_id = full.user_id;
    train_hist.interactions.assign(full.interactions.begin(),
                                   full.interactions.end() - 2);
    split.train_histories.push_back(std::move(train_hist));
  }
  return split;
}

DatasetSplit split_temporal(const Corpus& corpus, int64_t test_window_start,
                            int64_t valid_window_start, uint64_t seed,
                            int num_candidates) {
  if (valid_window_start >= test_window_start) {
    throw ConfigError("temporal split: validation window must precede test window");
  }
  DatasetSplit split;
  int64_t n_train = 0, n_valid = 0, n_test = 0;
  for (const auto& full : corpus.histories) {
    UserHistory train_hist;
    train_hist.user_id = full.user_id;
    for (size_t i = 0; i < full.interactions.size(); ++i) {
      const auto& rec = full.interactions[i];
      uint64_t inst_seed = derive_seed(seed, "cand_temporal",
                                       fnv1a(&i, sizeof(i),
                                             static_cast<uint64_t>(full.user_id)));
      if (rec.timestamp < valid_window_start) {
        train_hist.interactions.push_back(rec);
        ++n_train;
        if (i >= 1 && rec.label) {
          split.train.push_back(make_instance(corpus, full, i, inst_seed, num_candidates));
        }
      } else if (rec.timestamp < test_window_start) {
        ++n_valid;
        if (i >= 1 && rec.label) {
          split.valid.push_back(make_instance(corpus, full, i, inst_seed, num_candidates));
        }
      } else {
        ++n_test;
        if (i >= 1 && rec.label) {
          split.test.push_back(make_instance(corpus, full, i, inst_seed, num_candidates));
        }
      }
    }
    if (!train_hist.interactions.empty()) {
      split.train_histories.push_back(std::move(train_hist));
    }
  }
  if (n_train == 0 || n_valid == 0 || n_test == 0) {
    throw ConfigError("temporal split: a window is empty (degenerate span)");
  }
  return split;
}

// -- JSONL ------------------------------------------------------------------

namespace {

void write_lines(const std::string& path, const std::vector<json>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  for (const auto& j : lines) out << j.dump() << "\n";
}

std::vector<json> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PrerequisiteError("cannot read " + path);
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(json::parse(line));
  }
  return out;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& dir) {
  std::vector<json> items;
  for (const auto& it : corpus.items) {
    items.push_back({{"item_id", it.item_id},
                     {"category_path", it.category_path},
                     {"description_tokens", it.description_tokens}});
  }
  write_lines(dir + "/items.jsonl", items);

  std::vector<json> queries;
  for (const auto& q : corpus.queries) {
    queries.push_back({{"query_id", q.query_id},
                       {"tokens", q.tokens},
                       {"source_category_path", q.source_category_path}});
  }
  write_lines(dir + "/queries.jsonl", queries);

  std::vector<json> inters;
  for (const auto& h : corpus.histories) {
    for (const auto& rec : h.interactions) {
      json j = {{"user_id", rec.user_id},
                {"item_id", rec.item_id},
                {"behavior", behavior_to_string(rec.behavior)},
                {"timestamp", rec.timestamp},
                {"label", rec.label}};
      if (rec.query_id) j["query_id"] = *rec.query_id;
      inters.push_back(std::move(j));
    }
  }
  write_lines(dir + "/interactions.jsonl", inters);
}

Corpus load_corpus(const std::string& dir) {
  Corpus corpus;
  for (const auto& j : read_lines(dir + "/items.jsonl")) {
    ItemRecord it;
    it.item_id = j.at("item_id").get<int64_t>();
    it.category_path = j.at("category_path").get<std::vector<std::string>>();
    it.description_tokens = j.at("description_tokens").get<std::vector<std::string>>();
    corpus.items.push_back(std::move(it));
  }
  std::sort(corpus.items.begin(), corpus.items.end(),
            [](const auto& a, const auto& b) { return a.item_id < b.item_id; });

  for (const auto& j : read_lines(dir + "/queries.jsonl")) {
    QueryRecord q;
    q.query_id = j.at("query_id").get<int64_t>();
    q.tokens = j.at("tokens").get<std::vector<std::string>>();
    if (j.contains("source_category_path")) {
      q.source_category_path = j.at("source_category_path").get<std::vector<std::string>>();
    }
    corpus.queries.push_back(std::move(q));
  }
  std::sort(corpus.queries.begin(), corpus.queries.end(),
            [](const auto& a, const auto& b) { return a.query_id < b.query_id; });

  std::map<int64_t, std::vector<InteractionRecord>> per_user;
  for (const auto& j : read_lines(dir + "/interactions.jsonl")) {
    InteractionRecord rec;
    rec.user_id = j.at("user_id").get<int64_t>();
    rec.item_id = j.at("item_id").get<int64_t>();
    rec.behavior = behavior_from_string(j.at("behavior").get<std::string>());
    rec.timestamp = j.at("timestamp").get<int64_t>();
    rec.label = j.at("label").get<bool>();
    if (j.contains("query_id")) rec.query_id = j.at("query_id").get<int64_t>();
    per_user[rec.user_id].push_back(rec);
  }
  int64_t expected_user = 0;
  for (auto& [uid, recs] : per_user) {
    if (uid != expected_user++) throw ConfigError("user ids must be dense from 0");
    std::stable_sort(recs.begin(), recs.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    UserHistory h;
    h.user_id = uid;
    h.interactions = std::move(recs);
    corpus.histories.push_back(std::move(h));
  }
  corpus.validate();
  return corpus;
}

}  // namespace gensr
