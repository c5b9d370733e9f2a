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

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gensr/corpus.hpp"

namespace gensr {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Undirected user-item graph over deduplicated rec-behavior clicks.
struct BipartiteGraph {
  int64_t num_users = 0;
  int64_t num_items = 0;
  // adjacency as index lists; users and items are separate partitions
  std::vector<std::vector<int64_t>> user_neighbors;  // user -> items
  std::vector<std::vector<int64_t>> item_neighbors;  // item -> users

  int64_t degree_user(int64_t u) const { return static_cast<int64_t>(user_neighbors[u].size()); }
  int64_t degree_item(int64_t i) const { return static_cast<int64_t>(item_neighbors[i].size()); }
  int64_t num_edges() const;
};

struct CFEmbeddingTable {
  Mat user_embeddings;  // |U| x d
  Mat item_embeddings;  // |I| x d
  int d = 0;
  uint64_t seed = 0;
  int layers = 0;
};

struct CFTrainConfig {
  int d = 32;
  int layers = 2;
  int epochs = 100;
  double lr = 0.05;
  double init_std = 0.1;
  uint64_t seed = 0;
};

BipartiteGraph build_graph(const Corpus& corpus,
                           const std::vector<UserHistory>* histories = nullptr);

// Symmetric-normalized propagation; returns the mean over layers 0..L of the
// propagated embeddings for both partitions.
struct LayeredEmbeddings {
  Mat users;
  Mat items;
};
LayeredEmbeddings propagate(const BipartiteGraph& graph, const Mat& users0,
                            const Mat& items0, int layers);

// Pairwise ranking loss -ln sigma(s_pos - s_neg) with scores taken as inner
// products of the propagated embeddings. The propagation operator is
// symmetric, so the exact layer-0 gradient is the propagation applied to the
// (sparse) gradient at the propagated tables.
double bpr_loss(const BipartiteGraph& graph, const Mat& users0, const Mat& items0,
                int layers, int64_t u, int64_t i_pos, int64_t i_neg);
// One exact gradient step on the layer-0 tables; returns the loss before the step.
double bpr_step(const BipartiteGraph& graph, Mat& users0, Mat& items0, int layers,
                int64_t u, int64_t i_pos, int64_t i_neg, double lr);

CFEmbeddingTable train_cf(const Corpus& corpus, const CFTrainConfig& config,
                          const std::vector<UserHistory>* histories = nullptr);

void save_cf_checkpoint(const CFEmbeddingTable& table, const std::string& path);
CFEmbeddingTable load_cf_checkpoint(const std::string& path);

}  // namespace gensr
