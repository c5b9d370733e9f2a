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

#include "gensr/cf.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

namespace gensr {

int64_t BipartiteGraph::num_edges() const {
  int64_t n = 0;
  for (const auto& nb : user_neighbors) n += static_cast<int64_t>(nb.size());
  return n;
}

BipartiteGraph build_graph(const Corpus& corpus,
                           const std::vector<UserHistory>* histories) {
  BipartiteGraph g;
  g.num_users = corpus.num_users();
  g.num_items = corpus.num_items();
  g.user_neighbors.resize(static_cast<size_t>(g.num_users));
  g.item_neighbors.resize(static_cast<size_t>(g.num_items));
  std::set<std::pair<int64_t, int64_t>> edges;
  const auto& hists = histories ? *histories : corpus.histories;
  for (const auto& h : hists) {
    for (const auto& rec : h.interactions) {
      // search behaviors are excluded from pretraining
      if (rec.behavior != Behavior::kRec || !rec.label) continue;
      edges.emplace(rec.user_id, rec.item_id);
    }
  }
  if (edges.empty()) throw ConfigError("build_graph: no recommendation clicks");
  for (const auto& [u, i] : edges) {
    g.user_neighbors[static_cast<size_t>(u)].push_back(i);
    g.item_neighbors[static_cast<size_t>(i)].push_back(u);
  }
  return g;
}

LayeredEmbeddings propagate(const BipartiteGraph& graph, const Mat& users0,
                            const Mat& items0, int layers) {
  if (layers < 0) throw ConfigError("propagate: layers must be >= 0");
  LayeredEmbeddings acc{users0, items0};
  Mat cu = users0, ci = items0;
  for (int l = 0; l < layers; ++l) {
    Mat nu = Mat::Zero(cu.rows(), cu.cols());
    Mat ni = Mat::Zero(ci.rows(), ci.cols());
    for (int64_t u = 0; u < graph.num_users; ++u) {
      double du = static_cast<double>(graph.degree_user(u));
      if (du == 0) continue;
      for (int64_t i : graph.user_neighbors[static_cast<size_t>(u)]) {
        double w = 1.0 / std::sqrt(du * static_cast<double>(graph.degree_item(i)));
        nu.row(u) += w * ci.row(i);
        ni.row(i) += w * cu.row(u);
      }
    }
    cu = std::move(nu);
    ci = std::move(ni);
    acc.users += cu;
    acc.items += ci;
  }
  double inv = 1.0 / static_cast<double>(layers + 1);
  acc.users *= inv;
  acc.items *= inv;
  return acc;
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double bpr_loss(const BipartiteGraph& graph, const Mat& users0, const Mat& items0,
                int layers, int64_t u, int64_t i_pos, int64_t i_neg) {
  auto prop = propagate(graph, users0, items0, layers);
  double margin = prop.users.row(u).dot(prop.items.row(i_pos)) -
                  prop.users.row(u).dot(prop.items.row(i_neg));
  // -ln sigma(margin), stable form
  return margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

double bpr_step(const BipartiteGraph& graph, Mat& users0, Mat& items0, int layers,
                int64_t u, int64_t i_pos, int64_t i_neg, double lr) {
  auto prop = propagate(graph, users0, items0, layers);
  double margin = prop.users.row(u).dot(prop.items.row(i_pos)) -
                  prop.users.row(u).dot(prop.items.row(i_neg));
  double loss = margin > 0 ? std::log1p(std::exp(-margin))
                           : -margin + std::log1p(std::exp(margin));
  double coef = -sigmoid(-margin);  // dLoss/dMargin

  // gradient at the propagated tables (three nonzero rows)
  Mat gu = Mat::Zero(users0.rows(), users0.cols());
  Mat gi = Mat::Zero(items0.rows(), items0.cols());
  gu.row(u) = coef * (prop.items.row(i_pos) - prop.items.row(i_neg));
  gi.row(i_pos) = coef * prop.users.row(u);
  gi.row(i_neg) = -coef * prop.users.row(u);

  // the propagation operator is symmetric, so it is its own adjoint
  auto g0 = propagate(graph, gu, gi, layers);
  users0 -= lr * g0.users;
  items0 -= lr * g0.items;
  return loss;
}

CFEmbeddingTable train_cf(const Corpus& corpus, const CFTrainConfig& config,
                          const std::vector<UserHistory>* histories) {
  auto graph = build_graph(corpus, histories);
  Rng init_rng(derive_seed(config.seed, "cf_init", 0));
  CFEmbeddingTable table;
  table.d = config.d;
  table.seed = config.seed;
  table.layers = config.layers;
  table.user_embeddings = Mat(corpus.num_users(), config.d);
  table.item_embeddings = Mat(corpus.num_items(), config.d);
  for (int64_t r = 0; r < table.user_embeddings.rows(); ++r)
    for (int c = 0; c < config.d; ++c)
      table.user_embeddings(r, c) = config.init_std * init_rng.next_normal();
  for (int64_t r = 0; r < table.item_embeddings.rows(); ++r)
    for (int c = 0; c < config.d; ++c)
      table.item_embeddings(r, c) = config.init_std * init_rng.next_normal();

  // flattened positive list for uniform triple sampling
  std::vector<std::pair<int64_t, int64_t>> positives;
  for (int64_t u = 0; u < graph.num_users; ++u)
    for (int64_t i : graph.user_neighbors[static_cast<size_t>(u)])
      positives.emplace_back(u, i);

  Rng rng(derive_seed(config.seed, "cf_train", 0));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (size_t s = 0; s < positives.size(); ++s) {
      auto [u, i_pos] = positives[rng.next_below(positives.size())];
      int64_t i_neg;
      const auto& nb = graph.user_neighbors[static_cast<size_t>(u)];
      do {
        i_neg = static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(graph.num_items)));
      } while (std::find(nb.begin(), nb.end(), i_neg) != nb.end());
      bpr_step(graph, table.user_embeddings, table.item_embeddings, config.layers,
               u, i_pos, i_neg, config.lr);
    }
    if (!table.user_embeddings.allFinite() || !table.item_embeddings.allFinite()) {
      throw NumericalError("cf pretraining diverged at epoch " + std::to_string(epoch));
    }
  }

  // Downstream modules consume the propagated table.
  auto prop = propagate(graph, table.user_embeddings, table.item_embeddings,
                        config.layers);
  table.user_embeddings = prop.users;
  table.item_embeddings = prop.items;
  return table;
}

// Checkpoint layout (little-endian):
//   magic "GSRCF1\0\0" | int64 users | int64 items | int32 d | int32 layers
//   | uint64 seed | user matrix row-major doubles | item matrix row-major doubles
void save_cf_checkpoint(const CFEmbeddingTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  const char magic[8] = {'G', 'S', 'R', 'C', 'F', '1', 0, 0};
  out.write(magic, 8);
  int64_t nu = table.user_embeddings.rows(), ni = table.item_embeddings.rows();
  int32_t d = table.d, layers = table.layers;
  uint64_t seed = table.seed;
  out.write(reinterpret_cast<const char*>(&nu), 8);
  out.write(reinterpret_cast<const char*>(&ni), 8);
  out.write(reinterpret_cast<const char*>(&d), 4);
  out.write(reinterpret_cast<const char*>(&layers), 4);
  out.write(reinterpret_cast<const char*>(&seed), 8);
  auto write_mat = [&](const Mat& m) {
    for (int64_t r = 0; r < m.rows(); ++r)
      for (int64_t c = 0; c < m.cols(); ++c) {
        double v = m(r, c);
        out.write(reinterpret_cast<const char*>(&v), 8);
      }
  };
  write_mat(table.user_embeddings);
  write_mat(table.item_embeddings);
}

CFEmbeddingTable load_cf_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PrerequisiteError("missing cf checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "GSRCF1\0\0", 8) != 0) {
    throw ConfigError("bad cf checkpoint magic in " + path);
  }
  int64_t nu, ni;
  int32_t d, layers;
  uint64_t seed;
  in.read(reinterpret_cast<char*>(&nu), 8);
  in.read(reinterpret_cast<char*>(&ni), 8);
  in.read(reinterpret_cast<char*>(&d), 4);
  in.read(reinterpret_cast<char*>(&layers), 4);
  in.read(reinterpret_cast<char*>(&seed), 8);
  CFEmbeddingTable table;
  table.d = d;
  table.layers = layers;
  table.seed = seed;
  table.user_embeddings = Mat(nu, d);
  table.item_embeddings = Mat(ni, d);
  auto read_mat = [&](Mat& m) {
    for (int64_t r = 0; r < m.rows(); ++r)
      for (int64_t c = 0; c < m.cols(); ++c) {
        double v;
        in.read(reinterpret_cast<char*>(&v), 8);
        m(r, c) = v;
      }
  };
  read_mat(table.user_embeddings);
  read_mat(table.item_embeddings);
  if (!in) throw ConfigError("truncated cf checkpoint: " + path);
  return table;
}

}  // namespace gensr
