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

#include "gensr/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gensr {

namespace fs = std::filesystem;
using nlohmann::json;

// -- configuration ----------------------------------------------------------

namespace {

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": " + v);
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: bad boolean for " + key + ": " + v);
}

}  // namespace

void apply_kv(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "out") {
    c.out_dir = value;
  } else if (key == "paradigm") {
    if (value != "gensr" && value != "disc") {
      throw ConfigError("config: paradigm must be gensr or disc");
    }
    c.paradigm = value;
  } else if (key == "mode") {
    if (value != "rerank" && value != "fullrank") {
      throw ConfigError("config: mode must be rerank or fullrank");
    }
    c.mode = value;
  } else if (key == "seed") {
    c.seed = static_cast<uint64_t>(std::stoull(value));
  } else if (key == "beam") {
    c.beam = to_int(key, value);
  } else if (key == "eval_limit") {
    c.eval_limit = to_int(key, value);
  } else if (key == "gradient_steps") {
    c.gradient_steps = to_int(key, value);
  } else if (key == "users") {
    c.gen_data.users = to_int(key, value);
  } else if (key == "items") {
    c.gen_data.items = to_int(key, value);
  } else if (key == "mean_interactions") {
    c.gen_data.mean_interactions = to_int(key, value);
  } else if (key == "search_ratio") {
    c.gen_data.search_ratio = to_double(key, value);
  } else if (key == "category_depth") {
    c.gen_data.category_depth = to_int(key, value);
  } else if (key == "category_branching") {
    c.gen_data.category_branching = to_int(key, value);
  } else if (key == "factor_dim") {
    c.gen_data.factor_dim = to_int(key, value);
  } else if (key == "affinity_scale") {
    c.gen_data.affinity_scale = to_double(key, value);
  } else if (key == "cf_d") {
    c.cf.d = to_int(key, value);
    c.train.dual.d_cf = c.cf.d;
  } else if (key == "cf_layers") {
    c.cf.layers = to_int(key, value);
  } else if (key == "cf_epochs") {
    c.cf.epochs = to_int(key, value);
  } else if (key == "cf_lr") {
    c.cf.lr = to_double(key, value);
  } else if (key == "tau") {
    c.train.tau = to_double(key, value);
  } else if (key == "beta") {
    c.train.beta = to_double(key, value);
  } else if (key == "gamma") {
    c.train.gamma = to_double(key, value);
  } else if (key == "lr") {
    c.train.lr = to_double(key, value);
  } else if (key == "epochs") {
    c.train.epochs = to_int(key, value);
  } else if (key == "batch_size") {
    c.train.batch_size = to_int(key, value);
  } else if (key == "max_steps") {
    c.train.max_steps = to_int(key, value);
  } else if (key == "track_gradients") {
    c.train.track_gradients = to_bool(key, value);
  } else if (key == "d_model") {
    c.train.dual.d_model = to_int(key, value);
    c.train.gen.d_model = c.train.dual.d_model;
  } else if (key == "heads") {
    c.train.dual.heads = to_int(key, value);
    c.train.gen.heads = c.train.dual.heads;
  } else if (key == "enc_layers") {
    c.train.gen.enc_layers = to_int(key, value);
  } else if (key == "dec_layers") {
    c.train.gen.dec_layers = to_int(key, value);
  } else if (key == "ffn_inner") {
    c.train.gen.ffn_inner = to_int(key, value);
  } else if (key == "max_positions") {
    c.train.gen.max_positions = to_int(key, value);
  } else if (key == "mine_steps") {
    c.mine.steps = to_int(key, value);
  } else if (key == "mine_batch") {
    c.mine.batch = to_int(key, value);
  } else if (key == "mine_hidden") {
    c.mine.hidden = to_int(key, value);
  } else if (key == "mine_lr") {
    c.mine.lr = to_double(key, value);
  } else if (key == "sandbox_n") {
    c.sandbox.n = to_int(key, value);
  } else if (key == "sandbox_d") {
    c.sandbox.d = to_int(key, value);
  } else if (key == "sandbox_trials") {
    c.sandbox.trials = to_int(key, value);
  } else if (key == "sandbox_w_norm") {
    c.sandbox.w_norm = to_double(key, value);
  } else if (key == "sandbox_literal") {
    c.sandbox.literal_mi = to_bool(key, value);
  } else {
    throw ConfigError("config: unknown key " + key);
  }
}

void load_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " is not key=value");
    }
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t");
      auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    apply_kv(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::map<std::string, std::string> config_as_map(const RunConfig& c) {
  auto d2s = [](double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
  };
  // `out` is the run location, not part of the experiment; leaving it out
  // keeps manifests byte-identical across relocated but otherwise equal runs
  return {
      {"paradigm", c.paradigm},
      {"mode", c.mode},
      {"seed", std::to_string(c.seed)},
      {"beam", std::to_string(c.beam)},
      {"eval_limit", std::to_string(c.eval_limit)},
      {"gradient_steps", std::to_string(c.gradient_steps)},
      {"users", std::to_string(c.gen_data.users)},
      {"items", std::to_string(c.gen_data.items)},
      {"mean_interactions", std::to_string(c.gen_data.mean_interactions)},
      {"search_ratio", d2s(c.gen_data.search_ratio)},
      {"category_depth", std::to_string(c.gen_data.category_depth)},
      {"category_branching", std::to_string(c.gen_data.category_branching)},
      {"factor_dim", std::to_string(c.gen_data.factor_dim)},
      {"affinity_scale", d2s(c.gen_data.affinity_scale)},
      {"cf_d", std::to_string(c.cf.d)},
      {"cf_layers", std::to_string(c.cf.layers)},
      {"cf_epochs", std::to_string(c.cf.epochs)},
      {"cf_lr", d2s(c.cf.lr)},
      {"tau", d2s(c.train.tau)},
      {"beta", d2s(c.train.beta)},
      {"gamma", d2s(c.train.gamma)},
      {"lr", d2s(c.train.lr)},
      {"epochs", std::to_string(c.train.epochs)},
      {"batch_size", std::to_string(c.train.batch_size)},
      {"max_steps", std::to_string(c.train.max_steps)},
      {"track_gradients", c.train.track_gradients ? "true" : "false"},
      {"d_model", std::to_string(c.train.dual.d_model)},
      {"heads", std::to_string(c.train.dual.heads)},
      {"enc_layers", std::to_string(c.train.gen.enc_layers)},
      {"dec_layers", std::to_string(c.train.gen.dec_layers)},
      {"ffn_inner", std::to_string(c.train.gen.ffn_inner)},
      {"max_positions", std::to_string(c.train.gen.max_positions)},
      {"mine_steps", std::to_string(c.mine.steps)},
      {"mine_batch", std::to_string(c.mine.batch)},
      {"mine_hidden", std::to_string(c.mine.hidden)},
      {"mine_lr", d2s(c.mine.lr)},
      {"sandbox_n", std::to_string(c.sandbox.n)},
      {"sandbox_d", std::to_string(c.sandbox.d)},
      {"sandbox_trials", std::to_string(c.sandbox.trials)},
      {"sandbox_w_norm", d2s(c.sandbox.w_norm)},
      {"sandbox_literal", c.sandbox.literal_mi ? "true" : "false"},
  };
}

// -- provenance -------------------------------------------------------------

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PrerequisiteError("missing artifact: " + path);
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

namespace {

void write_manifest(const RunConfig& config, const std::string& command,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["config"] = config_as_map(config);
  json in = json::object();
  for (const auto& p : inputs) {
    // keys relative to the run directory, for location-independent manifests
    in[fs::path(p).lexically_proximate(config.out_dir).generic_string()] =
        hash_file(p);
  }
  m["inputs"] = in;
  m["outputs"] = outputs;
  m["version"] = 1;
  std::ofstream out(config.out_dir + "/manifest_" + command + ".json",
                    std::ios::binary);
  out << m.dump(2) << "\n";
}

std::string data_dir(const RunConfig& c) { return c.out_dir + "/data"; }
std::string cf_path(const RunConfig& c) { return c.out_dir + "/cf.bin"; }
std::string model_path(const RunConfig& c, const std::string& paradigm) {
  return c.out_dir + "/model_" + paradigm + ".bin";
}
std::string trace_path(const RunConfig& c, const std::string& paradigm) {
  return c.out_dir + "/trace_" + paradigm + ".csv";
}

Corpus require_corpus(const RunConfig& c) {
  if (!fs::exists(data_dir(c) + "/items.jsonl")) {
    throw PrerequisiteError("missing corpus at " + data_dir(c) +
                            " (run gen-data first)");
  }
  return load_corpus(data_dir(c));
}

CFEmbeddingTable require_cf(const RunConfig& c) {
  if (!fs::exists(cf_path(c))) {
    throw PrerequisiteError("missing CF checkpoint " + cf_path(c) +
                            " (run pretrain-cf first)");
  }
  return load_cf_checkpoint(cf_path(c));
}

ModelCheckpoint require_model(const RunConfig& c, const std::string& paradigm) {
  std::string path = model_path(c, paradigm);
  if (!fs::exists(path)) {
    throw PrerequisiteError("missing model checkpoint " + path +
                            " (run train --paradigm " + paradigm + " first)");
  }
  return load_model_checkpoint(path);
}

std::vector<EvalInstance> limited(std::vector<EvalInstance> v, int limit) {
  if (limit > 0 && static_cast<int>(v.size()) > limit) {
    v.resize(static_cast<size_t>(limit));
  }
  return v;
}

}  // namespace

// -- commands ---------------------------------------------------------------

void cmd_gen_data(const RunConfig& config) {
  GeneratorConfig g = config.gen_data;
  g.seed = config.seed;
  Corpus corpus = generate_synthetic_corpus(g);
  fs::create_directories(data_dir(config));
  save_corpus(corpus, data_dir(config));

  CorpusStats stats = compute_stats(corpus);
  json s;
  s["users"] = stats.users;
  s["items"] = stats.items;
  s["queries"] = stats.queries;
  s["inter_search"] = stats.inter_search;
  s["inter_rec"] = stats.inter_rec;
  std::ofstream(data_dir(config) + "/stats.json", std::ios::binary)
      << s.dump(2) << "\n";

  write_manifest(config, "gen-data", {},
                 {"data/items.jsonl", "data/queries.jsonl",
                  "data/interactions.jsonl", "data/stats.json"});
}

void cmd_pretrain_cf(const RunConfig& config) {
  Corpus corpus = require_corpus(config);
  DatasetSplit split = split_leave_one_out(corpus, config.seed);
  CFTrainConfig cc = config.cf;
  cc.seed = config.seed;
  CFEmbeddingTable table = train_cf(corpus, cc, &split.train_histories);
  fs::create_directories(config.out_dir);
  save_cf_checkpoint(table, cf_path(config));
  write_manifest(config, "pretrain-cf",
                 {data_dir(config) + "/interactions.jsonl"}, {"cf.bin"});
}

void cmd_train(const RunConfig& config) {
  Corpus corpus = require_corpus(config);
  CFEmbeddingTable cf = require_cf(config);
  DatasetSplit split = split_leave_one_out(corpus, config.seed);
  TrainConfig tc = config.train;
  tc.seed = config.seed;
  tc.dual.d_cf = cf.d;

  TrainStats stats;
  ModelCheckpoint ckpt;
  if (config.paradigm == "gensr") {
    auto out = train_gensr(corpus, split, cf, tc);
    if (out.stats.aborted) {
      throw NumericalError("train: non-finite loss, aborted at last checkpoint");
    }
    stats = std::move(out.stats);
    ckpt = out.model.to_checkpoint({{"seed", std::to_string(config.seed)}});
  } else {
    auto out = train_discriminative(corpus, split, cf, tc);
    if (out.stats.aborted) {
      throw NumericalError("train: non-finite loss, aborted at last checkpoint");
    }
    stats = std::move(out.stats);
    ckpt = out.model.to_checkpoint({{"seed", std::to_string(config.seed)}});
  }
  save_model_checkpoint(model_path(config, config.paradigm), ckpt);
  write_trace_csv(trace_path(config, config.paradigm), stats, config.paradigm);
  write_manifest(config, "train", {cf_path(config)},
                 {"model_" + config.paradigm + ".bin",
                  "trace_" + config.paradigm + ".csv"});
}

void cmd_eval(const RunConfig& config) {
  Corpus corpus = require_corpus(config);
  CFEmbeddingTable cf = require_cf(config);
  ModelCheckpoint ckpt = require_model(config, config.paradigm);
  DatasetSplit split = split_leave_one_out(corpus, config.seed);
  std::vector<EvalInstance> instances = limited(split.test, config.eval_limit);

  MetricsReport report;
  if (config.paradigm == "gensr") {
    GenSRModel model =
        GenSRModel::from_checkpoint(ckpt, cf, PromptLibrary::builtin());
    if (config.mode == "rerank") {
      report = evaluate_reranking(
          instances, [&](const EvalInstance& inst, int64_t cand) {
            return model.score(corpus, inst, cand);
          });
    } else {
      report = evaluate_fullranking(
          instances,
          [&](const EvalInstance& inst, int beam) {
            return model.full_rank(corpus, inst, beam);
          },
          config.beam);
    }
  } else {
    if (config.mode != "rerank") {
      throw ConfigError("eval: fullrank mode requires the generative paradigm");
    }
    DiscModel model = DiscModel::from_checkpoint(ckpt, cf);
    report = evaluate_reranking(instances,
                                [&](const EvalInstance& inst, int64_t cand) {
                                  return model.score(corpus, inst, cand);
                                });
  }
  report.paradigm = config.paradigm;
  std::string name = "metrics_" + config.paradigm + "_" + config.mode + ".json";
  save_metrics_json(config.out_dir + "/" + name, report);
  write_manifest(config, "eval", {model_path(config, config.paradigm)}, {name});
}

void cmd_analyze(const RunConfig& config, const std::string& what) {
  if (what == "sandbox") {
    GaussianSandboxConfig sc = config.sandbox;
    sc.seed = config.seed;
    SandboxReport report = run_separability_experiment(sc);
    fs::create_directories(config.out_dir);
    write_sandbox_json(config.out_dir + "/sandbox_report.json", report, sc,
                       {{"mi_mode", sc.literal_mi ? "literal" : "analytic"},
                        {"seed", std::to_string(config.seed)}});
    write_manifest(config, "analyze-sandbox", {}, {"sandbox_report.json"});
    return;
  }

  Corpus corpus = require_corpus(config);
  CFEmbeddingTable cf = require_cf(config);
  DatasetSplit split = split_leave_one_out(corpus, config.seed);

  if (what == "mi") {
    ModelCheckpoint gc = require_model(config, "gensr");
    ModelCheckpoint dc = require_model(config, "disc");
    GenSRModel gen = GenSRModel::from_checkpoint(gc, cf, PromptLibrary::builtin());
    DiscModel disc = DiscModel::from_checkpoint(dc, cf);
    MineConfig mc = config.mine;
    // MI estimation pool: training instances (the estimate targets the
    // training distribution); count gate applies per task
    std::vector<std::pair<std::string, MIEstimate>> entries;
    for (Task task : {Task::kSearch, Task::kRec}) {
      std::string tag = task == Task::kSearch ? "search" : "rec";
      mc.seed = derive_seed(config.seed, "mi_gensr", task == Task::kSearch);
      entries.emplace_back(
          "gensr_" + tag,
          estimate_model_mi(
              [&](const EvalInstance& inst, int64_t cand) {
                return gen.analyze_forward(corpus, inst, cand);
              },
              split.train, task, mc));
      mc.seed = derive_seed(config.seed, "mi_disc", task == Task::kSearch);
      entries.emplace_back(
          "disc_" + tag,
          estimate_model_mi(
              [&](const EvalInstance& inst, int64_t cand) {
                return disc.analyze_forward(corpus, inst, cand);
              },
              split.train, task, mc));
    }
    write_mi_json(config.out_dir + "/mi_report.json", entries,
                  {{"gensr_checkpoint", hash_file(model_path(config, "gensr"))},
                   {"disc_checkpoint", hash_file(model_path(config, "disc"))},
                   {"seed", std::to_string(config.seed)}});
    write_manifest(config, "analyze-mi",
                   {model_path(config, "gensr"), model_path(config, "disc")},
                   {"mi_report.json"});
    return;
  }

  if (what == "gradients") {
    // conflict measurement re-runs both trainers from their seeded inits with
    // per-step probe-layer cosines on the shared example stream
    (void)require_model(config, "gensr");
    (void)require_model(config, "disc");
    TrainConfig tc = config.train;
    tc.seed = config.seed;
    tc.dual.d_cf = cf.d;
    tc.track_gradients = true;
    tc.max_steps = config.gradient_steps;
    tc.epochs = 1 << 20;  // step cap governs
    auto g = train_gensr(corpus, split, cf, tc);
    auto d = train_discriminative(corpus, split, cf, tc);
    GradientTrace gt = trace_from_stats(g.stats, "gensr");
    GradientTrace dt = trace_from_stats(d.stats, "disc");
    auto fmt = [](double v) {
      std::ostringstream ss;
      ss << std::setprecision(17) << v;
      return ss.str();
    };
    write_gradient_trace_csv(
        config.out_dir + "/gradient_trace.csv", {gt, dt},
        {{"disc_mean", fmt(mean_defined(dt.cosines))},
         {"gensr_mean", fmt(mean_defined(gt.cosines))},
         {"probe_disc", kDiscProbePrefix},
         {"probe_gensr", kGenSRProbePrefix},
         {"seed", std::to_string(config.seed)},
         {"steps", std::to_string(config.gradient_steps)}});
    write_manifest(config, "analyze-gradients",
                   {model_path(config, "gensr"), model_path(config, "disc")},
                   {"gradient_trace.csv"});
    return;
  }

  if (what == "projection") {
    ModelCheckpoint ckpt = require_model(config, config.paradigm);
    std::vector<std::pair<std::string, PcaResult>> per_task;
    std::function<std::pair<Eigen::RowVectorXd, double>(const EvalInstance&)> fwd;
    GenSRModel gen;
    DiscModel disc;
    if (config.paradigm == "gensr") {
      gen = GenSRModel::from_checkpoint(ckpt, cf, PromptLibrary::builtin());
      fwd = [&](const EvalInstance& inst) {
        return gen.analyze_forward(corpus, inst, inst.target_item);
      };
    } else {
      disc = DiscModel::from_checkpoint(ckpt, cf);
      fwd = [&](const EvalInstance& inst) {
        return disc.analyze_forward(corpus, inst, inst.target_item);
      };
    }
    Mat all_points;
    for (Task task : {Task::kSearch, Task::kRec}) {
      std::vector<const EvalInstance*> of_task;
      for (const auto& inst : split.test) {
        if (inst.task == task) of_task.push_back(&inst);
      }
      Mat x;
      for (size_t i = 0; i < of_task.size(); ++i) {
        auto [rep, prob] = fwd(*of_task[i]);
        if (x.size() == 0) {
          x.resize(static_cast<Eigen::Index>(of_task.size()), rep.size());
        }
        x.row(static_cast<Eigen::Index>(i)) = rep;
      }
      PcaResult pca = pca_project(x);
      Eigen::Index base = all_points.rows();
      all_points.conservativeResize(base + pca.points.rows(), 2);
      all_points.bottomRows(pca.points.rows()) = pca.points;
      per_task.emplace_back(task == Task::kSearch ? "search" : "rec",
                            std::move(pca));
    }
    std::map<std::string, std::string> header = {
        {"checkpoint", hash_file(model_path(config, config.paradigm))},
        {"paradigm", config.paradigm},
        {"projection", "pca"},  // deterministic substitute for t-SNE
        {"seed", std::to_string(config.seed)}};
    write_projection_csv(config.out_dir + "/projection_points.csv", per_task,
                         header);
    double spread = std::sqrt(
        (all_points.rowwise() - all_points.colwise().mean()).squaredNorm() /
        static_cast<double>(all_points.rows()));
    double bandwidth = std::max(1e-6, 0.3 * spread);
    KdeGrid grid = kde_density(all_points, bandwidth, 64);
    write_kde_csv(config.out_dir + "/kde_grid.csv", grid, header);
    write_manifest(config, "analyze-projection",
                   {model_path(config, config.paradigm)},
                   {"projection_points.csv", "kde_grid.csv"});
    return;
  }

  throw ConfigError("analyze: unknown target '" + what +
                    "' (expected mi|gradients|projection|sandbox)");
}

void cmd_report(const RunConfig& config) {
  std::ostringstream md;
  md << "# GenSR run report\n\n";
  bool any = false;
  for (const std::string name :
       {"metrics_gensr_rerank.json", "metrics_gensr_fullrank.json",
        "metrics_disc_rerank.json", "mi_report.json", "sandbox_report.json"}) {
    std::string path = config.out_dir + "/" + name;
    if (!fs::exists(path)) continue;
    any = true;
    std::ifstream in(path, std::ios::binary);
    std::stringstream body;
    body << in.rdbuf();
    md << "## " << name << "\n\n```json\n" << body.str() << "```\n\n";
  }
  for (const std::string name : {"trace_gensr.csv", "trace_disc.csv",
                                 "gradient_trace.csv"}) {
    std::string path = config.out_dir + "/" + name;
    if (!fs::exists(path)) continue;
    any = true;
    std::ifstream in(path);
    std::string line;
    md << "## " << name << " (head)\n\n```\n";
    for (int i = 0; i < 5 && std::getline(in, line); ++i) md << line << "\n";
    md << "```\n\n";
  }
  if (!any) {
    throw PrerequisiteError("report: no evaluation or analysis outputs in " +
                            config.out_dir);
  }
  std::ofstream(config.out_dir + "/report.md", std::ios::binary) << md.str();
  write_manifest(config, "report", {}, {"report.md"});
}

}  // namespace gensr
