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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gensr/pipeline.hpp"

using namespace gensr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("gensr_cli_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// small end-to-end scale shared by the command tests
RunConfig tiny_config(const std::string& out) {
  RunConfig c;
  c.out_dir = out;
  c.seed = 7;
  c.gen_data.users = 12;
  c.gen_data.items = 120;
  c.gen_data.mean_interactions = 8;
  c.cf.epochs = 3;
  c.cf.d = 16;
  apply_kv(c, "d_model", "32");
  c.train.gen.ffn_inner = 64;
  c.train.gen.enc_layers = 1;
  c.train.gen.dec_layers = 1;
  c.train.dual.d_cf = 16;
  c.train.max_steps = 3;
  c.eval_limit = 4;
  return c;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(GENSR_BINARY_PATH) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("apply_kv: typed parsing and rejection of bad input") {
  RunConfig c;
  apply_kv(c, "tau", "0.25");
  CHECK(c.train.tau == 0.25);
  apply_kv(c, "users", "34");
  CHECK(c.gen_data.users == 34);
  apply_kv(c, "track_gradients", "true");
  CHECK(c.train.track_gradients);
  apply_kv(c, "paradigm", "disc");
  CHECK(c.paradigm == "disc");
  apply_kv(c, "d_model", "48");
  CHECK(c.train.dual.d_model == 48);
  CHECK(c.train.gen.d_model == 48);  // widths stay tied

  CHECK_THROWS_AS(apply_kv(c, "no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(apply_kv(c, "epochs", "three"), ConfigError);
  CHECK_THROWS_AS(apply_kv(c, "tau", "0.1x"), ConfigError);
  CHECK_THROWS_AS(apply_kv(c, "paradigm", "hybrid"), ConfigError);
  CHECK_THROWS_AS(apply_kv(c, "mode", "listwise"), ConfigError);
  CHECK_THROWS_AS(apply_kv(c, "sandbox_literal", "maybe"), ConfigError);
}

TEST_CASE("config file: comments, whitespace, unknown keys, round-trip") {
  TempDir tmp("cfg");
  std::string path = tmp.str() + "/run.cfg";
  std::ofstream(path) << "# comment\n"
                      << "  tau = 0.5  \n"
                      << "epochs=4   # trailing comment\n"
                      << "\n"
                      << "paradigm = disc\n";
  RunConfig c;
  load_config_file(c, path);
  CHECK(c.train.tau == 0.5);
  CHECK(c.train.epochs == 4);
  CHECK(c.paradigm == "disc");

  std::ofstream(path) << "tau 0.5\n";
  RunConfig c2;
  CHECK_THROWS_AS(load_config_file(c2, path), ConfigError);
  CHECK_THROWS_AS(load_config_file(c2, tmp.str() + "/nope.cfg"), ConfigError);

  // every exported key is itself applicable (config echo round-trip)
  RunConfig c3;
  for (const auto& [k, v] : config_as_map(c)) apply_kv(c3, k, v);
  CHECK(config_as_map(c3) == config_as_map(c));
}

TEST_CASE("hash_file: content-addressed and stable") {
  TempDir tmp("hash");
  std::ofstream(tmp.str() + "/a") << "hello";
  std::ofstream(tmp.str() + "/b") << "hello";
  std::ofstream(tmp.str() + "/c") << "world";
  CHECK(hash_file(tmp.str() + "/a") == hash_file(tmp.str() + "/b"));
  CHECK(hash_file(tmp.str() + "/a") != hash_file(tmp.str() + "/c"));
  CHECK(hash_file(tmp.str() + "/a").size() == 16);
  CHECK_THROWS_AS((void)hash_file(tmp.str() + "/missing"), PrerequisiteError);
}

TEST_CASE("gen-data: outputs, stats cross-check, byte-identical rerun") {
  TempDir tmp("gendata");
  RunConfig c = tiny_config(tmp.str() + "/out");
  cmd_gen_data(c);
  for (const std::string f : {"items.jsonl", "queries.jsonl",
                              "interactions.jsonl", "stats.json"}) {
    CHECK(fs::exists(c.out_dir + "/data/" + f));
  }
  CHECK(fs::exists(c.out_dir + "/manifest_gen-data.json"));

  // stats.json agrees with compute_stats over the reloaded corpus
  Corpus corpus = load_corpus(c.out_dir + "/data");
  CorpusStats stats = compute_stats(corpus);
  std::string sj = slurp(c.out_dir + "/data/stats.json");
  CHECK(sj.find("\"users\": " + std::to_string(stats.users)) != std::string::npos);
  CHECK(sj.find("\"items\": " + std::to_string(stats.items)) != std::string::npos);
  CHECK(sj.find("\"inter_search\": " + std::to_string(stats.inter_search)) !=
        std::string::npos);

  std::string items_a = slurp(c.out_dir + "/data/items.jsonl");
  std::string inter_a = slurp(c.out_dir + "/data/interactions.jsonl");
  cmd_gen_data(c);
  CHECK(items_a == slurp(c.out_dir + "/data/items.jsonl"));
  CHECK(inter_a == slurp(c.out_dir + "/data/interactions.jsonl"));
}

TEST_CASE("pipeline: prerequisites, training, eval, idempotent outputs") {
  TempDir tmp("pipe");
  RunConfig c = tiny_config(tmp.str() + "/out");

  CHECK_THROWS_AS(cmd_pretrain_cf(c), PrerequisiteError);
  cmd_gen_data(c);
  CHECK_THROWS_AS(cmd_train(c), PrerequisiteError);  // no cf checkpoint
  cmd_pretrain_cf(c);
  CHECK(fs::exists(c.out_dir + "/cf.bin"));

  cmd_train(c);
  CHECK(fs::exists(c.out_dir + "/model_gensr.bin"));
  CHECK(fs::exists(c.out_dir + "/trace_gensr.csv"));

  // manifest records the input hash of the cf checkpoint
  std::string manifest = slurp(c.out_dir + "/manifest_train.json");
  CHECK(manifest.find(hash_file(c.out_dir + "/cf.bin")) != std::string::npos);

  CHECK_THROWS_AS(cmd_analyze(c, "gradients"), PrerequisiteError);  // no disc yet

  RunConfig cd = c;
  cd.paradigm = "disc";
  cmd_train(cd);
  CHECK(fs::exists(c.out_dir + "/model_disc.bin"));

  cmd_eval(c);
  std::string metrics = c.out_dir + "/metrics_gensr_rerank.json";
  REQUIRE(fs::exists(metrics));
  std::string first = slurp(metrics);
  cmd_eval(c);
  CHECK(first == slurp(metrics));  // byte-equal rerun
  CHECK(first.find("\"paradigm\": \"gensr\"") != std::string::npos);

  cmd_eval(cd);
  CHECK(fs::exists(c.out_dir + "/metrics_disc_rerank.json"));
  RunConfig bad = cd;
  bad.mode = "fullrank";
  CHECK_THROWS_AS(cmd_eval(bad), ConfigError);  // disc cannot full-rank

  RunConfig fr = c;
  fr.mode = "fullrank";
  fr.eval_limit = 2;
  cmd_eval(fr);
  CHECK(fs::exists(c.out_dir + "/metrics_gensr_fullrank.json"));

  c.gradient_steps = 3;
  cmd_analyze(c, "gradients");
  std::string trace = slurp(c.out_dir + "/gradient_trace.csv");
  CHECK(trace.find("paradigm,step,cosine") != std::string::npos);
  CHECK(trace.find("gensr,0,") != std::string::npos);
  CHECK(trace.find("disc,0,") != std::string::npos);

  // mi needs >= 500 instances per task; this corpus is far smaller
  CHECK_THROWS_AS(cmd_analyze(c, "mi"), ConfigError);

  cmd_analyze(c, "projection");
  CHECK(fs::exists(c.out_dir + "/projection_points.csv"));
  CHECK(fs::exists(c.out_dir + "/kde_grid.csv"));

  CHECK_THROWS_AS(cmd_analyze(c, "spectra"), ConfigError);

  cmd_report(c);
  std::string report = slurp(c.out_dir + "/report.md");
  CHECK(report.find("metrics_gensr_rerank.json") != std::string::npos);
}

TEST_CASE("analyze sandbox works without any other artifacts") {
  TempDir tmp("sbx");
  RunConfig c;
  c.out_dir = tmp.str() + "/out";
  c.seed = 3;
  c.sandbox.trials = 5;
  c.sandbox.n = 40;
  cmd_analyze(c, "sandbox");
  std::string body = slurp(c.out_dir + "/sandbox_report.json");
  CHECK(body.find("\"frac_mi_gen_ge_disc\"") != std::string::npos);
  CHECK(body.find("\"mi_mode\": \"analytic\"") != std::string::npos);
}

TEST_CASE("report with empty output directory is a prerequisite error") {
  TempDir tmp("rep");
  RunConfig c;
  c.out_dir = tmp.str() + "/out";
  fs::create_directories(c.out_dir);
  CHECK_THROWS_AS(cmd_report(c), PrerequisiteError);
}

TEST_CASE("binary: exit codes and config-file/override precedence") {
  TempDir tmp("bin");
  std::string out = tmp.str() + "/out";

  CHECK(run_cli("bogus") == 2);
  CHECK(run_cli("eval --out " + out) == 3);
  CHECK(run_cli("gen-data --out " + out + " --users twelve") == 2);
  CHECK(run_cli("analyze") == 2);

  std::string cfg = tmp.str() + "/run.cfg";
  std::ofstream(cfg) << "users = 12\nitems = 120\nmean_interactions = 8\nseed = 5\n";
  CHECK(run_cli("gen-data --config " + cfg + " --out " + out) == 0);
  CHECK(fs::exists(out + "/data/items.jsonl"));

  // CLI override beats the config file: bogus user count in the file is
  // replaced by a valid override
  std::ofstream(cfg) << "users = 2\nitems = 120\nmean_interactions = 8\n";
  CHECK(run_cli("gen-data --config " + cfg + " --out " + out + " --users 12") == 0);
  std::string manifest = slurp(out + "/manifest_gen-data.json");
  CHECK(manifest.find("\"users\": \"12\"") != std::string::npos);

  CHECK(run_cli("analyze sandbox --out " + out +
                " --sandbox_trials 4 --sandbox_n 40 --seed 1") == 0);
  CHECK(fs::exists(out + "/sandbox_report.json"));
}
