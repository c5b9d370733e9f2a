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

#include "gensr/analysis.hpp"
#include "gensr/cf.hpp"
#include "gensr/eval.hpp"

namespace gensr {

// Effective run configuration: defaults, then config-file key=value lines,
// then command-line overrides, in that order.
struct RunConfig {
  std::string out_dir = "out";
  std::string paradigm = "gensr";  // gensr | disc
  std::string mode = "rerank";     // rerank | fullrank
  uint64_t seed = 0;
  int beam = 10;
  int eval_limit = 0;      // cap on eval instances per split; 0 = all
  int gradient_steps = 300;  // tracked steps for `analyze gradients`

  GeneratorConfig gen_data;
  CFTrainConfig cf;
  TrainConfig train;
  MineConfig mine;
  GaussianSandboxConfig sandbox;
};

// Applies one key=value setting; throws ConfigError on unknown key or bad
// value. Keys mirror the config-file format.
void apply_kv(RunConfig& config, const std::string& key,
              const std::string& value);
// Flat UTF-8 key=value lines; '#' comments and blank lines ignored.
void load_config_file(RunConfig& config, const std::string& path);
// Stable listing of every effective key=value pair.
std::map<std::string, std::string> config_as_map(const RunConfig& config);

// FNV-1a 64-bit over file bytes, hex; provenance hashing for manifests.
std::string hash_file(const std::string& path);

// Each command writes its outputs plus <out>/manifest_<command>.json with the
// effective config, input hashes, and output names. All throw the module
// error types, mapped to exit codes by the CLI.
void cmd_gen_data(const RunConfig& config);
void cmd_pretrain_cf(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_eval(const RunConfig& config);
void cmd_analyze(const RunConfig& config, const std::string& what);
void cmd_report(const RunConfig& config);

}  // namespace gensr
