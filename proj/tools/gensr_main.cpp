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

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gensr/pipeline.hpp"

namespace {

// `--key value` / `--key=value` overrides applied on top of the config file
void apply_overrides(gensr::RunConfig& config,
                     const std::vector<std::string>& args) {
  for (size_t i = 0; i < args.size(); ++i) {
    const std::string& tok = args[i];
    if (tok.rfind("--", 0) != 0 || tok.size() <= 2) {
      throw gensr::ConfigError("expected --key value override, got '" + tok + "'");
    }
    std::string key = tok.substr(2);
    std::string value;
    size_t eq = key.find('=');
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= args.size()) {
        throw gensr::ConfigError("missing value for override --" + key);
      }
      value = args[++i];
    }
    gensr::apply_kv(config, key, value);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GenSR: unified generative search and recommendation at desk scale"};
  app.allow_extras();

  std::string command;
  std::string config_file;
  app.add_option("command", command,
                 "gen-data | pretrain-cf | train | eval | analyze <target> | report")
      ->required();
  app.add_option("--config", config_file, "flat key=value config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::fprintf(stderr, "error: %s\n", e.what());
    return gensr::kConfigError;
  }

  try {
    gensr::RunConfig config;
    if (!config_file.empty()) gensr::load_config_file(config, config_file);

    std::vector<std::string> extras = app.remaining();
    std::string analyze_what;
    if (command == "analyze") {
      if (extras.empty() || extras.front().rfind("--", 0) == 0) {
        throw gensr::ConfigError(
            "analyze needs a target: mi | gradients | projection | sandbox");
      }
      analyze_what = extras.front();
      extras.erase(extras.begin());
    }
    apply_overrides(config, extras);

    if (command == "gen-data") {
      gensr::cmd_gen_data(config);
    } else if (command == "pretrain-cf") {
      gensr::cmd_pretrain_cf(config);
    } else if (command == "train") {
      gensr::cmd_train(config);
    } else if (command == "eval") {
      gensr::cmd_eval(config);
    } else if (command == "analyze") {
      gensr::cmd_analyze(config, analyze_what);
    } else if (command == "report") {
      gensr::cmd_report(config);
    } else {
      throw gensr::ConfigError("unknown command '" + command + "'");
    }
  } catch (const gensr::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return gensr::kConfigError;
  } catch (const gensr::PrerequisiteError& e) {
    std::fprintf(stderr, "missing prerequisite: %s\n", e.what());
    return gensr::kMissingPrerequisite;
  } catch (const gensr::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return gensr::kNumericalFailure;
  }
  return gensr::kOk;
}
