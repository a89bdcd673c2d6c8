// Copyright 2026 The duality-nets Authors.
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

// duality-nets: run one experiment and write its artifacts.
//
//   duality-nets <experiment> [--config path.json] [--out dir] [--seed N]
//                [--threads N]
//
// Exit status is 0 when every assertion passes, 1 when one fails and 2 on
// any error.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "duality_nets/c_api.h"

namespace {

constexpr int kAssertionFailed = 1;
constexpr int kError = 2;

bool ReadFile(const std::string& path, std::string& out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return false;
  std::ostringstream s;
  s << f.rdbuf();
  out = s.str();
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> names;
  for (size_t i = 0; i < dn_experiment_count(); ++i) names.emplace_back(dn_experiment_name(i));

  CLI::App app{"Closed-form optima and duality certificates for regularized networks"};
  app.set_version_flag("--version", dn_version());
  std::string experiment, config_path, out_dir = ".";
  std::optional<uint64_t> seed;
  int threads = 0;
  app.add_option("experiment", experiment, "Experiment to run")
      ->required()
      ->check(CLI::IsMember(names));
  app.add_option("--config", config_path, "JSON configuration overlaid on the defaults")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Directory for results.csv, report.json and plot.svg");
  app.add_option("--seed", seed, "Seed for data, initialization and sampling");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 1024));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kError;
  }

  std::string config;
  if (!config_path.empty() && !ReadFile(config_path, config)) {
    std::fprintf(stderr, "error: cannot read %s\n", config_path.c_str());
    return kError;
  }
  int all_pass = 0;
  char* report = nullptr;
  const dn_status st =
      dn_run_experiment(experiment.c_str(), config_path.empty() ? nullptr : config.c_str(),
                        out_dir.c_str(), seed ? &*seed : nullptr, threads, &all_pass, &report);
  if (st != DN_OK) {
    std::fprintf(stderr, "error: %s\n", dn_last_error());
    return kError;
  }
  std::fputs(report, stdout);
  dn_string_free(report);
  return all_pass ? 0 : kAssertionFailed;
}
