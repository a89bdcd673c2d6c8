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

#ifndef DUALITY_NETS_EXPERIMENTS_H_
#define DUALITY_NETS_EXPERIMENTS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "duality_nets/train.h"
#include "duality_nets/types.h"

namespace dn {

// Where the experiment's data comes from. `source` is one of gaussian,
// rank_one, teacher (see Generate), spline (jittered 1-D abscissae in
// [1, 3] with N(0, 1) labels) or csv.
struct DatasetSpec {
  std::string source = "gaussian";
  int n = 10;
  int d = 5;
  int k = 1;
  uint64_t seed = 1;
  bool whiten = false;
  bool onehot = false;  // replace labels by balanced one-hot classes
  bool positive_c = true;
  std::string csv_path;
};

Dataset BuildDataset(const DatasetSpec& spec);

struct ExperimentConfig {
  std::string experiment;
  DatasetSpec data;
  Architecture arch;
  TrainConfig train;
  std::vector<double> betas;   // sweep; a single entry for fixed-β runs
  std::vector<int> depths;     // depth sweep where the experiment has one
  std::vector<std::pair<int, int>> sizes;  // (n, K) pairs for collapse runs
  int runs = 1;                // independent training restarts
  int instances = 50;          // random instances per verification setting
  double finetune_beta = 1e-6; // second training phase (spline fits)
  int finetune_steps = 0;
  uint64_t seed = 1;
  int threads = 1;
  std::string output_dir = ".";
};

// The effective configuration as compact JSON.
std::string ConfigEcho(const ExperimentConfig& config);

const std::vector<std::string>& ExperimentNames();

// Defaults that reproduce the figure at desk scale.
ExperimentConfig DefaultConfig(const std::string& experiment);

// Overlays `json_text` on DefaultConfig(experiment). The experiment name may
// come from the text or from `experiment`; both present must agree. Schema
// violations throw ConfigError naming the offending JSON pointer.
ExperimentConfig ParseExperimentConfig(const std::string& json_text,
                                       const std::string& experiment = "");

struct ResultRow {
  std::string experiment;
  double key = 0.0;  // step, β or instance index
  std::string metric;
  double value = 0.0;
};

struct Assertion {
  std::string name;
  std::string op;  // "<=", ">=" or "=="
  double expected = 0.0;
  double actual = 0.0;
  double tol = 0.0;
  bool pass = false;
};

Assertion Check(const std::string& name, double actual, const std::string& op,
                double expected, double tol = 0.0);

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;  // scatter instead of a polyline
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

struct ExperimentResult {
  std::string experiment;
  std::string config_echo;
  std::vector<ResultRow> rows;
  std::map<std::string, double> metrics;
  std::vector<Assertion> assertions;
  Plot plot;
  double wall_time_s = 0.0;
  bool pass() const;
};

// Runs `count` independent tasks on up to `threads` workers. Task i writes
// only its own slot, so results are identical for every thread count.
void ParallelFor(int count, int threads, const std::function<void(int)>& task);

// Worker count: DUALITY_NETS_THREADS when set, else `requested` (>= 1).
int EffectiveThreads(int requested);

ExperimentResult RunExperiment(const ExperimentConfig& config);

// report.json body (schema_version 1). Throws InvalidInput on empty results.
std::string EmitReport(const ExperimentResult& result);
std::string RenderCsv(const ExperimentResult& result);
std::string RenderSvg(const Plot& plot);

// Writes results.csv, report.json and plot.svg into `dir`, creating it.
void WriteArtifacts(const ExperimentResult& result, const std::string& dir);

}  // namespace dn

#endif  // DUALITY_NETS_EXPERIMENTS_H_
