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

#ifndef DUALITY_NETS_TRAIN_H_
#define DUALITY_NETS_TRAIN_H_

#include <cstdint>
#include <vector>

#include "duality_nets/probes.h"
#include "duality_nets/types.h"

namespace dn {

struct TrainConfig {
  double learning_rate = 1e-2;
  double momentum = 0.9;  // heavy ball, in [0, 1)
  int steps = 50000;
  int batch_size = 0;     // 0 = full batch
  double beta = 0.0;
  uint64_t seed = 0;
  int probe_every = 0;    // 0 = record only the first and last step
  double init_scale = 1.0;
  bool structure = true;  // attach a StructureReport to each record
};

void ValidateTrainConfig(const TrainConfig& config);

// Weights and biases uniform in ±scale/√fan_in (the head uses fan-in
// m_{L-1}); BN scale 1 and shift 0.
NetworkParams InitParams(const Architecture& arch, double scale, uint64_t seed);

// Exact gradient of PrimalObjective on `batch` (ReLU'(0) = 0), returned in
// the shape of `params`.
NetworkParams Gradients(const NetworkParams& params, const Architecture& arch,
                        const Dataset& batch, double beta);

// Max relative error |a - f| / (max(|a|, |f|) + 1e-6) between analytic and
// central-difference derivatives over 64 seeded coordinates.
double FdCheck(const NetworkParams& params, const Architecture& arch,
               const Dataset& ds, double beta, double epsilon,
               uint64_t seed = 0);

// Flat views of the trainable entries, in a fixed order.
std::vector<double*> ParamPointers(NetworkParams& params,
                                   const Architecture& arch);
double GradientNorm(const NetworkParams& grad, const Architecture& arch);

struct TrajectoryPoint {
  int step = 0;
  double objective = 0.0;
  StructureReport structure;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  NetworkParams final_params;
  double final_objective = 0.0;
};

// Heavy-ball (S)GD on PrimalObjective. Throws Diverged when the objective
// exceeds 1e12 or stops being finite.
Trajectory RunTraining(const NetworkParams& init, const Architecture& arch,
                       const Dataset& ds, const TrainConfig& config);

}  // namespace dn

#endif  // DUALITY_NETS_TRAIN_H_
