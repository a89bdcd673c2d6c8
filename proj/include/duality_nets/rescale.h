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

#ifndef DUALITY_NETS_RESCALE_H_
#define DUALITY_NETS_RESCALE_H_

#include <utility>

#include "duality_nets/types.h"

namespace dn {

struct BalanceReport {
  double objective_before = 0.0;
  double objective_after = 0.0;
  double max_output_deviation = 0.0;
  // Populated by VerifyEquivalence only.
  double loss_before = 0.0;
  double loss_after = 0.0;
};

// L = 2: every hidden unit with a nonzero head row gets a unit input column
// (or unit (γ, α) under batch norm); the head absorbs the scale.
// objective_before = ½ΣΣ‖W‖², objective_after = canonical regularizer.
std::pair<NetworkParams, BalanceReport> BalanceTwoLayer(
    const NetworkParams& params, const Architecture& arch);

// L >= 3: inner layers of each active branch share the geometric-mean
// Frobenius norm t_j, layer L-1 columns are unit, the head absorbs the scale.
std::pair<NetworkParams, BalanceReport> BalanceDeep(const NetworkParams& params,
                                                    const Architecture& arch);

// Dispatches on depth.
std::pair<NetworkParams, BalanceReport> Balance(const NetworkParams& params,
                                                const Architecture& arch);

// Minimizer of the weight-decay penalty over the output-preserving rescaling
// orbit (every layer of a branch carries equal norm). Reports ℓ₂² penalties.
std::pair<NetworkParams, BalanceReport> ToWeightDecayForm(
    const NetworkParams& params, const Architecture& arch);

// Full objectives: before = loss + β·½ΣΣ‖W‖² at `params`, after = canonical
// objective at the balanced point. Throws Internal if the loss changes.
BalanceReport VerifyEquivalence(const NetworkParams& params,
                                const Architecture& arch, double beta,
                                const Dataset& ds);

// Output deviation between two parameter sets on 20 seeded Gaussian probes.
double ProbeDeviation(const NetworkParams& a, const NetworkParams& b,
                      const Architecture& arch);

}  // namespace dn

#endif  // DUALITY_NETS_RESCALE_H_
