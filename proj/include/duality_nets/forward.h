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

#ifndef DUALITY_NETS_FORWARD_H_
#define DUALITY_NETS_FORWARD_H_

#include <vector>

#include "duality_nets/matrix.h"
#include "duality_nets/types.h"

namespace dn {

struct BranchTrace {
  // Index l-1 holds layer l = 1..L-1.
  std::vector<Matrix> pre;          // A_{l-1}W_l (+ bias on the last layer)
  std::vector<Matrix> normalized;   // BN layers: centered unit columns h
  std::vector<Vector> centered_norm;  // BN layers: ‖(I - 11ᵀ/n) z‖ per unit
  std::vector<Matrix> post_bn;      // input to the activation
  std::vector<Matrix> act;          // A_l
};

struct ActivationTrace {
  std::vector<BranchTrace> branches;
  Matrix output;  // Ŷ, n×K
};

ActivationTrace Forward(const NetworkParams& params, const Architecture& arch,
                        const Matrix& x);
Matrix ForwardOutput(const NetworkParams& params, const Architecture& arch,
                     const Matrix& x);

// (I - 11ᵀ/n)a / ‖(I - 11ᵀ/n)a‖ · γ + 1·α/√n. Throws ConstantActivation.
Vector BatchNormColumn(const Vector& a, double gamma, double alpha);

// ½‖Ŷ - Y‖_F².
double SquaredLoss(const Matrix& output, const Matrix& labels);

// Eq. 2 objective: ½‖Ŷ - Y‖² + (β/2)ΣΣ‖W_{l,j}‖_F² + (β/2)Σ‖W_{L,j}‖_F².
// Batch-norm architectures use the head-only form
// ½‖Ŷ - Y‖² + (β/2)Σ_j(‖γ_j‖² + ‖α_j‖² + ‖W_{L,j}‖²) on the last hidden layer.
// Biases are never regularized.
double PrimalObjective(const NetworkParams& params, const Architecture& arch,
                       const Dataset& ds, double beta);
double WeightDecayPenalty(const NetworkParams& params, const Architecture& arch);

// Objective after the output-preserving rescaling of each branch:
//   loss + β·head + β·chain
// head  = Σ_j Σ_u ‖W_{L,j}[u,:]‖ · s_{j,u}, s = ‖W_{L-1,j}[:,u]‖ (or √(γ²+α²)
//         under batch norm),
// chain = ½(L-2) Σ_{j active} t_j², t_j the geometric mean of inner norms.
struct CanonicalParts {
  double loss = 0.0;
  double head = 0.0;
  double chain = 0.0;

  double Value(double beta, bool include_chain = true) const {
    return loss + beta * head + (include_chain ? beta * chain : 0.0);
  }
};

CanonicalParts CanonicalObjective(const NetworkParams& params,
                                  const Architecture& arch, const Dataset& ds);
// Per-branch head mass Σ_u ‖W_{L,j}[u,:]‖ · s_{j,u}.
double BranchHeadMass(const NetworkParams& params, const Architecture& arch,
                      int branch);

}  // namespace dn

#endif  // DUALITY_NETS_FORWARD_H_
