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

#ifndef DUALITY_NETS_CLOSEDFORM_H_
#define DUALITY_NETS_CLOSEDFORM_H_

#include <cstdint>
#include <vector>

#include "duality_nets/matrix.h"
#include "duality_nets/types.h"

namespace dn {

struct PlantedFit {
  Matrix w_star;     // d×K minimum-norm least-squares solution
  Matrix w_tilde_r;  // [I_r 0; 0 0] V_xᵀ W*
  SvdResult svd_w;   // of w_tilde_r
  int r_w = 0;
};

PlantedFit FitPlanted(const Dataset& ds);

// Euclidean projection of y onto {u : ‖Xᵀu‖₂ <= β}.
Vector ProjectionBall(const Matrix& x, const Vector& y, double beta);
// Frobenius projection of Y onto {U : σ_max(UᵀX) <= β}.
Matrix ProjectionBall(const Matrix& x, const Matrix& y, double beta);

// argmin_W ½‖XW - Y‖² + β‖W‖_* (the ℓ₂ norm when K = 1), W ∈ range(Xᵀ).
// residual = Y - XW is the projection of Y onto the dual-feasible set.
struct LinearFit {
  Matrix w;
  Matrix residual;
};
LinearFit RegularizedLinearFit(const Matrix& x, const Matrix& y, double beta);

// argmin_V ½‖AV - Y‖² + β Σ_b ‖V[b,:]‖₂ by accelerated proximal gradient,
// stopped on a relative duality gap of `gap_tol`.
Matrix GroupLassoRows(const Matrix& a, const Matrix& y, double beta,
                      double gap_tol = 1e-13, int max_iter = 200000);

// Minimizer of g(t) = demand / t^{L-2} + ½(L-2) t², i.e. demand^{1/L};
// returns 1 for zero demand.
double ChooseTStar(double head_demand, int depth);

enum class ChainMode {
  kNonnegOrthogonal,     // ρ_{l,j} = e_j, needs m_l >= branches
  kNonnegCyclic,         // ρ_{l,j} = e_{j mod m_l}
  kUnitArbitrary,        // seeded unit vectors
  kOrthonormalArbitrary  // seeded, orthonormal across branches
};

// Per branch j and hidden layer l ∈ [L-1]: unit direction rho[j][l-1] ∈ ℝ^{m_l}.
// The chain vectors are φ_{l,j} = t_j ρ_{l,j} for l ∈ [L-2].
struct DirectionChain {
  std::vector<std::vector<Vector>> rho;
  Vector t;
  ChainMode mode = ChainMode::kNonnegOrthogonal;

  Vector phi(int branch, int layer) const {
    return Scaled(rho[branch][layer - 1], t[branch]);
  }
};

DirectionChain MakeChain(const Architecture& arch, ChainMode mode,
                         const Vector& t, uint64_t seed);

enum class TPolicy {
  kUnit,     // t = 1 (the normalization used in the optimum-value formula)
  kOptimal,  // minimizes the canonical objective including ½(L-2)Σt²
  kFixed,    // t = ChainOptions::t
};

struct ChainOptions {
  TPolicy policy = TPolicy::kOptimal;
  double t = 1.0;
  ChainMode mode = ChainMode::kNonnegOrthogonal;
  uint64_t seed = 0;
};

// Two-layer linear network with m = K branches (m = 1 for scalar output).
Network TwoLayerLinear(const Dataset& ds, double beta);

// Deep linear (L >= 3). Branch k carries the k-th singular triple of the
// convex solution at radius β t^{2-L}.
Network DeepLinear(const Dataset& ds, double beta, const Architecture& arch,
                   const ChainOptions& opts = {});

// Rank-one data X = c a₀ᵀ. Without bias: one branch whose features are ∝ c.
// With arch.last_hidden_bias: 2n hinge branches with kinks at the c_i.
Network DeepReluRankOne(const Dataset& ds, const Architecture& arch,
                        double beta,
                        const ChainOptions& opts = {TPolicy::kOptimal, 1.0,
                                                    ChainMode::kNonnegCyclic,
                                                    0});

// Whitened data with one-hot labels; branch j serves class j.
Network DeepReluWhitened(const Dataset& ds, double beta,
                         const Architecture& arch,
                         const ChainOptions& opts = {TPolicy::kUnit});

struct BnHeadParams {
  std::vector<Vector> w_prev;  // w_{L-1,j} = A_{L-2,j}† y_j
  Vector gamma;
  Vector alpha;
  Matrix head;                 // row j = w_{L,j}ᵀ = (‖y_j‖ - β)₊ e_jᵀ
};

BnHeadParams BnHead(const std::vector<Matrix>& activations, const Dataset& ds,
                    double beta);

// Full batch-norm network: layers 1..L-2 of every branch come from `trunk`
// (or a seeded uniform init when null), the last two layers from BnHead.
Network BnNetwork(const Dataset& ds, double beta, const Architecture& arch,
                  const NetworkParams* trunk = nullptr, uint64_t seed = 0);

// Picks the construction that fits the data: batch norm, linear (two-layer
// or deep), whitened one-hot ReLU, then rank-one ReLU. Anything else throws
// NoDualConstruction.
Network ConstructClosedForm(const Dataset& ds, const Architecture& arch, double beta,
                            uint64_t seed = 0);

}  // namespace dn

#endif  // DUALITY_NETS_CLOSEDFORM_H_
