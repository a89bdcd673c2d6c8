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

#ifndef DUALITY_NETS_DUALITY_H_
#define DUALITY_NETS_DUALITY_H_

#include <optional>
#include <vector>

#include "duality_nets/matrix.h"
#include "duality_nets/types.h"

namespace dn {

// Sign convention: the regularized dual is written as
//   max_Λ  -½‖Λ - Y‖² + ½‖Y‖²   s.t.  sup_feature ‖Λᵀ a‖ <= β,
// so that at an optimum Λ = Y - Ŷ. The Fenchel derivation yields the same
// problem in the variable -Λ.
enum class DualForm {
  kMinNorm,      // tr(ΛᵀY), constraint level 1 (β = 0 problems)
  kRegularized,  // -½‖Λ - Y‖² + ½‖Y‖²
};

// How the worst-case constraint value is obtained for a given setting.
enum class DualSetting {
  kLinear,           // t^{L-2}‖Xᵀλ‖ or t^{L-2}σ_max(ΛᵀX)
  kReluWhitened,     // t^{L-2} max over nonnegative unit vectors
  kBatchNorm,        // max over nonnegative unit vectors
  kReluRankOne,      // ‖a₀‖ t^{L-2} max(‖Λᵀc₊‖, ‖Λᵀc₋‖)
  kReluRankOneBias,  // hinge thresholds at the data abscissae
  kReluBruteForce,   // 2ⁿ activation patterns, L = 2, K = 1
};

// Picks the analytic route for (dataset, architecture); throws
// NoDualConstruction when none applies.
DualSetting ClassifyDualSetting(const Dataset& ds, const Architecture& arch);

struct DualCertificate {
  Matrix lambda;
  double beta = 0.0;
  double t = 1.0;                // chain norm the constraint was evaluated at
  double worst_constraint = 0.0;
  double dual_value = 0.0;
  std::optional<double> primal_value;
  std::optional<double> gap;           // primal - dual
  std::optional<double> relative_gap;  // |gap| / (1 + |primal|)
  std::vector<int> active_set;         // classes with β̃ <= ‖y_k‖
  bool exact_constraint = true;        // false when an upper bound was used

  bool feasible() const {
    const double level = beta > 0.0 ? beta : 1.0;
    return worst_constraint <= level * (1.0 + 1e-9);
  }
};

double DualObjective(const Matrix& lambda, const Dataset& ds, DualForm form);

// Exact worst-case constraint value sup_a ‖Λᵀa‖ over the features `arch`
// can produce on ds.x with chain norm t (unit last-layer directions).
double DualFeasibility(const Matrix& lambda, const Dataset& ds, double beta,
                       const Architecture& arch, double t);

// max_{a >= 0, ‖a‖ <= 1} ‖Λᵀa‖. Exact; enumerates supports when the columns
// of Λ overlap (n <= 20).
double NonnegBallMax(const Matrix& lambda);

// sup over ‖w‖ <= 1 (and free b when `bias`) of |λᵀ(Xw + b1)₊| by
// enumerating all 2ⁿ activation patterns, each a cone projection.
double BruteForceReluExtreme(const Vector& lambda, const Matrix& x, bool bias);

// Closed-form optimum of the whitened / batch-norm dual.
DualCertificate OptimalDual(const Dataset& ds, double beta, double t,
                            int depth);

// Certifies `params`: β > 0 uses Λ = Y - Ŷ scaled into the feasible set;
// β = 0 uses the minimum-norm dual and requires interpolation.
DualCertificate DualityGap(const NetworkParams& params,
                           const Architecture& arch, const Dataset& ds,
                           double beta);

// -½β²|E| + βΣ_{j∈E}‖y_j‖ + ½Σ_{j∉E}‖y_j‖² with E = {j : β <= ‖y_j‖}.
double OptimumValueFormula(const Dataset& ds, double beta);

}  // namespace dn

#endif  // DUALITY_NETS_DUALITY_H_
