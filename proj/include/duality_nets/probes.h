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

#ifndef DUALITY_NETS_PROBES_H_
#define DUALITY_NETS_PROBES_H_

#include <functional>
#include <limits>
#include <vector>

#include "duality_nets/matrix.h"
#include "duality_nets/types.h"

namespace dn {

struct NormRatio {
  double spectral = 0.0;
  double frobenius = 0.0;
  double ratio = 0.0;  // 1 iff numerically rank one
};

// Throws ZeroMatrix for m = 0.
NormRatio SpectralVsFrobenius(const Matrix& m);

struct KinkReport {
  std::vector<double> kinks;   // abscissae, ascending
  std::vector<double> masses;  // |slope change| at each kink
  double grid_step = 0.0;

  double total_mass() const;
  // Share of the kink mass lying within `radius` of some point.
  double mass_fraction_near(const std::vector<double>& points,
                            double radius) const;
};

// Second differences of f on `grid` points over [lo, hi]; a point is a kink
// when |Δ²f| > tol·h·(1 + max|f'|). Adjacent flags merge into one kink at
// their |Δ²f|-weighted centroid, which is exact for isolated breaks.
KinkReport DetectKinks(const std::function<double(double)>& f, double lo,
                       double hi, int grid = 10001, double tol = 1e-4);

// Network with one input: the range of `data_x` padded by 10% on each side.
KinkReport DetectKinks(const NetworkParams& params, const Architecture& arch,
                       const std::vector<double>& data_x, int grid = 10001,
                       double tol = 1e-4);

struct EtfSpec {
  int k = 0;
  double scale_alpha = 0.0;
  Matrix rotation;  // p×K with orthonormal columns
  Matrix columns;   // α·U·S, S = √(K/(K-1))(I_K - 11ᵀ/K)
};

EtfSpec MakeEtf(int k, double alpha, const Matrix& rotation);
EtfSpec MakeEtf(int k, double alpha);  // U = I_K

struct CollapseReport {
  double etf_distance = 0.0;    // ‖M - α S‖_F over class means
  double max_entry_error = 0.0; // centered activations vs √(K/n)(e_y - 1/K)
  double alpha_fit = 0.0;       // ⟨M, S⟩ / ⟨S, S⟩
  double alpha_target = 0.0;    // √((K-1)/n)
  Matrix class_means;           // K×K, row k = mean over class k
  EtfSpec spec;
};

// a_last: n×K last-hidden activations; class_index[i] ∈ [0, K).
CollapseReport NeuralCollapseCheck(const Matrix& a_last,
                                   const std::vector<int>& class_index);

// Mean over nonzero columns of W₁ of the squared norm of the normalized
// column's projection onto span(directions).
double SingularProjection(const Matrix& w1, const Matrix& directions);

// |cos| between the top right singular vector of W_{l-1,j} and the top left
// singular vector of W_{l,j}, for l = 2..L (the head is layer L), over
// branches with a nonzero head.
std::vector<double> BranchAlignment(const NetworkParams& params,
                                    const Architecture& arch);

struct StructureReport {
  std::vector<int> ranks;                      // layers 1..L
  std::vector<double> spectral_over_frobenius; // layers 1..L
  std::vector<Vector> singular_values;         // layers 1..L
  std::vector<double> alignment;
  std::vector<double> kinks;
  double etf_distance = std::numeric_limits<double>::quiet_NaN();
  double etf_alpha = std::numeric_limits<double>::quiet_NaN();
};

// Layer matrices: with one branch, W_{l,1}; for L = 2, the first layers side
// by side and the heads stacked; otherwise ranks take the maximum and
// ratios the minimum over active branches. Kinks need a 1-D input and
// `ds`; the ETF fields need batch norm and balanced one-hot labels.
StructureReport Structure(const NetworkParams& params, const Architecture& arch,
                          const Dataset* ds = nullptr, double rank_tol = kRankTol);

}  // namespace dn

#endif  // DUALITY_NETS_PROBES_H_
