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

#include "duality_nets/rescale.h"

#include <cmath>

#include "duality_nets/error.h"
#include "duality_nets/forward.h"
#include "duality_nets/rng.h"

namespace dn {

namespace {

double CanonicalPenalty(const NetworkParams& p, const Architecture& arch) {
  double head = 0.0;
  double chain = 0.0;
  for (int j = 0; j < arch.branches; ++j) {
    const double mass = BranchHeadMass(p, arch, j);
    head += mass;
    if (mass > 0.0 && !arch.any_bn() && arch.depth > 2) {
      const double t = ChainNorm(p, arch, j);
      chain += 0.5 * (arch.depth - 2) * t * t;
    }
  }
  return head + chain;
}

// Scales unit u of the last hidden layer of branch j by `s` on the input side
// and 1/s on the head side.
void ScaleLastUnit(NetworkParams& p, const Architecture& arch, int j, int u,
                   double s) {
  const int last = arch.hidden_layers();
  if (arch.has_bn(last)) {
    p.bn_scale[j][last - 1][u] *= s;
    p.bn_shift[j][last - 1][u] *= s;
  } else {
    Matrix& w = p.weights[j][last - 1];
    for (int i = 0; i < w.rows(); ++i) w(i, u) *= s;
    if (arch.last_hidden_bias) p.biases[j][u] *= s;
  }
  Matrix& head = p.head[j];
  for (int k = 0; k < head.cols(); ++k) head(u, k) /= s;
}

double LastUnitNorm(const NetworkParams& p, const Architecture& arch, int j,
                    int u) {
  const int last = arch.hidden_layers();
  if (arch.has_bn(last)) {
    return std::hypot(p.bn_scale[j][last - 1][u], p.bn_shift[j][last - 1][u]);
  }
  return Norm(p.weights[j][last - 1].col(u));
}

// A unit with zero input weights and a nonzero bias emits a constant; its
// head carries no weight-norm cost and the rescaling leaves it alone.
bool BiasOnlyUnit(const NetworkParams& p, const Architecture& arch, int j,
                  int u) {
  return arch.last_hidden_bias && !arch.has_bn(arch.hidden_layers()) &&
         p.biases[j][u] != 0.0 && LastUnitNorm(p, arch, j, u) == 0.0;
}

bool ActiveUnit(const NetworkParams& p, const Architecture& arch, int j,
                int u) {
  return Norm(p.head[j].row(u)) > 0.0 && !BiasOnlyUnit(p, arch, j, u);
}

// Unit-normalizes the last hidden layer of every active unit.
void NormalizeLastLayer(NetworkParams& p, const Architecture& arch,
                        ErrorCode degenerate) {
  for (int j = 0; j < arch.branches; ++j) {
    for (int u = 0; u < p.head[j].rows(); ++u) {
      if (!ActiveUnit(p, arch, j, u)) continue;
      const double nrm = LastUnitNorm(p, arch, j, u);
      Require(nrm > 0.0, degenerate,
              "branch " + std::to_string(j) + " unit " + std::to_string(u) +
                  " has zero input weights but a nonzero head");
      ScaleLastUnit(p, arch, j, u, 1.0 / nrm);
    }
  }
}

Matrix Probes(int inputs) {
  Rng rng(0x5EEDULL, 17);
  return rng.NormalMatrix(20, inputs);
}

}  // namespace

double ProbeDeviation(const NetworkParams& a, const NetworkParams& b,
                      const Architecture& arch) {
  const Matrix x = Probes(arch.inputs);
  return MaxAbsDiff(ForwardOutput(a, arch, x), ForwardOutput(b, arch, x));
}

std::pair<NetworkParams, BalanceReport> BalanceTwoLayer(
    const NetworkParams& params, const Architecture& arch) {
  ValidateParams(params, arch);
  Require(arch.depth == 2, ErrorCode::kInvalidInput,
          "BalanceTwoLayer needs depth 2");
  NetworkParams p = params;
  NormalizeLastLayer(p, arch, ErrorCode::kDegenerateNeuron);
  BalanceReport r;
  r.objective_before = WeightDecayPenalty(params, arch);
  r.objective_after = CanonicalPenalty(p, arch);
  r.max_output_deviation = ProbeDeviation(params, p, arch);
  return {std::move(p), r};
}

std::pair<NetworkParams, BalanceReport> BalanceDeep(const NetworkParams& params,
                                                    const Architecture& arch) {
  ValidateParams(params, arch);
  Require(arch.depth >= 3, ErrorCode::kInvalidInput,
          "BalanceDeep needs depth >= 3");
  NetworkParams p = params;
  const int inner = arch.depth - 2;
  bool all_balanced = true;
  Vector norms(arch.branches, 0.0);
  for (int j = 0; j < arch.branches; ++j) {
    bool active = false;
    for (int u = 0; u < p.head[j].rows(); ++u) {
      active = active || ActiveUnit(p, arch, j, u);
    }
    if (!active) {
      all_balanced = false;
      continue;
    }
    if (!arch.any_bn()) {
      const double t = ChainNorm(p, arch, j);
      Require(t > 0.0, ErrorCode::kDegenerateBranch,
              "branch " + std::to_string(j) + " has a zero inner layer");
      for (int l = 1; l <= inner; ++l) {
        Matrix& w = p.weights[j][l - 1];
        w *= t / FrobeniusNorm(w);
      }
      norms[j] = t;
    }
  }
  NormalizeLastLayer(p, arch, ErrorCode::kDegenerateBranch);
  if (all_balanced && !arch.any_bn()) p.branch_norms = norms;
  BalanceReport r;
  r.objective_before = WeightDecayPenalty(params, arch);
  r.objective_after = CanonicalPenalty(p, arch);
  r.max_output_deviation = ProbeDeviation(params, p, arch);
  return {std::move(p), r};
}

std::pair<NetworkParams, BalanceReport> Balance(const NetworkParams& params,
                                                const Architecture& arch) {
  return arch.depth == 2 ? BalanceTwoLayer(params, arch)
                         : BalanceDeep(params, arch);
}

std::pair<NetworkParams, BalanceReport> ToWeightDecayForm(
    const NetworkParams& params, const Architecture& arch) {
  NetworkParams p = Balance(params, arch).first;
  p.branch_norms.reset();
  const int inner = arch.depth - 2;
  for (int j = 0; j < arch.branches; ++j) {
    // Each active unit pair (input column, head row) gets equal norms.
    double pair_mass = 0.0;
    for (int u = 0; u < p.head[j].rows(); ++u) {
      if (!ActiveUnit(p, arch, j, u)) continue;
      const double r = Norm(p.head[j].row(u));
      const double nrm = LastUnitNorm(p, arch, j, u);
      ScaleLastUnit(p, arch, j, u, std::sqrt(r / nrm));
      pair_mass += r * nrm;
    }
    if (inner == 0 || arch.any_bn() || pair_mass == 0.0) continue;
    // Move scale between the inner chain and the unit pairs: c^L = P / t².
    const double t = ChainNorm(p, arch, j);
    const double c = std::pow(pair_mass / (t * t), 1.0 / arch.depth);
    for (int l = 1; l <= inner; ++l) p.weights[j][l - 1] *= c;
    const double back = std::pow(c, -0.5 * inner);
    const int last = arch.hidden_layers();
    if (arch.last_hidden_bias) {
      for (double& b : p.biases[j]) b *= back;
    }
    p.weights[j][last - 1] *= back;
    p.head[j] *= back;
  }
  BalanceReport r;
  r.objective_before = WeightDecayPenalty(params, arch);
  r.objective_after = WeightDecayPenalty(p, arch);
  r.max_output_deviation = ProbeDeviation(params, p, arch);
  return {std::move(p), r};
}

BalanceReport VerifyEquivalence(const NetworkParams& params,
                                const Architecture& arch, double beta,
                                const Dataset& ds) {
  Require(beta >= 0.0, ErrorCode::kInvalidInput, "beta must be >= 0");
  auto [balanced, report] = Balance(params, arch);
  const Matrix before = ForwardOutput(params, arch, ds.x);
  const Matrix after = ForwardOutput(balanced, arch, ds.x);
  BalanceReport r;
  r.loss_before = SquaredLoss(before, ds.labels);
  r.loss_after = SquaredLoss(after, ds.labels);
  r.objective_before = r.loss_before + beta * WeightDecayPenalty(params, arch);
  r.objective_after = CanonicalObjective(balanced, arch, ds).Value(beta);
  r.max_output_deviation = MaxAbsDiff(before, after);
  Require(std::abs(r.loss_before - r.loss_after) <=
              1e-9 * (1.0 + r.loss_before),
          ErrorCode::kInternal, "balancing changed the loss");
  return r;
}

}  // namespace dn
