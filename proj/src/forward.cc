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

#include "duality_nets/forward.h"

#include <algorithm>
#include <cmath>

#include "duality_nets/error.h"

namespace dn {

namespace {

// Normalizes column u of z in place into h and returns the centered norm.
double NormalizeColumn(const Matrix& z, int u, Matrix& h) {
  const int n = z.rows();
  double mean = 0.0;
  double scale = 0.0;
  for (int i = 0; i < n; ++i) {
    mean += z(i, u);
    scale = std::max(scale, std::abs(z(i, u)));
  }
  mean /= n;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = z(i, u) - mean;
    h(i, u) = c;
    sq += c * c;
  }
  const double nrm = std::sqrt(sq);
  Require(nrm > 1e-12 * std::max(1.0, scale), ErrorCode::kConstantActivation,
          "batch norm of a constant column");
  for (int i = 0; i < n; ++i) h(i, u) /= nrm;
  return nrm;
}

}  // namespace

Vector BatchNormColumn(const Vector& a, double gamma, double alpha) {
  Matrix z = Matrix::ColumnVector(a);
  Matrix h(z.rows(), 1);
  NormalizeColumn(z, 0, h);
  const double shift = alpha / std::sqrt(static_cast<double>(a.size()));
  Vector out(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    out[i] = gamma * h(static_cast<int>(i), 0) + shift;
  }
  return out;
}

ActivationTrace Forward(const NetworkParams& params, const Architecture& arch,
                        const Matrix& x) {
  ValidateParams(params, arch);
  Require(x.cols() == arch.inputs, ErrorCode::kShapeError,
          "input has " + std::to_string(x.cols()) + " columns, expected " +
              std::to_string(arch.inputs));
  const int n = x.rows();
  const int hidden = arch.hidden_layers();
  ActivationTrace trace;
  trace.branches.resize(arch.branches);
  trace.output = Matrix(n, arch.outputs);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < arch.branches; ++j) {
    BranchTrace& bt = trace.branches[j];
    const Matrix* prev = &x;
    for (int l = 1; l <= hidden; ++l) {
      Matrix z = *prev * params.weights[j][l - 1];
      if (l == hidden && arch.last_hidden_bias) {
        const Vector& b = params.biases[j];
        for (int i = 0; i < n; ++i) {
          for (int u = 0; u < z.cols(); ++u) z(i, u) += b[u];
        }
      }
      Matrix v = z;
      Matrix h;
      Vector norms;
      if (arch.has_bn(l)) {
        h = Matrix(n, z.cols());
        norms.resize(z.cols());
        const Vector& g = params.bn_scale[j][l - 1];
        const Vector& a = params.bn_shift[j][l - 1];
        for (int u = 0; u < z.cols(); ++u) {
          norms[u] = NormalizeColumn(z, u, h);
          for (int i = 0; i < n; ++i) {
            v(i, u) = g[u] * h(i, u) + a[u] * inv_sqrt_n;
          }
        }
      }
      Matrix act = v;
      if (arch.activation == Activation::kRelu) {
        for (int i = 0; i < act.size(); ++i) {
          act.data()[i] = std::max(act.data()[i], 0.0);
        }
      }
      bt.pre.push_back(std::move(z));
      bt.normalized.push_back(std::move(h));
      bt.centered_norm.push_back(std::move(norms));
      bt.post_bn.push_back(std::move(v));
      bt.act.push_back(std::move(act));
      prev = &bt.act.back();
    }
    trace.output += bt.act.back() * params.head[j];
  }
  return trace;
}

Matrix ForwardOutput(const NetworkParams& params, const Architecture& arch,
                     const Matrix& x) {
  return Forward(params, arch, x).output;
}

double SquaredLoss(const Matrix& output, const Matrix& labels) {
  const double r = FrobeniusNorm(output - labels);
  return 0.5 * r * r;
}

double WeightDecayPenalty(const NetworkParams& params,
                          const Architecture& arch) {
  double reg = 0.0;
  const int last = arch.hidden_layers();
  for (int j = 0; j < arch.branches; ++j) {
    const double h = FrobeniusNorm(params.head[j]);
    reg += h * h;
    if (arch.any_bn()) {
      for (double g : params.bn_scale[j][last - 1]) reg += g * g;
      for (double a : params.bn_shift[j][last - 1]) reg += a * a;
      continue;
    }
    for (const Matrix& w : params.weights[j]) {
      const double f = FrobeniusNorm(w);
      reg += f * f;
    }
  }
  return 0.5 * reg;
}

double PrimalObjective(const NetworkParams& params, const Architecture& arch,
                       const Dataset& ds, double beta) {
  Require(beta >= 0.0, ErrorCode::kInvalidInput, "beta must be >= 0");
  Require(ds.k() == arch.outputs, ErrorCode::kShapeError,
          "label columns differ from architecture outputs");
  const Matrix out = ForwardOutput(params, arch, ds.x);
  return SquaredLoss(out, ds.labels) + beta * WeightDecayPenalty(params, arch);
}

double BranchHeadMass(const NetworkParams& params, const Architecture& arch,
                      int branch) {
  const int last = arch.hidden_layers();
  const Matrix& head = params.head[branch];
  const Matrix& w = params.weights[branch][last - 1];
  double mass = 0.0;
  for (int u = 0; u < head.rows(); ++u) {
    const double row = Norm(head.row(u));
    if (row == 0.0) continue;
    double s;
    if (arch.has_bn(last)) {
      const double g = params.bn_scale[branch][last - 1][u];
      const double a = params.bn_shift[branch][last - 1][u];
      s = std::hypot(g, a);
    } else {
      s = Norm(w.col(u));
    }
    mass += row * s;
  }
  return mass;
}

CanonicalParts CanonicalObjective(const NetworkParams& params,
                                  const Architecture& arch, const Dataset& ds) {
  CanonicalParts parts;
  parts.loss = SquaredLoss(ForwardOutput(params, arch, ds.x), ds.labels);
  for (int j = 0; j < arch.branches; ++j) {
    const double mass = BranchHeadMass(params, arch, j);
    parts.head += mass;
    if (mass > 0.0 && !arch.any_bn() && arch.depth > 2) {
      const double t = ChainNorm(params, arch, j);
      parts.chain += 0.5 * (arch.depth - 2) * t * t;
    }
  }
  return parts;
}

}  // namespace dn
