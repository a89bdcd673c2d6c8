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

#include "duality_nets/types.h"

#include <cmath>

#include "duality_nets/error.h"

namespace dn {

bool IsOneHot(const Matrix& labels) {
  for (int i = 0; i < labels.rows(); ++i) {
    int ones = 0;
    for (int k = 0; k < labels.cols(); ++k) {
      const double v = labels(i, k);
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  return labels.rows() > 0;
}

std::vector<int> ClassIndex(const Matrix& labels) {
  Require(IsOneHot(labels), ErrorCode::kPreconditionViolated,
          "labels are not one-hot");
  std::vector<int> idx(labels.rows());
  for (int i = 0; i < labels.rows(); ++i) {
    for (int k = 0; k < labels.cols(); ++k) {
      if (labels(i, k) == 1.0) idx[i] = k;
    }
  }
  return idx;
}

void ValidateDataset(const Dataset& ds) {
  Require(ds.x.rows() == ds.labels.rows(), ErrorCode::kShapeError,
          "x and labels row counts differ");
  Require(AllFinite(ds.x) && AllFinite(ds.labels), ErrorCode::kInvalidInput,
          "dataset has non-finite entries");
  if (ds.rank_one) {
    const auto& f = *ds.rank_one;
    Require(static_cast<int>(f.c.size()) == ds.n() &&
                static_cast<int>(f.a0.size()) == ds.d(),
            ErrorCode::kShapeError, "rank-one factor shape mismatch");
    const double err = MaxAbsDiff(ds.x, Outer(f.c, f.a0));
    Require(err <= 1e-12 * std::max(MaxAbs(ds.x), 1e-300),
            ErrorCode::kPreconditionViolated, "X != c a0^T");
  }
  if (ds.whitened) {
    const double err =
        MaxAbsDiff(MatMulT(ds.x, ds.x), Matrix::Identity(ds.n()));
    Require(err <= 1e-8, ErrorCode::kPreconditionViolated,
            "whitened flag set but X X^T != I");
  }
  if (!ds.class_sizes.empty()) {
    Require(IsOneHot(ds.labels), ErrorCode::kPreconditionViolated,
            "class sizes given but labels are not one-hot");
  }
}

std::string ActivationName(Activation a) {
  return a == Activation::kLinear ? "linear" : "relu";
}

Activation ParseActivation(const std::string& name) {
  if (name == "linear") return Activation::kLinear;
  if (name == "relu") return Activation::kRelu;
  Fail(ErrorCode::kInvalidInput, "unknown activation '" + name + "'");
}

void ValidateArchitecture(const Architecture& arch) {
  Require(arch.depth >= 2, ErrorCode::kInvalidInput, "depth must be >= 2");
  Require(arch.branches >= 1, ErrorCode::kInvalidInput, "branches must be >= 1");
  Require(arch.inputs >= 1 && arch.outputs >= 1, ErrorCode::kInvalidInput,
          "inputs and outputs must be >= 1");
  Require(static_cast<int>(arch.widths.size()) == arch.depth - 1,
          ErrorCode::kInvalidInput, "widths must list m_1..m_{L-1}");
  for (int w : arch.widths) {
    Require(w >= 1, ErrorCode::kInvalidInput, "widths must be positive");
  }
  Require(!arch.any_bn() || arch.activation == Activation::kRelu,
          ErrorCode::kInvalidInput, "batch norm requires relu activation");
}

NetworkParams ZeroParams(const Architecture& arch) {
  ValidateArchitecture(arch);
  NetworkParams p;
  const int m = arch.branches;
  const int hidden = arch.hidden_layers();
  p.weights.resize(m);
  p.head.resize(m);
  p.bn_scale.resize(m);
  p.bn_shift.resize(m);
  if (arch.last_hidden_bias) p.biases.assign(m, Vector(arch.last_width(), 0.0));
  for (int j = 0; j < m; ++j) {
    for (int l = 1; l <= hidden; ++l) {
      p.weights[j].emplace_back(arch.fan_in(l), arch.widths[l - 1]);
      const int units = arch.has_bn(l) ? arch.widths[l - 1] : 0;
      p.bn_scale[j].emplace_back(units, 0.0);
      p.bn_shift[j].emplace_back(units, 0.0);
    }
    p.head[j] = Matrix(arch.last_width(), arch.outputs);
  }
  return p;
}

void ValidateParams(const NetworkParams& p, const Architecture& arch) {
  ValidateArchitecture(arch);
  const int m = arch.branches;
  const int hidden = arch.hidden_layers();
  auto check = [](bool ok, const char* what) {
    Require(ok, ErrorCode::kShapeError, what);
  };
  check(static_cast<int>(p.weights.size()) == m, "weights branch count");
  check(static_cast<int>(p.head.size()) == m, "head branch count");
  for (int j = 0; j < m; ++j) {
    check(static_cast<int>(p.weights[j].size()) == hidden, "layer count");
    for (int l = 1; l <= hidden; ++l) {
      const Matrix& w = p.weights[j][l - 1];
      if (w.rows() != arch.fan_in(l) || w.cols() != arch.widths[l - 1]) {
        Fail(ErrorCode::kShapeError,
             "W_" + std::to_string(l) + "," + std::to_string(j) + " shape");
      }
    }
    check(p.head[j].rows() == arch.last_width() &&
              p.head[j].cols() == arch.outputs,
          "head shape");
  }
  if (arch.last_hidden_bias) {
    check(static_cast<int>(p.biases.size()) == m, "bias branch count");
    for (const Vector& b : p.biases) {
      check(static_cast<int>(b.size()) == arch.last_width(), "bias length");
    }
  }
  if (arch.any_bn()) {
    check(static_cast<int>(p.bn_scale.size()) == m &&
              static_cast<int>(p.bn_shift.size()) == m,
          "bn branch count");
    for (int j = 0; j < m; ++j) {
      check(static_cast<int>(p.bn_scale[j].size()) == hidden &&
                static_cast<int>(p.bn_shift[j].size()) == hidden,
            "bn layer count");
      for (int l = 1; l <= hidden; ++l) {
        const size_t units = arch.has_bn(l) ? arch.widths[l - 1] : 0;
        check(p.bn_scale[j][l - 1].size() == units &&
                  p.bn_shift[j][l - 1].size() == units,
              "bn unit count");
      }
    }
  }
  if (p.branch_norms) {
    check(static_cast<int>(p.branch_norms->size()) == m, "branch norm count");
    for (int j = 0; j < m; ++j) {
      for (int l = 1; l <= arch.depth - 2; ++l) {
        Require(std::abs(FrobeniusNorm(p.weights[j][l - 1]) -
                         (*p.branch_norms)[j]) <= 1e-9,
                ErrorCode::kPreconditionViolated,
                "branch_norms disagree with inner layer norms");
      }
    }
  }
}

double ChainNorm(const NetworkParams& p, const Architecture& arch, int branch) {
  const int inner = arch.depth - 2;
  if (inner <= 0) return 0.0;
  double log_sum = 0.0;
  for (int l = 1; l <= inner; ++l) {
    const double f = FrobeniusNorm(p.weights[branch][l - 1]);
    if (f == 0.0) return 0.0;
    log_sum += std::log(f);
  }
  return std::exp(log_sum / inner);
}

}  // namespace dn
