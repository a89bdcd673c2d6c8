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

#ifndef DUALITY_NETS_TYPES_H_
#define DUALITY_NETS_TYPES_H_

#include <optional>
#include <string>
#include <vector>

#include "duality_nets/matrix.h"

namespace dn {

struct RankOneFactor {
  Vector c;   // n
  Vector a0;  // d
};

struct Dataset {
  Matrix x;       // n×d
  Matrix labels;  // n×K
  std::optional<RankOneFactor> rank_one;
  bool whitened = false;
  std::vector<int> class_sizes;  // empty unless one-hot

  int n() const { return x.rows(); }
  int d() const { return x.cols(); }
  int k() const { return labels.cols(); }
};

// Checks the typed invariants (rank-one factorization, whitening, one-hot
// rows). Throws PreconditionViolated.
void ValidateDataset(const Dataset& ds);
bool IsOneHot(const Matrix& labels);
// Row index -> class index for one-hot labels.
std::vector<int> ClassIndex(const Matrix& labels);

enum class Activation { kLinear, kRelu };

std::string ActivationName(Activation a);
Activation ParseActivation(const std::string& name);

// Branch architecture: `branches` independent chains
//   A_{l,j} = g(A_{l-1,j} W_{l,j}),  l = 1..L-1,   Ŷ = Σ_j A_{L-1,j} W_{L,j}.
// widths holds m_1..m_{L-1}; the head of each branch is m_{L-1}×K.
struct Architecture {
  int depth = 2;
  int branches = 1;
  int inputs = 1;
  std::vector<int> widths = {1};
  Activation activation = Activation::kLinear;
  bool last_hidden_bias = false;
  // Batch norm before the last hidden ReLU (closed-form path).
  bool batch_norm = false;
  // Trainer extension: batch norm before every hidden ReLU.
  bool batch_norm_all = false;
  int outputs = 1;

  int hidden_layers() const { return depth - 1; }
  // Input width of hidden layer l (1-based).
  int fan_in(int l) const { return l == 1 ? inputs : widths[l - 2]; }
  int last_width() const { return widths.back(); }
  bool has_bn(int l) const {
    return batch_norm_all ? true : (batch_norm && l == depth - 1);
  }
  bool any_bn() const { return batch_norm || batch_norm_all; }
};

void ValidateArchitecture(const Architecture& arch);

struct NetworkParams {
  // weights[j][l-1] = W_{l,j}, l = 1..L-1.
  std::vector<std::vector<Matrix>> weights;
  // head[j] = W_{L,j}, m_{L-1}×K.
  std::vector<Matrix> head;
  // biases[j]: length m_{L-1}, added before the last hidden activation.
  std::vector<Vector> biases;
  // bn_scale[j][l-1], bn_shift[j][l-1]: per-unit γ and α for layer l, empty
  // when the layer has no batch norm.
  std::vector<std::vector<Vector>> bn_scale;
  std::vector<std::vector<Vector>> bn_shift;
  std::optional<Vector> branch_norms;
};

// Zero-initialized parameters with the right shapes (γ = α = 0).
NetworkParams ZeroParams(const Architecture& arch);
void ValidateParams(const NetworkParams& p, const Architecture& arch);

struct Network {
  Architecture arch;
  NetworkParams params;
};

// ‖W_{l,j}‖_F geometric mean over inner layers l ∈ [L-2]; 0 for L = 2.
double ChainNorm(const NetworkParams& p, const Architecture& arch, int branch);

}  // namespace dn

#endif  // DUALITY_NETS_TYPES_H_
