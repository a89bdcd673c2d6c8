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

#include <cmath>

#include <gtest/gtest.h>

#include "duality_nets/error.h"
#include "duality_nets/rescale.h"
#include "duality_nets/rng.h"
#include "duality_nets/train.h"

namespace dn {
namespace {

Architecture Tiny(Activation act, bool bias) {
  Architecture a;
  a.depth = 2;
  a.inputs = 2;
  a.widths = {1};
  a.activation = act;
  a.last_hidden_bias = bias;
  return a;
}

NetworkParams TinyParams(const Architecture& a) {
  NetworkParams p = ZeroParams(a);
  p.weights[0][0] = Matrix{{1}, {2}};
  p.head[0] = Matrix{{3}};
  return p;
}

TEST(Forward, HandComputedOutputs) {
  const Architecture lin = Tiny(Activation::kLinear, false);
  EXPECT_DOUBLE_EQ(ForwardOutput(TinyParams(lin), lin, Matrix{{1, 1}})(0, 0), 9.0);
  const Architecture relu = Tiny(Activation::kRelu, false);
  EXPECT_DOUBLE_EQ(ForwardOutput(TinyParams(relu), relu, Matrix{{1, -1}})(0, 0), 0.0);
  const Architecture biased = Tiny(Activation::kRelu, true);
  NetworkParams p = TinyParams(biased);
  p.biases[0] = {2.0};
  EXPECT_DOUBLE_EQ(ForwardOutput(p, biased, Matrix{{1, -1}})(0, 0), 3.0);
}

TEST(Forward, BranchesSumAtTheHead) {
  Architecture a = Tiny(Activation::kLinear, false);
  a.branches = 2;
  NetworkParams p = ZeroParams(a);
  p.weights[0][0] = Matrix{{1}, {0}};
  p.weights[1][0] = Matrix{{0}, {1}};
  p.head[0] = Matrix{{2}};
  p.head[1] = Matrix{{5}};
  EXPECT_DOUBLE_EQ(ForwardOutput(p, a, Matrix{{1, 1}})(0, 0), 7.0);
}

TEST(BatchNormColumn, CentersAndScales) {
  const Vector h = BatchNormColumn({1, 2, 3}, 1.0, 0.0);
  EXPECT_NEAR(h[0], -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(h[1], 0.0, 1e-15);
  // α/√n = 1 shifts every entry by one.
  const Vector s = BatchNormColumn({1, 2, 3}, 2.0, std::sqrt(3.0));
  EXPECT_NEAR(s[2], 2.0 / std::sqrt(2.0) + 1.0, 1e-15);
  EXPECT_THROW(BatchNormColumn({4, 4, 4}, 1.0, 0.0), Error);
}

TEST(Objective, PrimalAndCanonicalByHand) {
  const Architecture a = Tiny(Activation::kLinear, false);
  const NetworkParams p = TinyParams(a);
  Dataset ds;
  ds.x = Matrix{{1, 1}};
  ds.labels = Matrix{{10}};
  // ½(9 - 10)² + ½(1 + 4 + 9).
  EXPECT_DOUBLE_EQ(PrimalObjective(p, a, ds, 1.0), 7.5);
  EXPECT_DOUBLE_EQ(WeightDecayPenalty(p, a), 7.0);
  const CanonicalParts c = CanonicalObjective(p, a, ds);
  EXPECT_DOUBLE_EQ(c.loss, 0.5);
  EXPECT_NEAR(c.head, 3.0 * std::sqrt(5.0), 1e-14);
  EXPECT_EQ(c.chain, 0.0);
  EXPECT_NEAR(BranchHeadMass(p, a, 0), 3.0 * std::sqrt(5.0), 1e-14);
}

TEST(Objective, LossIsRescalingInvariant) {
  Architecture a;
  a.depth = 4;
  a.branches = 2;
  a.inputs = 3;
  a.widths = {4, 3, 2};
  a.activation = Activation::kRelu;
  a.outputs = 2;
  Rng rng(8);
  Dataset ds;
  ds.x = rng.NormalMatrix(6, 3);
  ds.labels = rng.NormalMatrix(6, 2);
  NetworkParams p = InitParams(a, 1.0, 4);
  const CanonicalParts before = CanonicalObjective(p, a, ds);
  // ReLU is positively homogeneous: scale layer 1 up and the head down.
  p.weights[1][0] *= 3.0;
  p.head[1] *= 1.0 / 3.0;
  const CanonicalParts after = CanonicalObjective(p, a, ds);
  EXPECT_NEAR(after.loss, before.loss, 1e-12);
  EXPECT_GT(std::abs(after.head - before.head), 1e-3);
}

TEST(Objective, BatchNormRegularizesOnlyTheHead) {
  Architecture a;
  a.depth = 3;
  a.inputs = 2;
  a.widths = {3, 1};
  a.activation = Activation::kRelu;
  a.batch_norm = true;
  NetworkParams p = InitParams(a, 1.0, 2);
  p.bn_scale[0][1] = {0.6};
  p.bn_shift[0][1] = {0.8};
  p.head[0] = Matrix{{2}};
  // ½(γ² + α² + ‖W_L‖²) = ½(1 + 4).
  EXPECT_DOUBLE_EQ(WeightDecayPenalty(p, a), 2.5);
}

}  // namespace
}  // namespace dn
