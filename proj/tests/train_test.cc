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

#include "duality_nets/train.h"

#include <cmath>

#include <gtest/gtest.h>

#include "duality_nets/closedform.h"
#include "duality_nets/data.h"
#include "duality_nets/error.h"
#include "duality_nets/forward.h"
#include "duality_nets/rescale.h"
#include "duality_nets/rng.h"

namespace dn {
namespace {

Architecture Arch(int depth, int branches, int d, std::vector<int> widths,
                  Activation act, int k) {
  Architecture a;
  a.depth = depth;
  a.branches = branches;
  a.inputs = d;
  a.widths = std::move(widths);
  a.activation = act;
  a.outputs = k;
  return a;
}

TEST(InitParams, DeterministicAndScaled) {
  const Architecture a = Arch(3, 2, 4, {8, 3}, Activation::kRelu, 2);
  const NetworkParams p1 = InitParams(a, 1.0, 9);
  const NetworkParams p2 = InitParams(a, 1.0, 9);
  EXPECT_EQ(p1.weights[1][0], p2.weights[1][0]);
  EXPECT_EQ(p1.head[0], p2.head[0]);
  EXPECT_LE(MaxAbs(p1.weights[0][0]), 1.0 / 2.0);
  EXPECT_THROW(InitParams(a, 0.0, 1), Error);
}

TEST(InitParams, EntryStdShrinksWithFanIn) {
  auto var = [](int fan_in) {
    const Architecture a = Arch(2, 1, fan_in, {400}, Activation::kLinear, 1);
    const Matrix w = InitParams(a, 1.0, 3).weights[0][0];
    double s = 0.0;
    for (int i = 0; i < w.size(); ++i) s += w.data()[i] * w.data()[i];
    return s / w.size();
  };
  // Uniform on ±1/√f has variance 1/(3f).
  EXPECT_NEAR(var(4) * 12.0, 1.0, 0.05);
  EXPECT_NEAR(var(64) * 192.0, 1.0, 0.05);
}

TEST(Gradients, HandChain) {
  const Architecture a = Arch(2, 1, 1, {1}, Activation::kLinear, 1);
  NetworkParams p = ZeroParams(a);
  p.weights[0][0](0, 0) = 1.0;
  p.head[0](0, 0) = 1.0;
  Dataset ds;
  ds.x = Matrix{{1}};
  ds.labels = Matrix{{2}};
  const NetworkParams g = Gradients(p, a, ds, 0.0);
  EXPECT_DOUBLE_EQ(g.weights[0][0](0, 0), -1.0);
  EXPECT_DOUBLE_EQ(g.head[0](0, 0), -1.0);
}

Dataset Random(int n, int d, int k, uint64_t seed) {
  Rng rng(seed, 2);
  Dataset ds;
  ds.x = rng.NormalMatrix(n, d);
  ds.labels = rng.NormalMatrix(n, k);
  return ds;
}

TEST(FdCheck, LinearReluBiasBn) {
  const Dataset ds = Random(6, 3, 2, 1);
  Architecture lin = Arch(4, 2, 3, {4, 3, 2}, Activation::kLinear, 2);
  EXPECT_LE(FdCheck(InitParams(lin, 1.0, 1), lin, ds, 0.3, 1e-5), 1e-7);
  Architecture relu = Arch(3, 3, 3, {5, 2}, Activation::kRelu, 2);
  relu.last_hidden_bias = true;
  NetworkParams rp = InitParams(relu, 1.0, 2);
  for (auto& b : rp.biases) b = Vector(b.size(), 0.1);
  EXPECT_LE(FdCheck(rp, relu, ds, 0.2, 1e-6), 1e-5);
  Architecture bn = Arch(3, 2, 3, {5, 2}, Activation::kRelu, 2);
  bn.batch_norm_all = true;
  bn.batch_norm = true;
  NetworkParams bp = InitParams(bn, 1.0, 3);
  for (auto& s : bp.bn_shift) {
    for (auto& v : s) v = Vector(v.size(), 0.3);
  }
  EXPECT_LE(FdCheck(bp, bn, ds, 0.1, 1e-6), 1e-4);
}

TEST(FdCheck, RejectsEpsilon) {
  const Architecture a = Arch(2, 1, 1, {1}, Activation::kLinear, 1);
  Dataset ds;
  ds.x = Matrix{{1}};
  ds.labels = Matrix{{2}};
  EXPECT_THROW(FdCheck(ZeroParams(a), a, ds, 0.0, 1e-2), Error);
}

TEST(Gradients, ClosedFormIsStationary) {
  Rng rng(4, 0);
  Dataset ds;
  ds.x = rng.NormalMatrix(5, 3);
  ds.labels = rng.NormalMatrix(5, 1);
  const Network net = TwoLayerLinear(ds, 0.5);
  const NetworkParams wd = ToWeightDecayForm(net.params, net.arch).first;
  EXPECT_LE(GradientNorm(Gradients(wd, net.arch, ds, 0.5), net.arch), 1e-9);
}

TEST(RunTraining, LargeBetaKillsWeights) {
  const Dataset ds = Random(5, 3, 1, 7);
  const Architecture a = Arch(2, 4, 3, {1}, Activation::kLinear, 1);
  TrainConfig c;
  c.learning_rate = 0.02;
  c.momentum = 0.5;
  c.steps = 3000;
  c.beta = 100.0;
  const Trajectory tr = RunTraining(InitParams(a, 1.0, 1), a, ds, c);
  EXPECT_LE(MaxAbs(tr.final_params.weights[0][0]), 1e-6);
  EXPECT_NEAR(tr.final_objective, 0.5 * std::pow(FrobeniusNorm(ds.labels), 2), 1e-6);
}

TEST(RunTraining, DeterministicUnderSeed) {
  const Dataset ds = Random(8, 3, 2, 8);
  const Architecture a = Arch(3, 2, 3, {4, 2}, Activation::kRelu, 2);
  TrainConfig c;
  c.steps = 50;
  c.batch_size = 3;
  c.seed = 5;
  c.probe_every = 10;
  const Trajectory t1 = RunTraining(InitParams(a, 1.0, 2), a, ds, c);
  const Trajectory t2 = RunTraining(InitParams(a, 1.0, 2), a, ds, c);
  ASSERT_EQ(t1.points.size(), t2.points.size());
  for (size_t i = 0; i < t1.points.size(); ++i) {
    EXPECT_EQ(t1.points[i].objective, t2.points[i].objective);
    if (i > 0) EXPECT_GT(t1.points[i].step, t1.points[i - 1].step);
  }
}

TEST(RunTraining, Diverges) {
  const Dataset ds = Random(5, 3, 1, 9);
  const Architecture a = Arch(3, 1, 3, {3, 1}, Activation::kLinear, 1);
  TrainConfig c;
  c.learning_rate = 50.0;
  c.steps = 200;
  try {
    RunTraining(InitParams(a, 1.0, 1), a, ds, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDiverged);
  }
}

}  // namespace
}  // namespace dn
