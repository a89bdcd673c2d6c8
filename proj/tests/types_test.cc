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

#include <functional>

#include <gtest/gtest.h>

#include "duality_nets/error.h"

namespace dn {
namespace {

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

TEST(Dataset, Validation) {
  Dataset ds;
  ds.x = Matrix(3, 2, 1.0);
  ds.labels = Matrix(2, 1);
  EXPECT_EQ(CodeOf([&] { ValidateDataset(ds); }), ErrorCode::kShapeError);
  ds.labels = Matrix(3, 1);
  ds.rank_one = RankOneFactor{{1, 1, 1}, {1, 1}};
  EXPECT_EQ(CodeOf([&] { ValidateDataset(ds); }), ErrorCode::kOk);
  ds.rank_one = RankOneFactor{{1, 2, 1}, {1, 1}};
  EXPECT_EQ(CodeOf([&] { ValidateDataset(ds); }), ErrorCode::kPreconditionViolated);
  ds.rank_one.reset();
  ds.whitened = true;
  EXPECT_EQ(CodeOf([&] { ValidateDataset(ds); }), ErrorCode::kPreconditionViolated);
}

TEST(Labels, OneHotAndClassIndex) {
  const Matrix y{{0, 1}, {1, 0}, {0, 1}};
  EXPECT_TRUE(IsOneHot(y));
  EXPECT_EQ(ClassIndex(y), (std::vector<int>{1, 0, 1}));
  EXPECT_FALSE(IsOneHot(Matrix{{1, 1}, {0, 1}}));
  EXPECT_FALSE(IsOneHot(Matrix{{0.5, 0.5}}));
  EXPECT_THROW(ClassIndex(Matrix{{2, 0}}), Error);
}

TEST(Activation, NamesRoundTrip) {
  EXPECT_EQ(ParseActivation(ActivationName(Activation::kRelu)), Activation::kRelu);
  EXPECT_EQ(ParseActivation("linear"), Activation::kLinear);
  EXPECT_THROW(ParseActivation("tanh"), Error);
}

TEST(Architecture, Validation) {
  Architecture a;
  a.depth = 3;
  a.widths = {4};
  EXPECT_THROW(ValidateArchitecture(a), Error);
  a.widths = {4, 2};
  EXPECT_NO_THROW(ValidateArchitecture(a));
  a.batch_norm = true;
  EXPECT_THROW(ValidateArchitecture(a), Error);  // BN needs relu
  a.activation = Activation::kRelu;
  EXPECT_TRUE(a.has_bn(2));
  EXPECT_FALSE(a.has_bn(1));
  EXPECT_EQ(a.fan_in(2), 4);
}

TEST(NetworkParams, ZeroShapesValidate) {
  Architecture a;
  a.depth = 3;
  a.branches = 2;
  a.inputs = 5;
  a.widths = {4, 3};
  a.activation = Activation::kRelu;
  a.last_hidden_bias = true;
  a.batch_norm = true;
  a.outputs = 2;
  NetworkParams p = ZeroParams(a);
  EXPECT_NO_THROW(ValidateParams(p, a));
  EXPECT_EQ(p.weights[1][0].rows(), 5);
  EXPECT_EQ(p.weights[1][1].cols(), 3);
  EXPECT_EQ(p.head[0].rows(), 3);
  EXPECT_EQ(p.bn_scale[0][1].size(), 3u);
  EXPECT_EQ(p.bn_scale[0][0].size(), 0u);
  p.head[1] = Matrix(2, 2);
  EXPECT_EQ(CodeOf([&] { ValidateParams(p, a); }), ErrorCode::kShapeError);
}

TEST(ChainNorm, GeometricMeanOfInnerLayers) {
  Architecture a;
  a.depth = 4;
  a.inputs = 1;
  a.widths = {1, 1, 1};
  NetworkParams p = ZeroParams(a);
  p.weights[0][0](0, 0) = 2.0;
  p.weights[0][1](0, 0) = 8.0;
  EXPECT_DOUBLE_EQ(ChainNorm(p, a, 0), 4.0);
}

}  // namespace
}  // namespace dn
