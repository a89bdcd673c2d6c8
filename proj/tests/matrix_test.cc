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

#include "duality_nets/matrix.h"

#include <cmath>

#include <gtest/gtest.h>

#include "duality_nets/error.h"
#include "duality_nets/rng.h"

namespace dn {
namespace {

double OrthogonalityError(const Matrix& q) {
  return MaxAbsDiff(MatTMul(q, q), Matrix::Identity(q.cols()));
}

TEST(Matrix, ProductsAndTransposes) {
  const Matrix a{{1, 2, 3}, {4, 5, 6}};
  const Matrix b{{1, 0}, {0, 1}, {1, 1}};
  EXPECT_EQ(a * b, (Matrix{{4, 5}, {10, 11}}));
  EXPECT_EQ(MatTMul(a, a), a.transpose() * a);
  EXPECT_EQ(MatMulT(a, a), (Matrix{{14, 32}, {32, 77}}));
  EXPECT_EQ(MatTVec(a, {1, 1}), (Vector{5, 7, 9}));
  EXPECT_THROW(a * a, Error);
}

TEST(Matrix, StackingAndBlocks) {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix h = HStack({a, Matrix::ColumnVector({5, 6})});
  EXPECT_EQ(h, (Matrix{{1, 2, 5}, {3, 4, 6}}));
  EXPECT_EQ(VStack({a, Matrix::RowVector({7, 8})}).row(2), (Vector{7, 8}));
  EXPECT_EQ(h.block(0, 1, 2, 2), (Matrix{{2, 5}, {4, 6}}));
  EXPECT_EQ(h.select_rows({1}), (Matrix{{3, 4, 6}}));
}

TEST(Matrix, NormsByHand) {
  const Matrix a{{3, 0}, {4, 0}};
  EXPECT_DOUBLE_EQ(FrobeniusNorm(a), 5.0);
  EXPECT_DOUBLE_EQ(MaxAbs(a), 4.0);
  EXPECT_DOUBLE_EQ(Norm({3, 4}), 5.0);
  EXPECT_EQ(PositivePart({-1, 2}), (Vector{0, 2}));
}

TEST(Svd, TwoByTwoByHand) {
  // AᵀA = [[25, 20], [20, 25]] has eigenvalues 45 and 5.
  const SvdResult s = Svd(Matrix{{3, 0}, {4, 5}});
  EXPECT_NEAR(s.sigma[0], std::sqrt(45.0), 1e-13);
  EXPECT_NEAR(s.sigma[1], std::sqrt(5.0), 1e-13);
}

TEST(Svd, ReconstructsTallAndWide) {
  Rng rng(11);
  for (auto [n, d] : {std::pair{7, 4}, std::pair{4, 7}, std::pair{5, 5}}) {
    const Matrix a = rng.NormalMatrix(n, d);
    const SvdResult s = Svd(a);
    ASSERT_EQ(s.u.rows(), n);
    ASSERT_EQ(s.v.rows(), d);
    Matrix sig(n, d);
    for (size_t i = 0; i < s.sigma.size(); ++i) sig(i, i) = s.sigma[i];
    EXPECT_LE(MaxAbsDiff(s.u * sig * s.v.transpose(), a), 1e-12);
    EXPECT_LE(OrthogonalityError(s.u), 1e-12);
    EXPECT_LE(OrthogonalityError(s.v), 1e-12);
    for (size_t i = 1; i < s.sigma.size(); ++i) EXPECT_GE(s.sigma[i - 1], s.sigma[i]);
  }
}

TEST(Svd, RankDeficient) {
  const Matrix a = Outer({1, 2, 3}, {1, -1});
  EXPECT_EQ(NumericalRank(a), 1);
  EXPECT_NEAR(SpectralNorm(a), std::sqrt(14.0) * std::sqrt(2.0), 1e-12);
  EXPECT_EQ(NumericalRank(Matrix(3, 3)), 0);
}

TEST(Pinv, MoorePenroseConditions) {
  Rng rng(5);
  const Matrix a = rng.NormalMatrix(5, 2) * rng.NormalMatrix(2, 4);  // rank 2
  const Matrix p = Pinv(a);
  EXPECT_LE(MaxAbsDiff(a * p * a, a), 1e-11);
  EXPECT_LE(MaxAbsDiff(p * a * p, p), 1e-11);
  EXPECT_LE(MaxAbsDiff((a * p).transpose(), a * p), 1e-11);
  EXPECT_LE(MaxAbsDiff((p * a).transpose(), p * a), 1e-11);
}

TEST(SingularValueThreshold, ShrinksSpectrum) {
  const Matrix d = Matrix::Diagonal({3.0, 1.0, 0.5});
  const Matrix t = SingularValueThreshold(d, 0.75);
  EXPECT_LE(MaxAbsDiff(t, Matrix::Diagonal({2.25, 0.25, 0.0})), 1e-14);
  EXPECT_EQ(MaxAbs(SingularValueThreshold(d, 5.0)), 0.0);
}

}  // namespace
}  // namespace dn
