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

#include "duality_nets/closedform.h"

#include <cmath>

#include <gtest/gtest.h>

#include "duality_nets/data.h"
#include "duality_nets/duality.h"
#include "duality_nets/error.h"
#include "duality_nets/forward.h"
#include "duality_nets/rng.h"

namespace dn {
namespace {

Dataset MakeDataset(Matrix x, Matrix y) {
  Dataset ds;
  ds.x = std::move(x);
  ds.labels = std::move(y);
  return ds;
}

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

TEST(FitPlanted, IdentityDesignReturnsLabels) {
  const Dataset ds = MakeDataset(Matrix::Identity(2), Matrix{{3}, {4}});
  const PlantedFit fit = FitPlanted(ds);
  EXPECT_NEAR(fit.w_star(0, 0), 3.0, 1e-12);
  EXPECT_NEAR(fit.w_star(1, 0), 4.0, 1e-12);
  EXPECT_EQ(fit.r_w, 1);
}

TEST(FitPlanted, OrthogonalTargetGivesZero) {
  const Dataset ds = MakeDataset(Matrix{{1, 0}, {0, 0}}, Matrix{{0}, {1}});
  EXPECT_LE(MaxAbs(FitPlanted(ds).w_star), 1e-14);
}

TEST(FitPlanted, DependentColumnsSatisfyNormalEquations) {
  const Dataset ds = MakeDataset(Matrix{{1, 2}, {2, 4}, {0, 0}},
                                 Matrix{{1}, {1}, {1}});
  const PlantedFit fit = FitPlanted(ds);
  const Matrix grad = MatTMul(ds.x, ds.x * fit.w_star - ds.labels);
  EXPECT_LE(MaxAbs(grad), 1e-10);
  EXPECT_NEAR(fit.w_star(1, 0), 2.0 * fit.w_star(0, 0), 1e-12);
}

TEST(ProjectionBall, ScalesOntoBoundary) {
  const Vector p = ProjectionBall(Matrix::Identity(2), Vector{3, 4}, 1.0);
  EXPECT_NEAR(p[0], 0.6, 1e-12);
  EXPECT_NEAR(p[1], 0.8, 1e-12);
}

TEST(ProjectionBall, FeasibleTargetUnchanged) {
  const Vector p = ProjectionBall(Matrix::Identity(2), Vector{0.1, 0.2}, 1.0);
  EXPECT_DOUBLE_EQ(p[0], 0.1);
  EXPECT_DOUBLE_EQ(p[1], 0.2);
}

TEST(ProjectionBall, KktResidualOnScaledDesign) {
  const Matrix x{{2, 0}, {0, 1}};
  const Vector y{1, 1};
  const double beta = 0.3;
  const Vector p = ProjectionBall(x, y, beta);
  EXPECT_NEAR(Norm(MatTVec(x, p)), beta, 1e-12);
  // Projected-gradient oracle: y - p must be a multiple of the constraint
  // gradient XXᵀp.
  const Vector g = x * MatTVec(x, p);
  const Vector r = Sub(y, p);
  const double mu = Dot(r, g) / Dot(g, g);
  EXPECT_LE(Norm(Sub(r, Scaled(g, mu))), 1e-8);
  EXPECT_GT(mu, 0.0);
}

TEST(ProjectionBall, MatrixCaseMatchesSoftThreshold) {
  const Matrix y{{3, 0}, {0, 1}};
  const Matrix p = ProjectionBall(Matrix::Identity(2), y, 2.0);
  // Y - SVT(Y, β) = diag(2, 1).
  EXPECT_NEAR(p(0, 0), 2.0, 1e-10);
  EXPECT_NEAR(p(1, 1), 1.0, 1e-10);
  EXPECT_LE(SpectralNorm(p), 2.0 + 1e-10);
}

TEST(RegularizedLinearFit, FistaMatchesAnalyticOnGeneralDesign) {
  Rng rng(3, 1);
  const Matrix x = rng.NormalMatrix(6, 4);
  const Matrix y = rng.NormalMatrix(6, 3);
  const double beta = 0.7;
  const LinearFit fit = RegularizedLinearFit(x, y, beta);
  // Optimality: Xᵀ residual is in β ∂‖W‖_*.
  const Matrix corr = MatTMul(x, fit.residual);
  EXPECT_LE(SpectralNorm(corr), beta * (1.0 + 1e-7));
  double nuclear = 0.0;
  for (double s : SingularValues(fit.w)) nuclear += s;
  EXPECT_NEAR(FrobeniusDot(corr, fit.w), beta * nuclear, 1e-7 * (1 + nuclear));
}

TEST(ChooseTStar, Values) {
  EXPECT_NEAR(ChooseTStar(2.0, 3), std::cbrt(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(ChooseTStar(1.0, 5), 1.0);
  EXPECT_DOUBLE_EQ(ChooseTStar(0.0, 4), 1.0);
  // Golden-section oracle on g(t) = 2/t + t²/2 over (0, 10].
  double a = 1e-6;
  double b = 10.0;
  auto g = [](double t) { return 2.0 / t + 0.5 * t * t; };
  for (int i = 0; i < 200; ++i) {
    const double m1 = a + (b - a) * 0.381966;
    const double m2 = a + (b - a) * 0.618034;
    (g(m1) < g(m2) ? b : a) = g(m1) < g(m2) ? m2 : m1;
  }
  EXPECT_NEAR(ChooseTStar(2.0, 3), 0.5 * (a + b), 1e-8);
}

TEST(MakeChain, OrthogonalBasis) {
  const Architecture a = Arch(4, 2, 3, {5, 5, 1}, Activation::kRelu, 1);
  const DirectionChain ch = MakeChain(a, ChainMode::kNonnegOrthogonal, {2.0}, 0);
  EXPECT_DOUBLE_EQ(ch.phi(0, 1)[0], 2.0);
  EXPECT_DOUBLE_EQ(ch.phi(1, 1)[1], 2.0);
  EXPECT_DOUBLE_EQ(Dot(ch.rho[0][1], ch.rho[1][1]), 0.0);
}

TEST(MakeChain, ArbitraryUnitSeeded) {
  const Architecture a = Arch(4, 3, 3, {6, 6, 2}, Activation::kLinear, 1);
  const DirectionChain c1 = MakeChain(a, ChainMode::kUnitArbitrary, {1.0}, 7);
  const DirectionChain c2 = MakeChain(a, ChainMode::kUnitArbitrary, {1.0}, 8);
  double diff = 0.0;
  for (int j = 0; j < 3; ++j) {
    for (int l = 0; l < 3; ++l) {
      EXPECT_NEAR(Norm(c1.rho[j][l]), 1.0, 1e-12);
      EXPECT_NEAR(Norm(c2.rho[j][l]), 1.0, 1e-12);
      diff += Norm(Sub(c1.rho[j][l], c2.rho[j][l]));
    }
  }
  EXPECT_GT(diff, 0.1);
  const DirectionChain o = MakeChain(a, ChainMode::kOrthonormalArbitrary, {1.0}, 7);
  EXPECT_NEAR(Dot(o.rho[0][0], o.rho[2][0]), 0.0, 1e-12);
}

TEST(MakeChain, TooNarrow) {
  const Architecture a = Arch(3, 3, 2, {2, 1}, Activation::kRelu, 1);
  try {
    MakeChain(a, ChainMode::kNonnegOrthogonal, {1.0}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWidthTooSmall);
  }
}

TEST(TwoLayerLinear, MinNormUnitTarget) {
  const Dataset ds = MakeDataset(Matrix::Identity(2), Matrix{{1}, {0}});
  const Network net = TwoLayerLinear(ds, 0.0);
  EXPECT_NEAR(net.params.weights[0][0](0, 0), 1.0, 1e-12);
  EXPECT_NEAR(net.params.head[0](0, 0), 1.0, 1e-12);
  EXPECT_NEAR(CanonicalObjective(net.params, net.arch, ds).head, 1.0, 1e-12);
}

TEST(TwoLayerLinear, RegularizedScalar) {
  const Dataset ds = MakeDataset(Matrix::Identity(2), Matrix{{3}, {4}});
  const Network net = TwoLayerLinear(ds, 1.0);
  const Matrix out = ForwardOutput(net.params, net.arch, ds.x);
  EXPECT_NEAR(out(0, 0), 2.4, 1e-12);
  EXPECT_NEAR(out(1, 0), 3.2, 1e-12);
  EXPECT_NEAR(CanonicalObjective(net.params, net.arch, ds).Value(1.0), 4.5, 1e-12);
  const DualCertificate cert = DualityGap(net.params, net.arch, ds, 1.0);
  EXPECT_LE(*cert.relative_gap, 1e-12);
}

TEST(TwoLayerLinear, VectorRankDropsPastSigma) {
  const Dataset ds = MakeDataset(Matrix::Identity(2), Matrix{{3, 0}, {0, 1}});
  const Network net = TwoLayerLinear(ds, 2.0);
  const Matrix out = ForwardOutput(net.params, net.arch, ds.x);
  EXPECT_NEAR(out(0, 0), 1.0, 1e-10);
  EXPECT_NEAR(MaxAbs(out - Matrix{{1, 0}, {0, 0}}), 0.0, 1e-10);
  EXPECT_EQ(NumericalRank(HStack({net.params.weights[0][0], net.params.weights[1][0]})), 1);
}

TEST(TwoLayerLinear, InfeasibleMinNorm) {
  const Dataset ds = MakeDataset(Matrix{{1, 0}, {0, 0}}, Matrix{{0}, {1}});
  try {
    TwoLayerLinear(ds, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
  }
}

TEST(DeepLinear, MinNormChainNorm) {
  const Dataset ds = MakeDataset(Matrix::Identity(2), Matrix{{2}, {0}});
  const Architecture a = Arch(3, 1, 2, {2, 1}, Activation::kLinear, 1);
  const Network net = DeepLinear(ds, 0.0, a);
  const double t = std::cbrt(2.0);
  EXPECT_NEAR(ChainNorm(net.params, a, 0), t, 1e-12);
  const CanonicalParts parts = CanonicalObjective(net.params, a, ds);
  EXPECT_NEAR(parts.head + parts.chain, 2.0 / t + 0.5 * t * t, 1e-12);
  EXPECT_NEAR(parts.head + parts.chain, 2.3811, 1e-4);
  EXPECT_LE(MaxAbs(ForwardOutput(net.params, a, ds.x) - ds.labels), 1e-12);
  // The scaled label appears after the first layer.
  const Vector h = ds.x * net.params.weights[0][0].col(0);
  EXPECT_NEAR(h[1], 0.0, 1e-14);
  EXPECT_GT(h[0], 0.0);
  EXPECT_LE(*DualityGap(net.params, a, ds, 0.0).relative_gap, 1e-12);
}

TEST(DeepLinear, LargeBetaGivesZeroHead) {
  const Dataset ds = MakeDataset(Matrix::Identity(2), Matrix{{3}, {4}});
  const Architecture a = Arch(4, 1, 2, {2, 2, 1}, Activation::kLinear, 1);
  const Network net = DeepLinear(ds, 50.0, a, {TPolicy::kUnit});
  EXPECT_EQ(MaxAbs(net.params.head[0]), 0.0);
}

TEST(DeepLinear, VectorGapSmall) {
  Rng rng(11, 0);
  const Dataset ds = MakeDataset(rng.NormalMatrix(5, 4), rng.NormalMatrix(5, 3));
  const Architecture a = Arch(4, 3, 4, {4, 4, 1}, Activation::kLinear, 3);
  for (TPolicy policy : {TPolicy::kUnit, TPolicy::kOptimal}) {
    const Network net = DeepLinear(ds, 0.8, a, {policy});
    const DualCertificate cert = DualityGap(net.params, a, ds, 0.8);
    EXPECT_LE(*cert.relative_gap, 1e-8);
    for (int j = 0; j < 3; ++j) {
      for (int l = 1; l <= 2; ++l) {
        const Vector s = SingularValues(net.params.weights[j][l - 1]);
        if (s[0] > 0.0) EXPECT_LE(s[1] / s[0], 1e-10);
      }
    }
  }
}

TEST(DeepReluRankOne, SplineInterpolatesAtData) {
  Dataset ds = MakeDataset(Matrix{{1}, {2}, {3}}, Matrix{{1}, {0}, {2}});
  ds.rank_one = RankOneFactor{{1, 2, 3}, {1}};
  Architecture a = Arch(2, 6, 1, {1}, Activation::kRelu, 1);
  a.last_hidden_bias = true;
  const Network net = DeepReluRankOne(ds, a, 0.0);
  EXPECT_LE(MaxAbs(ForwardOutput(net.params, a, ds.x) - ds.labels), 1e-9);
  // Every active unit kinks at a data point.
  for (int j = 0; j < a.branches; ++j) {
    if (MaxAbs(net.params.head[j]) == 0.0) continue;
    const double w = net.params.weights[j][0](0, 0);
    const double kink = -net.params.biases[j][0] / w;
    EXPECT_TRUE(std::abs(kink - 1) < 1e-12 || std::abs(kink - 2) < 1e-12 ||
                std::abs(kink - 3) < 1e-12);
  }
}

TEST(DeepReluRankOne, NoBiasHeadScalar) {
  Dataset ds = MakeDataset(Matrix{{1, 0}, {2, 0}}, Matrix{{2}, {4}});
  ds.rank_one = RankOneFactor{{1, 2}, {1, 0}};
  const Architecture a = Arch(3, 1, 2, {2, 1}, Activation::kRelu, 1);
  const Network net = DeepReluRankOne(ds, a, 0.0);
  // Demand ‖q‖/‖a₀‖ = 2 → t* = 2^{1/3}; head = 2/(‖a₀‖ t*).
  const double t = std::cbrt(2.0);
  EXPECT_NEAR(ChainNorm(net.params, a, 0), t, 1e-12);
  EXPECT_NEAR(MaxAbs(net.params.head[0]), 2.0 / t, 1e-12);
  EXPECT_LE(MaxAbs(ForwardOutput(net.params, a, ds.x) - ds.labels), 1e-12);
}

TEST(DeepReluRankOne, SinglePointExact) {
  Dataset ds = MakeDataset(Matrix{{2}}, Matrix{{5}});
  ds.rank_one = RankOneFactor{{2}, {1}};
  Architecture a = Arch(2, 3, 1, {1}, Activation::kRelu, 1);
  a.last_hidden_bias = true;
  const Network net = DeepReluRankOne(ds, a, 0.0);
  EXPECT_NEAR(ForwardOutput(net.params, a, ds.x)(0, 0), 5.0, 1e-12);
}

TEST(DeepReluRankOne, OutsideSpanInfeasible) {
  Dataset ds = MakeDataset(Matrix{{1}, {2}}, Matrix{{1}, {1}});
  ds.rank_one = RankOneFactor{{1, 2}, {1}};
  const Architecture a = Arch(2, 1, 1, {1}, Activation::kRelu, 1);
  try {
    DeepReluRankOne(ds, a, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
  }
}

TEST(DeepReluRankOne, DuplicateAbscissa) {
  Dataset ds = MakeDataset(Matrix{{1}, {1}}, Matrix{{1}, {2}});
  ds.rank_one = RankOneFactor{{1, 1}, {1}};
  Architecture a = Arch(2, 4, 1, {1}, Activation::kRelu, 1);
  a.last_hidden_bias = true;
  try {
    DeepReluRankOne(ds, a, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateAbscissa);
  }
}

TEST(DeepReluRankOne, RegularizedBiasGap) {
  Dataset ds = MakeDataset(Matrix{{0.5}, {1.2}, {2}, {2.6}}, Matrix{{1}, {-1}, {0.5}, {2}});
  ds.rank_one = RankOneFactor{{0.5, 1.2, 2, 2.6}, {1}};
  Architecture a = Arch(2, 9, 1, {1}, Activation::kRelu, 1);
  a.last_hidden_bias = true;
  const Network net = DeepReluRankOne(ds, a, 0.3);
  const DualCertificate cert = DualityGap(net.params, a, ds, 0.3);
  EXPECT_LE(*cert.relative_gap, 1e-8);
}

Dataset WhitenedIdentity() {
  Dataset ds = MakeDataset(Matrix::Identity(2), Matrix::Identity(2));
  ds.whitened = true;
  ds.class_sizes = {1, 1};
  return ds;
}

TEST(DeepReluWhitened, IdentityExample) {
  const Dataset ds = WhitenedIdentity();
  const Architecture a = Arch(3, 2, 2, {2, 2}, Activation::kRelu, 2);
  const Network net = DeepReluWhitened(ds, 0.5, a);
  const Matrix out = ForwardOutput(net.params, a, ds.x);
  EXPECT_LE(MaxAbs(out - Matrix::Identity(2) * 0.5), 1e-12);
  EXPECT_NEAR(CanonicalObjective(net.params, a, ds).Value(0.5, false), 0.75, 1e-12);
  EXPECT_NEAR(OptimumValueFormula(ds, 0.5), 0.75, 1e-15);
  EXPECT_LE(*DualityGap(net.params, a, ds, 0.5).relative_gap, 1e-12);
}

TEST(DeepReluWhitened, ThresholdedToZero) {
  const Dataset ds = WhitenedIdentity();
  const Architecture a = Arch(3, 2, 2, {2, 2}, Activation::kRelu, 2);
  const Network net = DeepReluWhitened(ds, 1.5, a);
  EXPECT_EQ(MaxAbs(ForwardOutput(net.params, a, ds.x)), 0.0);
  EXPECT_NEAR(PrimalObjective(net.params, a, ds, 1.5), 1.0, 1e-15);
}

TEST(DeepReluWhitened, RequiresWhitening) {
  Dataset ds = WhitenedIdentity();
  ds.whitened = false;
  const Architecture a = Arch(3, 2, 2, {2, 2}, Activation::kRelu, 2);
  try {
    DeepReluWhitened(ds, 0.5, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPreconditionViolated);
  }
}

TEST(BnHead, BalancedFourTwo) {
  Dataset ds = MakeDataset(Matrix::Identity(4), BalancedOneHot(4, 2));
  ds.whitened = true;
  ds.class_sizes = {2, 2};
  const Architecture a = [] {
    Architecture r = Arch(3, 2, 4, {6, 1}, Activation::kRelu, 2);
    r.batch_norm = true;
    return r;
  }();
  const Network net = BnNetwork(ds, 0.2, a, nullptr, 5);
  for (int j = 0; j < 2; ++j) {
    const double g = net.params.bn_scale[j][1][0];
    const double al = net.params.bn_shift[j][1][0];
    EXPECT_NEAR(g, 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(al, 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(g * g + al * al, 1.0, 1e-12);
  }
  const Matrix out = ForwardOutput(net.params, a, ds.x);
  const double s = (std::sqrt(2.0) - 0.2) / std::sqrt(2.0);
  EXPECT_LE(MaxAbs(out - ds.labels * s), 1e-10);
  EXPECT_NEAR(CanonicalObjective(net.params, a, ds).Value(0.2),
              OptimumValueFormula(ds, 0.2), 1e-10);
  EXPECT_NEAR(OptimumValueFormula(ds, 0.2), -0.04 + 0.4 * std::sqrt(2.0), 1e-12);
  EXPECT_LE(*DualityGap(net.params, a, ds, 0.2).relative_gap, 1e-10);
  const Network zero = BnNetwork(ds, 2.0, a, nullptr, 5);
  EXPECT_EQ(MaxAbs(ForwardOutput(zero.params, a, ds.x)), 0.0);
}

TEST(BnHead, RangeViolation) {
  Dataset ds = MakeDataset(Matrix::Identity(4), BalancedOneHot(4, 2));
  std::vector<Matrix> acts(2, Matrix(4, 1, 1.0));
  try {
    BnHead(acts, ds, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOverparamAssumptionViolated);
  }
}

}  // namespace
}  // namespace dn
