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

#include "duality_nets/duality.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "duality_nets/closedform.h"
#include "duality_nets/error.h"
#include "duality_nets/forward.h"

namespace dn {

namespace {

constexpr int kMaxBruteForce = 20;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Lawson–Hanson: argmin_{μ >= 0} ‖Aμ - b‖.
Vector Nnls(const Matrix& a, const Vector& b) {
  const int p = a.cols();
  Vector x(p, 0.0);
  std::vector<bool> passive(p, false);
  const double scale = std::max(1.0, Norm(b)) * std::max(1.0, MaxAbs(a));
  const double tol = 1e-13 * scale;
  auto solve_passive = [&]() {
    std::vector<int> idx;
    for (int j = 0; j < p; ++j) {
      if (passive[j]) idx.push_back(j);
    }
    Matrix sub(a.rows(), static_cast<int>(idx.size()));
    for (int i = 0; i < a.rows(); ++i) {
      for (size_t q = 0; q < idx.size(); ++q) sub(i, static_cast<int>(q)) = a(i, idx[q]);
    }
    const Vector zs = Pinv(sub, 1e-13) * b;
    Vector z(p, 0.0);
    for (size_t q = 0; q < idx.size(); ++q) z[idx[q]] = zs[q];
    return z;
  };
  for (int outer = 0; outer < 3 * p + 3; ++outer) {
    const Vector w = MatTVec(a, Sub(b, a * x));
    int best = -1;
    for (int j = 0; j < p; ++j) {
      if (!passive[j] && w[j] > tol && (best < 0 || w[j] > w[best])) best = j;
    }
    if (best < 0) break;
    passive[best] = true;
    for (int inner = 0; inner < 3 * p + 3; ++inner) {
      const Vector z = solve_passive();
      double alpha = 1.0;
      bool clipped = false;
      for (int j = 0; j < p; ++j) {
        if (passive[j] && z[j] <= 0.0) {
          const double step = x[j] / (x[j] - z[j]);
          if (step < alpha) alpha = step;
          clipped = true;
        }
      }
      if (!clipped) {
        x = z;
        break;
      }
      for (int j = 0; j < p; ++j) {
        x[j] += alpha * (z[j] - x[j]);
        if (passive[j] && x[j] <= tol) {
          passive[j] = false;
          x[j] = 0.0;
        }
      }
    }
  }
  return x;
}

// ‖Π_K(g)‖ for K = {w : Dw <= 0}, via Moreau: Π_K(g) = g - Π_{K°}(g).
double ConeProjectionNorm(const Matrix& d, const Vector& g) {
  if (d.rows() == 0) return Norm(g);
  const Matrix dt = d.transpose();
  const Vector mu = Nnls(dt, g);
  return Norm(Sub(g, dt * mu));
}

// Patterns over rows of `rows` (the shifted data): active rows satisfy
// r_iᵀw >= 0, the rest r_iᵀw <= 0; the objective is Σ_active λ_i r_iᵀw.
double PatternMax(const Vector& lambda, const Matrix& rows) {
  const int n = rows.rows();
  const int d = rows.cols();
  double best = 0.0;
  for (uint64_t mask = 0; mask < (uint64_t{1} << n); ++mask) {
    Vector g(d, 0.0);
    Matrix cone(n, d);
    bool any = false;
    for (int i = 0; i < n; ++i) {
      const bool on = (mask >> i) & 1U;
      const double sgn = on ? -1.0 : 1.0;
      for (int c = 0; c < d; ++c) cone(i, c) = sgn * rows(i, c);
      if (on && lambda[i] != 0.0) {
        any = true;
        for (int c = 0; c < d; ++c) g[c] += lambda[i] * rows(i, c);
      }
    }
    if (!any) continue;
    best = std::max(best, ConeProjectionNorm(cone, g));
    best = std::max(best, ConeProjectionNorm(cone, Scaled(g, -1.0)));
  }
  return best;
}

bool OneSigned(const Vector& v) {
  bool pos = true;
  bool neg = true;
  for (double x : v) {
    pos = pos && x >= 0.0;
    neg = neg && x <= 0.0;
  }
  return pos || neg;
}

double ColumnSumMax(const Matrix& lambda) {
  double worst = 0.0;
  for (int k = 0; k < lambda.cols(); ++k) {
    double s = 0.0;
    for (int i = 0; i < lambda.rows(); ++i) s += lambda(i, k);
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

// max_{k, σ = ±1} ‖Λᵀ(σ(c - c_k))₊‖ after checking Σλ = 0.
double HingeMax(const Matrix& lambda, const Vector& c) {
  const int n = lambda.rows();
  if (ColumnSumMax(lambda) > 1e-9 * (1.0 + FrobeniusNorm(lambda) * std::sqrt(n))) {
    return kInf;
  }
  double best = 0.0;
  for (int k = 0; k < n; ++k) {
    for (double sgn : {1.0, -1.0}) {
      Vector f(n);
      for (int i = 0; i < n; ++i) f[i] = std::max(sgn * (c[i] - c[k]), 0.0);
      best = std::max(best, Norm(MatTVec(lambda, f)));
    }
  }
  return best;
}

double NormSq(const Matrix& m) { return FrobeniusDot(m, m); }

}  // namespace

DualSetting ClassifyDualSetting(const Dataset& ds, const Architecture& arch) {
  if (arch.any_bn()) return DualSetting::kBatchNorm;
  if (arch.activation == Activation::kLinear) {
    Require(!arch.last_hidden_bias, ErrorCode::kNoDualConstruction,
            "linear networks with bias have no dual construction here");
    return DualSetting::kLinear;
  }
  if (ds.rank_one) {
    const bool one_signed = OneSigned(ds.rank_one->c);
    Require(arch.depth == 2 || one_signed, ErrorCode::kNoDualConstruction,
            "deep rank-one dual needs c of one sign");
    return arch.last_hidden_bias ? DualSetting::kReluRankOneBias
                                 : DualSetting::kReluRankOne;
  }
  if (ds.whitened && !arch.last_hidden_bias) return DualSetting::kReluWhitened;
  if (arch.depth == 2 && arch.outputs == 1) return DualSetting::kReluBruteForce;
  Fail(ErrorCode::kNoDualConstruction,
       "no dual construction for deep ReLU on unstructured data");
}

double DualObjective(const Matrix& lambda, const Dataset& ds, DualForm form) {
  Require(lambda.rows() == ds.n() && lambda.cols() == ds.k(),
          ErrorCode::kShapeError, "dual variable shape differs from labels");
  if (form == DualForm::kMinNorm) return FrobeniusDot(lambda, ds.labels);
  return -0.5 * NormSq(lambda - ds.labels) + 0.5 * NormSq(ds.labels);
}

double NonnegBallMax(const Matrix& lambda) {
  const int n = lambda.rows();
  const int kk = lambda.cols();
  if (kk == 1) {
    const Vector l = lambda.col(0);
    return std::max(Norm(PositivePart(l)), Norm(PositivePart(Scaled(l, -1.0))));
  }
  std::vector<int> rows;
  for (int i = 0; i < n; ++i) {
    if (Norm(lambda.row(i)) > 0.0) rows.push_back(i);
  }
  bool disjoint = true;
  for (int i : rows) {
    int nz = 0;
    for (int k = 0; k < kk; ++k) nz += lambda(i, k) != 0.0 ? 1 : 0;
    disjoint = disjoint && nz <= 1;
  }
  if (disjoint) {
    double best = 0.0;
    for (int k = 0; k < kk; ++k) {
      const Vector l = lambda.col(k);
      best = std::max(best, Norm(PositivePart(l)));
      best = std::max(best, Norm(PositivePart(Scaled(l, -1.0))));
    }
    return best;
  }
  const int m = static_cast<int>(rows.size());
  Require(m <= kMaxBruteForce, ErrorCode::kTooLargeForBruteForce,
          std::to_string(m) + " nonzero dual rows exceed the enumeration cap of " +
              std::to_string(kMaxBruteForce));
  // A maximizer with support S is a one-signed left singular vector of Λ_S.
  double best = 0.0;
  for (uint64_t mask = 1; mask < (uint64_t{1} << m); ++mask) {
    std::vector<int> sub;
    for (int q = 0; q < m; ++q) {
      if ((mask >> q) & 1U) sub.push_back(rows[q]);
    }
    const Matrix ls = lambda.select_rows(sub);
    const SvdResult s = Svd(ls);
    for (size_t i = 0; i < s.sigma.size(); ++i) {
      if (s.sigma[i] <= best) break;
      if (OneSigned(s.u.col(static_cast<int>(i)))) {
        best = s.sigma[i];
        break;
      }
    }
  }
  return best;
}

double BruteForceReluExtreme(const Vector& lambda, const Matrix& x, bool bias) {
  const int n = x.rows();
  Require(static_cast<int>(lambda.size()) == n, ErrorCode::kShapeError,
          "λ length differs from n");
  Require(n <= kMaxBruteForce, ErrorCode::kTooLargeForBruteForce,
          "n = " + std::to_string(n) + " exceeds the brute-force cap of " +
              std::to_string(kMaxBruteForce));
  if (!bias) return PatternMax(lambda, x);
  double total = 0.0;
  double mass = 0.0;
  for (double v : lambda) {
    total += v;
    mass += std::abs(v);
  }
  if (std::abs(total) > 1e-9 * (1.0 + mass)) return kInf;
  // With a free bias the optimum sits where some unit is exactly at its
  // kink: b = -x_kᵀw, leaving rows x_i - x_k (row k drops out).
  double best = 0.0;
  for (int k = 0; k < n; ++k) {
    Matrix shifted(n - 1, x.cols());
    Vector lam(n - 1);
    int r = 0;
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      for (int c = 0; c < x.cols(); ++c) shifted(r, c) = x(i, c) - x(k, c);
      lam[r++] = lambda[i];
    }
    best = std::max(best, PatternMax(lam, shifted));
  }
  return best;
}

double DualFeasibility(const Matrix& lambda, const Dataset& ds, double beta,
                       const Architecture& arch, double t) {
  Require(beta >= 0.0 && t > 0.0, ErrorCode::kInvalidInput,
          "need beta >= 0 and t > 0");
  Require(lambda.rows() == ds.n() && lambda.cols() == ds.k(),
          ErrorCode::kShapeError, "dual variable shape differs from labels");
  const double chain = std::pow(t, arch.depth - 2);
  switch (ClassifyDualSetting(ds, arch)) {
    case DualSetting::kLinear: {
      const Matrix corr = MatTMul(lambda, ds.x);  // ΛᵀX
      return chain * (ds.k() == 1 ? Norm(corr.row(0)) : SpectralNorm(corr));
    }
    case DualSetting::kReluWhitened:
      return chain * NonnegBallMax(lambda);
    case DualSetting::kBatchNorm:
      return NonnegBallMax(lambda);
    case DualSetting::kReluRankOne: {
      const Vector& c = ds.rank_one->c;
      const double a0 = Norm(ds.rank_one->a0);
      const double up = Norm(MatTVec(lambda, PositivePart(c)));
      const double down = Norm(MatTVec(lambda, PositivePart(Scaled(c, -1.0))));
      return a0 * chain * std::max(up, down);
    }
    case DualSetting::kReluRankOneBias: {
      const double a0 = Norm(ds.rank_one->a0);
      return a0 * chain * HingeMax(lambda, ds.rank_one->c);
    }
    case DualSetting::kReluBruteForce:
      return BruteForceReluExtreme(lambda.col(0), ds.x, arch.last_hidden_bias);
  }
  Fail(ErrorCode::kInternal, "unhandled dual setting");
}

DualCertificate OptimalDual(const Dataset& ds, double beta, double t,
                            int depth) {
  Require(beta >= 0.0 && t > 0.0 && depth >= 2, ErrorCode::kInvalidInput,
          "need beta >= 0, t > 0, L >= 2");
  DualCertificate cert;
  cert.beta = beta;
  cert.t = t;
  const double beta_eff = beta * std::pow(t, 2 - depth);
  cert.lambda = ds.labels;
  double worst = 0.0;
  for (int k = 0; k < ds.k(); ++k) {
    const Vector yk = ds.labels.col(k);
    const double yn = Norm(yk);
    if (yn > 0.0 && beta_eff <= yn) {
      cert.lambda.set_col(k, Scaled(yk, beta_eff / yn));
      cert.active_set.push_back(k);
    }
  }
  const Matrix& l = cert.lambda;
  worst = NonnegBallMax(l) * std::pow(t, depth - 2);
  cert.worst_constraint = worst;
  cert.dual_value = DualObjective(l, ds, DualForm::kRegularized);
  return cert;
}

double OptimumValueFormula(const Dataset& ds, double beta) {
  Require(beta >= 0.0, ErrorCode::kInvalidInput, "beta must be >= 0");
  double value = 0.0;
  for (int k = 0; k < ds.k(); ++k) {
    const double yn = Norm(ds.labels.col(k));
    if (beta <= yn) {
      value += -0.5 * beta * beta + beta * yn;
    } else {
      value += 0.5 * yn * yn;
    }
  }
  return value;
}

namespace {

// Largest chain norm over branches that reach the head; 0 when none does.
double ActiveChainNorm(const NetworkParams& p, const Architecture& arch) {
  double t = 0.0;
  for (int j = 0; j < arch.branches; ++j) {
    if (BranchHeadMass(p, arch, j) > 0.0) t = std::max(t, ChainNorm(p, arch, j));
  }
  return t;
}

// Direction of the minimum-norm dual; scaled to unit constraint by the caller.
Matrix MinNormDirection(const Dataset& ds, DualSetting setting) {
  switch (setting) {
    case DualSetting::kLinear: {
      const Matrix w = Pinv(ds.x) * ds.labels;
      if (ds.k() == 1) return Pinv(ds.x).transpose() * Matrix::ColumnVector(
                                   Scaled(w.col(0), 1.0 / std::max(Norm(w.col(0)), 1e-300)));
      const SvdResult s = Svd(w);
      Matrix polar(w.rows(), w.cols());
      const double smax = s.sigma.empty() ? 0.0 : s.sigma[0];
      for (size_t i = 0; i < s.sigma.size(); ++i) {
        if (s.sigma[i] <= kRankTol * smax) break;
        const int ii = static_cast<int>(i);
        polar += Outer(s.u.col(ii), s.v.col(ii));
      }
      return Pinv(ds.x).transpose() * polar;
    }
    case DualSetting::kReluWhitened:
    case DualSetting::kBatchNorm: {
      Matrix l(ds.n(), ds.k());
      for (int k = 0; k < ds.k(); ++k) {
        const Vector yk = ds.labels.col(k);
        const double yn = Norm(yk);
        if (yn > 0.0) l.set_col(k, Scaled(yk, 1.0 / yn));
      }
      return l;
    }
    case DualSetting::kReluRankOne:
      return ds.labels;
    default:
      Fail(ErrorCode::kNoDualConstruction,
           "no minimum-norm dual construction for this setting");
  }
}

}  // namespace

DualCertificate DualityGap(const NetworkParams& params,
                           const Architecture& arch, const Dataset& ds,
                           double beta) {
  Require(beta >= 0.0, ErrorCode::kInvalidInput, "beta must be >= 0");
  const DualSetting setting = ClassifyDualSetting(ds, arch);
  const CanonicalParts parts = CanonicalObjective(params, arch, ds);
  DualCertificate cert;
  cert.beta = beta;
  cert.t = arch.any_bn() ? 1.0 : ActiveChainNorm(params, arch);
  if (cert.t == 0.0) {
    // No branch reaches the head. Certify the zero network at the largest
    // t <= 1 for which Λ = Y stays feasible.
    cert.t = 1.0;
    if (arch.depth > 2 && beta > 0.0) {
      double unit = std::numeric_limits<double>::infinity();
      try {
        unit = DualFeasibility(ds.labels, ds, beta, arch, 1.0);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kTooLargeForBruteForce) throw;
      }
      if (std::isfinite(unit) && unit > beta) {
        cert.t = std::pow(beta / unit, 1.0 / (arch.depth - 2));
      }
    }
  }
  auto worst_of = [&](const Matrix& l) {
    try {
      return DualFeasibility(l, ds, beta, arch, cert.t);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTooLargeForBruteForce) throw;
      // σ_max(Λ) bounds the nonnegative-ball maximum; the certificate stays
      // valid but may be loose.
      cert.exact_constraint = false;
      const double chain = arch.any_bn() ? 1.0 : std::pow(cert.t, arch.depth - 2);
      return chain * SpectralNorm(l);
    }
  };
  if (beta == 0.0) {
    const double res = std::sqrt(2.0 * parts.loss);
    Require(res <= 1e-6 * (1.0 + FrobeniusNorm(ds.labels)),
            ErrorCode::kInfeasible,
            "minimum-norm certificate needs an interpolating network");
    Matrix l = MinNormDirection(ds, setting);
    const double worst = worst_of(l);
    if (worst > 0.0 && std::isfinite(worst)) l *= 1.0 / worst;
    cert.lambda = std::move(l);
    cert.worst_constraint = worst > 0.0 ? 1.0 : 0.0;
    cert.primal_value = parts.head + parts.chain;
    cert.dual_value = DualObjective(cert.lambda, ds, DualForm::kMinNorm) + parts.chain;
  } else {
    Matrix l = ds.labels - ForwardOutput(params, arch, ds.x);
    double worst = worst_of(l);
    if (!std::isfinite(worst)) {
      // Project out the column sums a free bias cannot pay for.
      for (int k = 0; k < l.cols(); ++k) {
        double mean = 0.0;
        for (int i = 0; i < l.rows(); ++i) mean += l(i, k);
        mean /= l.rows();
        for (int i = 0; i < l.rows(); ++i) l(i, k) -= mean;
      }
      worst = worst_of(l);
    }
    if (worst > beta) {
      l *= beta / worst;
      worst = beta;
    }
    cert.lambda = std::move(l);
    cert.worst_constraint = worst;
    cert.primal_value = parts.Value(beta);
    cert.dual_value = DualObjective(cert.lambda, ds, DualForm::kRegularized) +
                      beta * parts.chain;
  }
  for (int k = 0; k < ds.k(); ++k) {
    if (beta * std::pow(cert.t, 2 - arch.depth) <= Norm(ds.labels.col(k))) {
      cert.active_set.push_back(k);
    }
  }
  cert.gap = *cert.primal_value - cert.dual_value;
  cert.relative_gap = std::abs(*cert.gap) / (1.0 + std::abs(*cert.primal_value));
  return cert;
}

}  // namespace dn
