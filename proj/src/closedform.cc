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

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "duality_nets/error.h"
#include "duality_nets/forward.h"
#include "duality_nets/rng.h"

namespace dn {

namespace {

constexpr double kFeasTol = 1e-6;

// Transforms in the SVD basis of X: x = U diag(σ) Vᵀ, rank r.
struct XBasis {
  SvdResult svd;
  int r = 0;
};

XBasis MakeBasis(const Matrix& x) {
  XBasis b{Svd(x), 0};
  const double smax = b.svd.sigma.empty() ? 0.0 : b.svd.sigma[0];
  for (double s : b.svd.sigma) b.r += (smax > 0.0 && s > kRankTol * smax) ? 1 : 0;
  return b;
}

// Projects y̌ = Uᵀy coordinates onto Σ σ_i² u_i² <= β², returning μ with
// u_i = y̌_i / (1 + μ σ_i²); μ = 0 when already feasible.
double ShrinkMultiplier(const Vector& sig, const Vector& yt, double beta) {
  auto excess = [&](double mu) {
    double s = 0.0;
    for (size_t i = 0; i < sig.size(); ++i) {
      const double q = sig[i] * yt[i] / (1.0 + mu * sig[i] * sig[i]);
      s += q * q;
    }
    return s - beta * beta;
  };
  if (excess(0.0) <= 0.0) return 0.0;
  double hi = 1.0 / (sig[0] * sig[0]);
  while (excess(hi) > 0.0) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 300 && hi - lo > 1e-17 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return hi;
}

// Accelerated proximal gradient with gradient-based restart. `grad` fills
// ∇f, `prox` applies the proximal map of step·h, `gap` returns the current
// relative duality gap.
Matrix Fista(Matrix z, double step, const std::function<Matrix(const Matrix&)>& grad,
             const std::function<Matrix(const Matrix&, double)>& prox,
             const std::function<double(const Matrix&)>& gap, double gap_tol,
             int max_iter) {
  Matrix y = z;
  double t = 1.0;
  double best_gap = std::numeric_limits<double>::infinity();
  int best_it = 0;
  for (int it = 1; it <= max_iter; ++it) {
    Matrix g = grad(y);
    Matrix znew = prox(y - g * step, step);
    const double restart = FrobeniusDot(y - znew, znew - z);
    if (restart > 0.0) {
      t = 1.0;
      y = znew;
    } else {
      const double tnew = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = znew + (znew - z) * ((t - 1.0) / tnew);
      t = tnew;
    }
    z = std::move(znew);
    if (it % 10 != 0) continue;
    // Stop on the target gap, or once rounding stalls progress.
    const double current = gap(z);
    if (current <= gap_tol) break;
    if (current < best_gap * (1.0 - 1e-3)) {
      best_gap = current;
      best_it = it;
    } else if (it - best_it > 5000) {
      break;
    }
  }
  return z;
}

}  // namespace

PlantedFit FitPlanted(const Dataset& ds) {
  PlantedFit fit;
  const XBasis b = MakeBasis(ds.x);
  fit.w_star = Pinv(ds.x) * ds.labels;
  Matrix rotated = MatTMul(b.svd.v, fit.w_star);  // V_xᵀ W*
  for (int i = b.r; i < rotated.rows(); ++i) {
    for (int k = 0; k < rotated.cols(); ++k) rotated(i, k) = 0.0;
  }
  fit.w_tilde_r = std::move(rotated);
  fit.svd_w = Svd(fit.w_tilde_r);
  fit.r_w = NumericalRank(fit.w_tilde_r);
  return fit;
}

Vector ProjectionBall(const Matrix& x, const Vector& y, double beta) {
  Require(beta > 0.0, ErrorCode::kInvalidInput, "projection radius must be > 0");
  Require(static_cast<int>(y.size()) == x.rows(), ErrorCode::kShapeError,
          "target length differs from n");
  const XBasis b = MakeBasis(x);
  const Vector yt = MatTVec(b.svd.u, y);
  Vector sig(b.r);
  Vector ytr(b.r);
  for (int i = 0; i < b.r; ++i) {
    sig[i] = b.svd.sigma[i];
    ytr[i] = yt[i];
  }
  if (b.r == 0) return y;
  const double mu = ShrinkMultiplier(sig, ytr, beta);
  if (mu == 0.0) return y;
  Vector ut = yt;
  for (int i = 0; i < b.r; ++i) ut[i] = yt[i] / (1.0 + mu * sig[i] * sig[i]);
  return b.svd.u * ut;
}

LinearFit RegularizedLinearFit(const Matrix& x, const Matrix& y, double beta) {
  Require(beta >= 0.0, ErrorCode::kInvalidInput, "beta must be >= 0");
  Require(x.rows() == y.rows(), ErrorCode::kShapeError, "X and Y row mismatch");
  const int d = x.cols();
  const int k = y.cols();
  const XBasis b = MakeBasis(x);
  const int r = b.r;
  LinearFit fit{Matrix(d, k), y};
  if (r == 0) return fit;
  const Matrix yt_full = MatTMul(b.svd.u, y);  // Uᵀ Y
  Matrix yt = yt_full.block(0, 0, r, k);
  Vector sig(b.svd.sigma.begin(), b.svd.sigma.begin() + r);
  Matrix vr = b.svd.v.block(0, 0, d, r);

  Matrix z(r, k);  // W = V_r Z
  if (beta == 0.0) {
    for (int i = 0; i < r; ++i) {
      for (int c = 0; c < k; ++c) z(i, c) = yt(i, c) / sig[i];
    }
  } else if (k == 1) {
    const double mu = ShrinkMultiplier(sig, yt.col(0), beta);
    for (int i = 0; i < r; ++i) {
      z(i, 0) = yt(i, 0) * mu * sig[i] / (1.0 + mu * sig[i] * sig[i]);
    }
  } else if (sig[0] - sig[r - 1] <= 1e-13 * sig[0]) {
    // Orthogonal design: ½σ²‖Z - Y̌/σ‖² + β‖Z‖_* has a closed form.
    const double s = sig[0];
    z = SingularValueThreshold(yt * (1.0 / s), beta / (s * s));
  } else {
    auto apply_sigma = [&](const Matrix& m) {
      Matrix out = m;
      for (int i = 0; i < r; ++i) {
        for (int c = 0; c < k; ++c) out(i, c) *= sig[i];
      }
      return out;
    };
    const double ynorm2 = FrobeniusDot(yt, yt);
    auto grad = [&](const Matrix& zz) { return apply_sigma(apply_sigma(zz) - yt); };
    auto prox = [&](const Matrix& v, double step) {
      return SingularValueThreshold(v, step * beta);
    };
    auto gap = [&](const Matrix& zz) {
      const Matrix res = yt - apply_sigma(zz);
      const double primal = 0.5 * FrobeniusDot(res, res) +
                            beta * [&] {
                              double s = 0.0;
                              for (double v : SingularValues(zz)) s += v;
                              return s;
                            }();
      const double worst = SpectralNorm(apply_sigma(res));
      const double scale = worst > beta ? beta / worst : 1.0;
      const Matrix dl = res * scale - yt;
      const double dual = -0.5 * FrobeniusDot(dl, dl) + 0.5 * ynorm2;
      return (primal - dual) / (1.0 + std::abs(primal));
    };
    // Warm start from the orthogonal-design solution at the mean scale.
    z = Fista(Matrix(r, k), 1.0 / (sig[0] * sig[0]), grad, prox, gap, 1e-14,
              400000);
  }
  fit.w = vr * z;
  fit.residual = y - x * fit.w;
  return fit;
}

Matrix ProjectionBall(const Matrix& x, const Matrix& y, double beta) {
  Require(beta > 0.0, ErrorCode::kInvalidInput, "projection radius must be > 0");
  if (y.cols() == 1) return Matrix::ColumnVector(ProjectionBall(x, y.col(0), beta));
  return RegularizedLinearFit(x, y, beta).residual;
}

Matrix GroupLassoRows(const Matrix& a, const Matrix& y, double beta,
                      double gap_tol, int max_iter) {
  Require(a.rows() == y.rows(), ErrorCode::kShapeError, "A and Y row mismatch");
  const int p = a.cols();
  const int k = y.cols();
  if (beta == 0.0) return Pinv(a) * y;
  const double smax = SpectralNorm(a);
  if (smax == 0.0) return Matrix(p, k);
  const double ynorm2 = FrobeniusDot(y, y);
  auto grad = [&](const Matrix& v) { return MatTMul(a, a * v - y); };
  auto prox = [&](const Matrix& v, double step) {
    Matrix out = v;
    for (int b = 0; b < p; ++b) {
      const double nrm = Norm(v.row(b));
      const double f = nrm > step * beta ? 1.0 - step * beta / nrm : 0.0;
      for (int c = 0; c < k; ++c) out(b, c) *= f;
    }
    return out;
  };
  auto gap = [&](const Matrix& v) {
    const Matrix res = y - a * v;
    double pen = 0.0;
    for (int b = 0; b < p; ++b) pen += Norm(v.row(b));
    const double primal = 0.5 * FrobeniusDot(res, res) + beta * pen;
    const Matrix corr = MatTMul(a, res);
    double worst = 0.0;
    for (int b = 0; b < p; ++b) worst = std::max(worst, Norm(corr.row(b)));
    const double scale = worst > beta ? beta / worst : 1.0;
    const Matrix dl = res * scale - y;
    const double dual = -0.5 * FrobeniusDot(dl, dl) + 0.5 * ynorm2;
    return (primal - dual) / (1.0 + std::abs(primal));
  };
  return Fista(Matrix(p, k), 1.0 / (smax * smax), grad, prox, gap, gap_tol,
               max_iter);
}

double ChooseTStar(double head_demand, int depth) {
  Require(head_demand >= 0.0, ErrorCode::kInvalidInput,
          "head demand must be >= 0");
  Require(depth >= 3, ErrorCode::kInvalidInput, "ChooseTStar needs L >= 3");
  if (head_demand == 0.0) return 1.0;
  return std::pow(head_demand, 1.0 / depth);
}

DirectionChain MakeChain(const Architecture& arch, ChainMode mode,
                         const Vector& t, uint64_t seed) {
  ValidateArchitecture(arch);
  const int m = arch.branches;
  Require(static_cast<int>(t.size()) == m || t.size() == 1,
          ErrorCode::kInvalidInput, "t needs one entry or one per branch");
  DirectionChain ch;
  ch.mode = mode;
  ch.t = t.size() == 1 ? Vector(m, t[0]) : t;
  ch.rho.assign(m, {});
  const Rng root(seed, 0xC4A1);
  const int hidden = arch.hidden_layers();
  for (int l = 1; l <= hidden; ++l) {
    const int width = arch.widths[l - 1];
    const bool last = l == hidden;
    std::vector<Vector> dirs(m, Vector(width, 0.0));
    switch (mode) {
      case ChainMode::kNonnegOrthogonal:
        Require(last || width >= m, ErrorCode::kWidthTooSmall,
                "layer " + std::to_string(l) + " has width " +
                    std::to_string(width) + " < " + std::to_string(m) +
                    " orthogonal branches");
        for (int j = 0; j < m; ++j) dirs[j][width >= m ? j : 0] = 1.0;
        break;
      case ChainMode::kNonnegCyclic:
        for (int j = 0; j < m; ++j) dirs[j][j % width] = 1.0;
        break;
      case ChainMode::kUnitArbitrary:
        for (int j = 0; j < m; ++j) {
          dirs[j] = root.Split(static_cast<uint64_t>(l) * 1000003 + j)
                        .UnitVector(width);
        }
        break;
      case ChainMode::kOrthonormalArbitrary: {
        Require(last || width >= m, ErrorCode::kWidthTooSmall,
                "layer " + std::to_string(l) + " too narrow for orthonormal "
                "branches");
        Rng rng = root.Split(static_cast<uint64_t>(l));
        for (int j = 0; j < m; ++j) {
          Vector v = rng.UnitVector(width);
          if (width >= m) {
            for (int pass = 0; pass < 2; ++pass) {
              for (int i = 0; i < j; ++i) v = Sub(v, Scaled(dirs[i], Dot(v, dirs[i])));
            }
            v = Scaled(v, 1.0 / Norm(v));
          }
          dirs[j] = std::move(v);
        }
        break;
      }
    }
    for (int j = 0; j < m; ++j) ch.rho[j].push_back(std::move(dirs[j]));
  }
  return ch;
}

namespace {

struct ConvexValue {
  double g = 0.0;  // optimal value of the convex problem at radius β_eff
  double s = 0.0;  // Σ_j ‖v_j‖ of the effective branch weights
  int active = 0;
};

using ConvexOracle = std::function<ConvexValue(double beta_eff)>;

double SelectChainNorm(const ChainOptions& opts, int depth, double beta,
                       const ConvexOracle& oracle) {
  if (depth <= 2) return 1.0;
  switch (opts.policy) {
    case TPolicy::kUnit:
      return 1.0;
    case TPolicy::kFixed:
      Require(opts.t > 0.0, ErrorCode::kInvalidInput, "fixed t must be > 0");
      return opts.t;
    case TPolicy::kOptimal:
      break;
  }
  const int inner = depth - 2;
  if (beta == 0.0) {
    const ConvexValue cv = oracle(0.0);
    return cv.active > 0 ? ChooseTStar(cv.s / cv.active, depth) : 1.0;
  }
  auto total = [&](double t, ConvexValue* out) {
    const ConvexValue cv = oracle(beta * std::pow(t, -inner));
    if (out != nullptr) *out = cv;
    return cv.g + beta * 0.5 * inner * cv.active * t * t;
  };
  // Coarse scan in log t, then golden section and a root polish of the
  // stationarity condition active·t^L = S(t).
  constexpr int kGrid = 61;
  std::vector<double> logs(kGrid), vals(kGrid);
  int best = 0;
  for (int i = 0; i < kGrid; ++i) {
    logs[i] = -3.0 + 6.0 * i / (kGrid - 1);
    vals[i] = total(std::pow(10.0, logs[i]), nullptr);
    if (vals[i] < vals[best]) best = i;
  }
  double a = logs[std::max(best - 1, 0)];
  double b = logs[std::min(best + 1, kGrid - 1)];
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = total(std::pow(10.0, c), nullptr);
  double fd = total(std::pow(10.0, d), nullptr);
  for (int it = 0; it < 100 && b - a > 1e-9; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = total(std::pow(10.0, c), nullptr);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = total(std::pow(10.0, d), nullptr);
    }
  }
  double t_best = std::pow(10.0, 0.5 * (a + b));
  ConvexValue cv;
  double f_best = total(t_best, &cv);
  // Every branch off: the zero network wins, and t_best keeps it that way.
  if (cv.active == 0) return t_best;
  auto station = [&](double t) {
    ConvexValue v;
    total(t, &v);
    return v.active * std::pow(t, depth) - v.s;
  };
  double lo = t_best * (1.0 - 1e-5);
  double hi = t_best * (1.0 + 1e-5);
  double flo = station(lo);
  double fhi = station(hi);
  if (flo * fhi < 0.0) {
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = station(mid);
      if ((fm < 0.0) == (flo < 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    const double t_root = 0.5 * (lo + hi);
    if (total(t_root, nullptr) <= f_best + 1e-14 * std::abs(f_best)) {
      t_best = t_root;
    }
  }
  return t_best;
}

// Writes branch j of a chain network. u: unit first-layer direction;
// sign multiplies layer L-1; head_row is the K-vector carried by the last
// hidden unit direction; bias (if any) is placed on that direction.
void WriteBranch(NetworkParams& p, const Architecture& arch, int j,
                 const Vector& u, const DirectionChain& ch, double t,
                 double sign, const Vector& head_row,
                 std::optional<double> bias) {
  const int hidden = arch.hidden_layers();
  const auto& rho = ch.rho[j];
  if (hidden == 1) {
    p.weights[j][0] = Outer(u, rho[0]) * sign;
  } else {
    p.weights[j][0] = Outer(u, rho[0]) * t;
    for (int l = 2; l <= hidden - 1; ++l) {
      p.weights[j][l - 1] = Outer(rho[l - 2], rho[l - 1]) * t;
    }
    p.weights[j][hidden - 1] = Outer(rho[hidden - 2], rho[hidden - 1]) * sign;
  }
  p.head[j] = Outer(rho[hidden - 1], head_row);
  if (bias) p.biases[j] = Scaled(rho[hidden - 1], *bias);
}

void CheckArch(const Architecture& arch, const Dataset& ds,
               Activation activation) {
  ValidateArchitecture(arch);
  Require(arch.inputs == ds.d() && arch.outputs == ds.k(),
          ErrorCode::kShapeError, "architecture inputs/outputs differ from data");
  Require(arch.activation == activation, ErrorCode::kInvalidInput,
          "constructor needs " + ActivationName(activation) + " activation");
}

void RequireBranches(const Architecture& arch, int needed) {
  Require(arch.branches >= needed, ErrorCode::kWidthTooSmall,
          "need " + std::to_string(needed) + " branches, architecture has " +
              std::to_string(arch.branches));
}

// SVD components of W (d×K) with nonzero singular value.
struct Components {
  std::vector<Vector> left;   // unit d-vectors
  std::vector<Vector> right;  // σ_k v_k
};

Components Decompose(const Matrix& w) {
  Components c;
  if (w.cols() == 1) {
    const double nrm = Norm(w.col(0));
    if (nrm > 0.0) {
      c.left.push_back(Scaled(w.col(0), 1.0 / nrm));
      c.right.push_back({nrm});
    }
    return c;
  }
  const SvdResult s = Svd(w);
  const double smax = s.sigma.empty() ? 0.0 : s.sigma[0];
  for (size_t k = 0; k < s.sigma.size(); ++k) {
    if (smax == 0.0 || s.sigma[k] <= kRankTol * smax) break;
    const int kk = static_cast<int>(k);
    c.left.push_back(s.u.col(kk));
    c.right.push_back(Scaled(s.v.col(kk), s.sigma[k]));
  }
  return c;
}

double NuclearNorm(const Matrix& w) {
  double s = 0.0;
  for (double v : SingularValues(w)) s += v;
  return s;
}

ConvexValue LinearValue(const Matrix& x, const Matrix& y, double beta_eff) {
  const LinearFit fit = RegularizedLinearFit(x, y, beta_eff);
  ConvexValue cv;
  cv.s = NuclearNorm(fit.w);
  cv.g = 0.5 * FrobeniusDot(fit.residual, fit.residual) + beta_eff * cv.s;
  cv.active = static_cast<int>(Decompose(fit.w).left.size());
  return cv;
}

Matrix MinNormInterpolant(const Matrix& x, const Matrix& y) {
  const Matrix w = RegularizedLinearFit(x, y, 0.0).w;
  const double res = FrobeniusNorm(x * w - y);
  Require(res <= kFeasTol * (1.0 + FrobeniusNorm(y)), ErrorCode::kInfeasible,
          "target is not in range(X) (residual " + std::to_string(res) + ")");
  return w;
}

}  // namespace

Network TwoLayerLinear(const Dataset& ds, double beta) {
  Require(beta >= 0.0, ErrorCode::kInvalidInput, "beta must be >= 0");
  Network net;
  net.arch.depth = 2;
  net.arch.branches = ds.k();
  net.arch.inputs = ds.d();
  net.arch.outputs = ds.k();
  net.arch.widths = {1};
  net.arch.activation = Activation::kLinear;
  net.params = ZeroParams(net.arch);
  const Matrix w = beta == 0.0 ? MinNormInterpolant(ds.x, ds.labels)
                               : RegularizedLinearFit(ds.x, ds.labels, beta).w;
  const Components c = Decompose(w);
  for (size_t k = 0; k < c.left.size(); ++k) {
    const int j = static_cast<int>(k);
    net.params.weights[j][0] = Matrix::ColumnVector(c.left[k]);
    net.params.head[j] = Matrix::RowVector(c.right[k]);
  }
  return net;
}

Network DeepLinear(const Dataset& ds, double beta, const Architecture& arch,
                   const ChainOptions& opts) {
  Require(beta >= 0.0, ErrorCode::kInvalidInput, "beta must be >= 0");
  CheckArch(arch, ds, Activation::kLinear);
  Require(arch.depth >= 3, ErrorCode::kInvalidInput, "DeepLinear needs L >= 3");
  Require(!arch.last_hidden_bias && !arch.any_bn(), ErrorCode::kInvalidInput,
          "DeepLinear takes a plain linear architecture");
  const int inner = arch.depth - 2;
  Matrix w_min;
  if (beta == 0.0) w_min = MinNormInterpolant(ds.x, ds.labels);
  const ConvexOracle oracle = [&](double beta_eff) {
    if (beta == 0.0) {
      ConvexValue cv;
      cv.s = NuclearNorm(w_min);
      cv.active = static_cast<int>(Decompose(w_min).left.size());
      return cv;
    }
    return LinearValue(ds.x, ds.labels, beta_eff);
  };
  double t = SelectChainNorm(opts, arch.depth, beta, oracle);
  const auto fit = [&] {
    return beta == 0.0 ? w_min
                       : RegularizedLinearFit(ds.x, ds.labels, beta * std::pow(t, -inner)).w;
  };
  Matrix w = fit();
  Components c = Decompose(w);
  // At a kink of the chain-norm objective a branch may be switching on with
  // a sub-tolerance singular value that Decompose would drop. Step t down to
  // the side where it is exactly off.
  for (double step = 1e-9; opts.policy == TPolicy::kOptimal && beta > 0.0 && step < 1e-3;
       step *= 2.0) {
    const Vector sv = SingularValues(w);
    const size_t kept = c.left.size();
    if (kept >= sv.size() || sv[kept] <= 1e-14 * std::max(sv[0], 1e-300)) break;
    t *= 1.0 - step;
    w = fit();
    c = Decompose(w);
  }
  RequireBranches(arch, static_cast<int>(c.left.size()));
  const DirectionChain ch = MakeChain(arch, opts.mode, {t}, opts.seed);
  Network net{arch, ZeroParams(arch)};
  const double head_scale = std::pow(t, -inner);
  for (size_t k = 0; k < c.left.size(); ++k) {
    WriteBranch(net.params, arch, static_cast<int>(k), c.left[k], ch, t, 1.0,
                Scaled(c.right[k], head_scale), std::nullopt);
  }
  return net;
}

Network DeepReluRankOne(const Dataset& ds, const Architecture& arch,
                        double beta, const ChainOptions& opts) {
  Require(beta >= 0.0, ErrorCode::kInvalidInput, "beta must be >= 0");
  Require(ds.rank_one.has_value(), ErrorCode::kPreconditionViolated,
          "dataset has no rank-one factorization");
  CheckArch(arch, ds, Activation::kRelu);
  Require(!arch.any_bn(), ErrorCode::kInvalidInput,
          "rank-one constructor takes no batch norm");
  const Vector& c = ds.rank_one->c;
  const Vector& a0 = ds.rank_one->a0;
  const double a0n = Norm(a0);
  Require(a0n > 0.0, ErrorCode::kPreconditionViolated, "a0 is zero");
  const Vector u = Scaled(a0, 1.0 / a0n);
  const int n = ds.n();
  const int inner = arch.depth - 2;
  const bool nonneg = std::all_of(c.begin(), c.end(), [](double v) { return v >= 0.0; });
  const Matrix& y = ds.labels;

  if (!arch.last_hidden_bias) {
    Require(nonneg, ErrorCode::kPreconditionViolated,
            "no-bias mode needs c >= 0 entrywise");
    const double cn = Norm(c);
    Require(cn > 0.0, ErrorCode::kPreconditionViolated, "c is zero");
    // Least-squares coefficients of every label column on c.
    Vector q(ds.k());
    for (int k = 0; k < ds.k(); ++k) {
      const Vector yk = y.col(k);
      q[k] = Dot(c, yk) / (cn * cn);
      const double res = Norm(Sub(yk, Scaled(c, q[k])));
      Require(res <= kFeasTol * (1.0 + Norm(yk)), ErrorCode::kInfeasible,
              "label column " + std::to_string(k) + " is not in span{c}");
    }
    // Features at t = 1 are ‖a₀‖c; v = effective head on that feature.
    const double fn = a0n * cn;
    const Vector q1 = Scaled(q, 1.0 / a0n);
    auto effective = [&](double beta_eff) {
      const double qn = Norm(q1);
      const double f = qn > 0.0 ? std::max(0.0, 1.0 - beta_eff / (fn * fn * qn)) : 0.0;
      return Scaled(q1, f);
    };
    const ConvexOracle oracle = [&](double beta_eff) {
      const Vector v = effective(beta_eff);
      ConvexValue cv;
      cv.s = Norm(v);
      cv.active = cv.s > 0.0 ? 1 : 0;
      const Matrix out = Outer(Scaled(c, a0n), v);
      const double r = FrobeniusNorm(out - y);
      cv.g = 0.5 * r * r + beta_eff * cv.s;
      return cv;
    };
    const double t = SelectChainNorm(opts, arch.depth, beta, oracle);
    const Vector v = effective(beta * std::pow(t, -inner));
    RequireBranches(arch, 1);
    const DirectionChain ch = MakeChain(arch, opts.mode, {t}, opts.seed);
    Network net{arch, ZeroParams(arch)};
    if (Norm(v) > 0.0) {
      WriteBranch(net.params, arch, 0, u, ch, t, 1.0,
                  Scaled(v, std::pow(t, -inner)), std::nullopt);
    }
    return net;
  }

  // Bias mode: hinge features ‖a₀‖(s(c - c_k))₊ for every data point and sign.
  Require(arch.depth == 2 || nonneg, ErrorCode::kPreconditionViolated,
          "deep bias mode needs c >= 0 entrywise");
  {
    Vector sorted = c;
    std::sort(sorted.begin(), sorted.end());
    double scale = 0.0;
    for (double v : c) scale = std::max(scale, std::abs(v));
    for (int i = 1; i < n; ++i) {
      Require(sorted[i] - sorted[i - 1] > 1e-12 * std::max(scale, 1e-300),
              ErrorCode::kDuplicateAbscissa,
              "duplicate abscissa " + std::to_string(sorted[i]));
    }
  }
  Matrix features(n, 2 * n);
  for (int k = 0; k < n; ++k) {
    for (int s = 0; s < 2; ++s) {
      const double sign = s == 0 ? 1.0 : -1.0;
      for (int i = 0; i < n; ++i) {
        features(i, 2 * k + s) = a0n * std::max(sign * (c[i] - c[k]), 0.0);
      }
    }
  }
  // A bias-only unit (zero input weights) emits a constant at no weight-norm
  // cost. It carries the free intercept of the regularized fit and, for a
  // single data point, the constant the degenerate hinges cannot express.
  const double ynorm = FrobeniusNorm(y);
  struct SplineFit {
    Matrix v;
    Vector intercept;
  };
  auto fit = [&](double beta_eff) {
    SplineFit f{Matrix(2 * n, ds.k()), Vector(ds.k(), 0.0)};
    if (beta_eff == 0.0) {
      f.v = Pinv(features) * y;
      if (FrobeniusNorm(features * f.v - y) > kFeasTol * (1.0 + ynorm)) {
        f.v = Matrix(2 * n, ds.k());
        f.intercept = (Pinv(Matrix(n, 1, 1.0)) * y).row(0);
      }
      return f;
    }
    Matrix fc = features;
    Matrix yc = y;
    const Vector fmean = Scaled(MatTVec(features, Vector(n, 1.0)), 1.0 / n);
    const Vector ymean = Scaled(MatTVec(y, Vector(n, 1.0)), 1.0 / n);
    for (int i = 0; i < n; ++i) {
      for (int b = 0; b < 2 * n; ++b) fc(i, b) -= fmean[b];
      for (int k = 0; k < ds.k(); ++k) yc(i, k) -= ymean[k];
    }
    f.v = GroupLassoRows(fc, yc, beta_eff);
    f.intercept = Sub(ymean, MatTVec(f.v, fmean));
    return f;
  };
  auto fitted_output = [&](const SplineFit& f) {
    Matrix out = features * f.v;
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < ds.k(); ++k) out(i, k) += f.intercept[k];
    }
    return out;
  };
  const ConvexOracle oracle = [&](double beta_eff) {
    const SplineFit f = fit(beta_eff);
    ConvexValue cv;
    for (int b = 0; b < 2 * n; ++b) {
      const double r = Norm(f.v.row(b));
      cv.s += r;
      cv.active += r > 0.0 ? 1 : 0;
    }
    const double res = FrobeniusNorm(fitted_output(f) - y);
    cv.g = 0.5 * res * res + beta_eff * cv.s;
    return cv;
  };
  const double t = SelectChainNorm(opts, arch.depth, beta, oracle);
  const double head_scale = std::pow(t, -inner);
  const SplineFit sf = fit(beta * head_scale);
  if (beta == 0.0) {
    const double res = FrobeniusNorm(fitted_output(sf) - y);
    Require(res <= kFeasTol * (1.0 + ynorm), ErrorCode::kInfeasible,
            "hinge features cannot interpolate the labels");
  }
  const bool constant_unit = Norm(sf.intercept) > 0.0;
  RequireBranches(arch, 2 * n + (constant_unit ? 1 : 0));
  const DirectionChain ch = MakeChain(arch, opts.mode, {t}, opts.seed);
  Network net{arch, ZeroParams(arch)};
  const double feature_scale = a0n * std::pow(t, inner);
  for (int b = 0; b < 2 * n; ++b) {
    const Vector row = sf.v.row(b);
    if (Norm(row) == 0.0) continue;
    const int k = b / 2;
    const double sign = b % 2 == 0 ? 1.0 : -1.0;
    WriteBranch(net.params, arch, b, u, ch, t, sign, Scaled(row, head_scale),
                -sign * c[k] * feature_scale);
  }
  if (constant_unit) {
    const int j = 2 * n;
    const Vector& rho = ch.rho[j][arch.hidden_layers() - 1];
    net.params.biases[j] = rho;
    net.params.head[j] = Outer(rho, sf.intercept);
  }
  return net;
}

Network DeepReluWhitened(const Dataset& ds, double beta,
                         const Architecture& arch, const ChainOptions& opts) {
  Require(beta >= 0.0, ErrorCode::kInvalidInput, "beta must be >= 0");
  Require(ds.whitened, ErrorCode::kPreconditionViolated, "dataset not whitened");
  Require(MaxAbsDiff(MatMulT(ds.x, ds.x), Matrix::Identity(ds.n())) <= 1e-8,
          ErrorCode::kPreconditionViolated, "X X^T != I");
  Require(IsOneHot(ds.labels), ErrorCode::kPreconditionViolated,
          "labels are not one-hot");
  CheckArch(arch, ds, Activation::kRelu);
  Require(!arch.any_bn() && !arch.last_hidden_bias, ErrorCode::kInvalidInput,
          "whitened constructor takes no bias or batch norm");
  const int kk = ds.k();
  RequireBranches(arch, kk);
  for (int l = 1; l <= arch.depth - 2; ++l) {
    Require(arch.widths[l - 1] >= kk, ErrorCode::kWidthTooSmall,
            "layer " + std::to_string(l) + " narrower than K");
  }
  const int inner = arch.depth - 2;
  Vector norms(kk);
  for (int j = 0; j < kk; ++j) norms[j] = Norm(ds.labels.col(j));
  const ConvexOracle oracle = [&](double beta_eff) {
    ConvexValue cv;
    for (double yn : norms) {
      const double s = std::max(yn - beta_eff, 0.0);
      cv.g += 0.5 * (yn - s) * (yn - s) + beta_eff * s;
      cv.s += s;
      cv.active += s > 0.0 ? 1 : 0;
    }
    return cv;
  };
  const double t = SelectChainNorm(opts, arch.depth, beta, oracle);
  const double head_scale = std::pow(t, -inner);
  const double beta_eff = beta * head_scale;
  const DirectionChain ch = MakeChain(arch, opts.mode, {t}, opts.seed);
  Network net{arch, ZeroParams(arch)};
  for (int j = 0; j < kk; ++j) {
    const double s = std::max(norms[j] - beta_eff, 0.0);
    if (s == 0.0) continue;
    const Vector phi0 = MatTVec(ds.x, ds.labels.col(j));
    Vector head(kk, 0.0);
    head[j] = s * head_scale;
    WriteBranch(net.params, arch, j, Scaled(phi0, 1.0 / Norm(phi0)), ch, t, 1.0,
                head, std::nullopt);
  }
  return net;
}

BnHeadParams BnHead(const std::vector<Matrix>& activations, const Dataset& ds,
                    double beta) {
  Require(beta >= 0.0, ErrorCode::kInvalidInput, "beta must be >= 0");
  Require(IsOneHot(ds.labels), ErrorCode::kPreconditionViolated,
          "labels are not one-hot");
  const int kk = ds.k();
  const int n = ds.n();
  Require(static_cast<int>(activations.size()) == kk, ErrorCode::kShapeError,
          "need one activation matrix per class");
  BnHeadParams out;
  out.gamma.resize(kk);
  out.alpha.resize(kk);
  out.head = Matrix(kk, kk);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  for (int j = 0; j < kk; ++j) {
    const Matrix& a = activations[j];
    Require(a.rows() == n, ErrorCode::kShapeError, "activation rows != n");
    const Vector yj = ds.labels.col(j);
    const Vector w = Pinv(a) * yj;
    const double yn = Norm(yj);
    const double res = Norm(Sub(a * w, yj));
    Require(res <= kFeasTol * yn, ErrorCode::kOverparamAssumptionViolated,
            "y_" + std::to_string(j) + " is not in range(A_{L-2," +
                std::to_string(j) + "}) (residual " + std::to_string(res) + ")");
    double mean = 0.0;
    for (double v : yj) mean += v;
    mean /= n;
    double centered = 0.0;
    for (double v : yj) centered += (v - mean) * (v - mean);
    out.w_prev.push_back(w);
    out.gamma[j] = std::sqrt(centered) / yn;
    out.alpha[j] = mean * n / (sqrt_n * yn);
    out.head(j, j) = std::max(yn - beta, 0.0);
  }
  return out;
}

Network BnNetwork(const Dataset& ds, double beta, const Architecture& arch,
                  const NetworkParams* trunk, uint64_t seed) {
  CheckArch(arch, ds, Activation::kRelu);
  Require(arch.batch_norm && !arch.batch_norm_all && !arch.last_hidden_bias,
          ErrorCode::kInvalidInput,
          "BnNetwork needs batch norm on the last hidden layer only");
  Require(arch.last_width() == 1, ErrorCode::kInvalidInput,
          "BnNetwork needs one last hidden unit per branch");
  const int kk = ds.k();
  Require(arch.branches == kk, ErrorCode::kInvalidInput,
          "BnNetwork needs one branch per class");
  Network net{arch, ZeroParams(arch)};
  const int hidden = arch.hidden_layers();
  Rng rng(seed, 0xB47);
  for (int j = 0; j < kk; ++j) {
    for (int l = 1; l < hidden; ++l) {
      if (trunk != nullptr) {
        net.params.weights[j][l - 1] = trunk->weights[j][l - 1];
      } else {
        Matrix& w = net.params.weights[j][l - 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(w.rows()));
        for (int i = 0; i < w.size(); ++i) w.data()[i] = rng.Uniform(-bound, bound);
      }
    }
  }
  std::vector<Matrix> acts;
  for (int j = 0; j < kk; ++j) {
    Matrix a = ds.x;
    for (int l = 1; l < hidden; ++l) {
      a = a * net.params.weights[j][l - 1];
      for (int i = 0; i < a.size(); ++i) a.data()[i] = std::max(a.data()[i], 0.0);
    }
    acts.push_back(std::move(a));
  }
  const BnHeadParams h = BnHead(acts, ds, beta);
  for (int j = 0; j < kk; ++j) {
    net.params.weights[j][hidden - 1] = Matrix::ColumnVector(h.w_prev[j]);
    net.params.bn_scale[j][hidden - 1] = {h.gamma[j]};
    net.params.bn_shift[j][hidden - 1] = {h.alpha[j]};
    net.params.head[j] = Matrix::RowVector(h.head.row(j));
  }
  return net;
}

Network ConstructClosedForm(const Dataset& ds, const Architecture& arch, double beta,
                            uint64_t seed) {
  if (arch.any_bn()) return BnNetwork(ds, beta, arch, nullptr, seed);
  if (arch.activation == Activation::kLinear) {
    if (arch.depth == 2) return TwoLayerLinear(ds, beta);
    return DeepLinear(ds, beta, arch, {TPolicy::kOptimal});
  }
  if (ds.whitened && IsOneHot(ds.labels)) {
    return DeepReluWhitened(ds, beta, arch, {TPolicy::kOptimal});
  }
  if (ds.rank_one) return DeepReluRankOne(ds, arch, beta);
  Fail(ErrorCode::kNoDualConstruction,
       "no closed form for a relu network on data that is neither whitened "
       "one-hot nor rank one");
}

}  // namespace dn
