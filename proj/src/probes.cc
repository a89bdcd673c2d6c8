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

#include "duality_nets/probes.h"

#include <algorithm>
#include <cmath>

#include "duality_nets/error.h"
#include "duality_nets/forward.h"

namespace dn {

NormRatio SpectralVsFrobenius(const Matrix& m) {
  NormRatio r;
  r.frobenius = FrobeniusNorm(m);
  Require(r.frobenius > 0.0, ErrorCode::kZeroMatrix, "norm ratio of a zero matrix");
  r.spectral = SpectralNorm(m);
  r.ratio = r.spectral / r.frobenius;
  return r;
}

double KinkReport::total_mass() const {
  double s = 0.0;
  for (double m : masses) s += m;
  return s;
}

double KinkReport::mass_fraction_near(const std::vector<double>& points,
                                      double radius) const {
  const double total = total_mass();
  if (total == 0.0) return 1.0;
  double near = 0.0;
  for (size_t i = 0; i < kinks.size(); ++i) {
    for (double p : points) {
      if (std::abs(kinks[i] - p) <= radius) {
        near += masses[i];
        break;
      }
    }
  }
  return near / total;
}

namespace {

KinkReport KinksFromSamples(const Vector& xs, const Vector& fs, double tol) {
  const int g = static_cast<int>(xs.size());
  KinkReport rep;
  rep.grid_step = xs[1] - xs[0];
  const double h = rep.grid_step;
  double max_slope = 0.0;
  for (int i = 0; i + 1 < g; ++i) {
    max_slope = std::max(max_slope, std::abs(fs[i + 1] - fs[i]) / h);
  }
  const double threshold = tol * h * (1.0 + max_slope);
  int i = 1;
  while (i + 1 < g) {
    const double d2 = fs[i - 1] - 2.0 * fs[i] + fs[i + 1];
    if (std::abs(d2) <= threshold) {
      ++i;
      continue;
    }
    double wsum = 0.0;
    double xsum = 0.0;
    double signed_sum = 0.0;
    while (i + 1 < g) {
      const double d = fs[i - 1] - 2.0 * fs[i] + fs[i + 1];
      if (std::abs(d) <= threshold) break;
      wsum += std::abs(d);
      xsum += std::abs(d) * xs[i];
      signed_sum += d;
      ++i;
    }
    rep.kinks.push_back(xsum / wsum);
    rep.masses.push_back(std::abs(signed_sum) / h);
  }
  return rep;
}

}  // namespace

KinkReport DetectKinks(const std::function<double(double)>& f, double lo,
                       double hi, int grid, double tol) {
  Require(grid >= 3 && hi > lo && tol > 0.0, ErrorCode::kInvalidInput,
          "kink grid needs >= 3 points over a nonempty interval");
  Vector xs(grid);
  Vector fs(grid);
  for (int i = 0; i < grid; ++i) {
    xs[i] = lo + (hi - lo) * i / (grid - 1);
    fs[i] = f(xs[i]);
  }
  return KinksFromSamples(xs, fs, tol);
}

KinkReport DetectKinks(const NetworkParams& params, const Architecture& arch,
                       const std::vector<double>& data_x, int grid,
                       double tol) {
  Require(arch.inputs == 1, ErrorCode::kInvalidInput,
          "kink detection needs a one-dimensional input");
  Require(!data_x.empty() && grid >= 3, ErrorCode::kInvalidInput,
          "kink detection needs data and >= 3 grid points");
  const auto [mn, mx] = std::minmax_element(data_x.begin(), data_x.end());
  const double span = std::max(*mx - *mn, 1e-3 * std::max(1.0, std::abs(*mn)));
  const double lo = *mn - 0.1 * span;
  const double hi = *mx + 0.1 * span;
  Matrix xs(grid, 1);
  Vector grid_x(grid);
  for (int i = 0; i < grid; ++i) {
    grid_x[i] = lo + (hi - lo) * i / (grid - 1);
    xs(i, 0) = grid_x[i];
  }
  const Matrix out = ForwardOutput(params, arch, xs);
  KinkReport merged;
  merged.grid_step = grid_x[1] - grid_x[0];
  for (int k = 0; k < out.cols(); ++k) {
    const KinkReport r = KinksFromSamples(grid_x, out.col(k), tol);
    for (size_t i = 0; i < r.kinks.size(); ++i) {
      bool found = false;
      for (size_t q = 0; q < merged.kinks.size(); ++q) {
        if (std::abs(merged.kinks[q] - r.kinks[i]) <= merged.grid_step) {
          merged.masses[q] += r.masses[i];
          found = true;
          break;
        }
      }
      if (!found) {
        merged.kinks.push_back(r.kinks[i]);
        merged.masses.push_back(r.masses[i]);
      }
    }
  }
  std::vector<size_t> order(merged.kinks.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return merged.kinks[a] < merged.kinks[b]; });
  KinkReport sorted;
  sorted.grid_step = merged.grid_step;
  for (size_t i : order) {
    sorted.kinks.push_back(merged.kinks[i]);
    sorted.masses.push_back(merged.masses[i]);
  }
  return sorted;
}

EtfSpec MakeEtf(int k, double alpha, const Matrix& rotation) {
  Require(k >= 2, ErrorCode::kInvalidInput, "an ETF needs K >= 2");
  Require(rotation.cols() == k && rotation.rows() >= k, ErrorCode::kShapeError,
          "rotation must be p×K with p >= K");
  Require(MaxAbsDiff(MatTMul(rotation, rotation), Matrix::Identity(k)) <= 1e-10,
          ErrorCode::kInvalidInput, "rotation columns are not orthonormal");
  EtfSpec spec;
  spec.k = k;
  spec.scale_alpha = alpha;
  spec.rotation = rotation;
  const double c = std::sqrt(static_cast<double>(k) / (k - 1));
  Matrix s(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) s(i, j) = c * ((i == j ? 1.0 : 0.0) - 1.0 / k);
  }
  spec.columns = rotation * s * alpha;
  return spec;
}

EtfSpec MakeEtf(int k, double alpha) {
  return MakeEtf(k, alpha, Matrix::Identity(k));
}

CollapseReport NeuralCollapseCheck(const Matrix& a_last,
                                   const std::vector<int>& class_index) {
  const int n = a_last.rows();
  const int kk = a_last.cols();
  Require(static_cast<int>(class_index.size()) == n, ErrorCode::kShapeError,
          "one class index per row required");
  Require(kk >= 2, ErrorCode::kShapeError, "need K >= 2 activation columns");
  std::vector<int> sizes(kk, 0);
  for (int c : class_index) {
    Require(c >= 0 && c < kk, ErrorCode::kInvalidLabel,
            "class index " + std::to_string(c) + " outside [0, K)");
    ++sizes[c];
  }
  for (int s : sizes) {
    Require(s == sizes[0] && s > 0, ErrorCode::kUnbalancedClasses,
            "class sizes differ; the collapse target assumes balance");
  }
  Matrix centered = a_last;
  for (int c = 0; c < kk; ++c) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += a_last(i, c);
    mean /= n;
    for (int i = 0; i < n; ++i) centered(i, c) -= mean;
  }
  CollapseReport rep;
  rep.class_means = Matrix(kk, kk);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < kk; ++c) rep.class_means(class_index[i], c) += centered(i, c);
  }
  rep.class_means *= 1.0 / sizes[0];
  const double scale = std::sqrt(static_cast<double>(kk) / n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < kk; ++c) {
      const double target = scale * ((class_index[i] == c ? 1.0 : 0.0) - 1.0 / kk);
      rep.max_entry_error = std::max(rep.max_entry_error, std::abs(centered(i, c) - target));
    }
  }
  rep.alpha_target = std::sqrt(static_cast<double>(kk - 1) / n);
  rep.spec = MakeEtf(kk, rep.alpha_target);
  const EtfSpec unit = MakeEtf(kk, 1.0);
  rep.alpha_fit = FrobeniusDot(rep.class_means, unit.columns) /
                  FrobeniusDot(unit.columns, unit.columns);
  rep.etf_distance = FrobeniusNorm(rep.class_means - rep.spec.columns);
  return rep;
}

double SingularProjection(const Matrix& w1, const Matrix& directions) {
  Require(w1.rows() == directions.rows(), ErrorCode::kShapeError,
          "directions must live in the input space of W1");
  const SvdResult s = Svd(directions);
  const int r = NumericalRank(directions);
  const Matrix basis = s.u.block(0, 0, directions.rows(), r);
  double largest = 0.0;
  for (int c = 0; c < w1.cols(); ++c) largest = std::max(largest, Norm(w1.col(c)));
  if (largest == 0.0) return 0.0;
  double total = 0.0;
  int count = 0;
  for (int c = 0; c < w1.cols(); ++c) {
    const Vector col = w1.col(c);
    const double nrm = Norm(col);
    if (nrm <= 1e-12 * largest) continue;
    const Vector proj = MatTVec(basis, Scaled(col, 1.0 / nrm));
    total += Dot(proj, proj);
    ++count;
  }
  return total / count;
}

namespace {

bool ActiveBranch(const NetworkParams& p, const Architecture& arch, int j) {
  return BranchHeadMass(p, arch, j) > 0.0;
}

}  // namespace

std::vector<double> BranchAlignment(const NetworkParams& params,
                                    const Architecture& arch) {
  Require(arch.depth >= 3, ErrorCode::kInvalidInput, "alignment needs L >= 3");
  std::vector<double> out;
  for (int j = 0; j < arch.branches; ++j) {
    if (!ActiveBranch(params, arch, j)) continue;
    std::vector<const Matrix*> layers;
    for (const Matrix& w : params.weights[j]) layers.push_back(&w);
    layers.push_back(&params.head[j]);
    std::vector<SvdResult> svds;
    for (size_t l = 0; l < layers.size(); ++l) {
      Require(MaxAbs(*layers[l]) > 0.0, ErrorCode::kDegenerateBranch,
              "branch " + std::to_string(j) + " layer " + std::to_string(l + 1) +
                  " is zero");
      svds.push_back(Svd(*layers[l]));
    }
    for (size_t l = 1; l < layers.size(); ++l) {
      const Vector right = svds[l - 1].v.col(0);
      const Vector left = svds[l].u.col(0);
      out.push_back(std::abs(Dot(right, left)));
    }
  }
  return out;
}

StructureReport Structure(const NetworkParams& params, const Architecture& arch,
                          const Dataset* ds, double rank_tol) {
  ValidateParams(params, arch);
  StructureReport rep;
  const int depth = arch.depth;
  auto layer = [&](int j, int l) -> const Matrix& {
    return l == depth ? params.head[j] : params.weights[j][l - 1];
  };
  for (int l = 1; l <= depth; ++l) {
    if (arch.branches == 1 || depth == 2) {
      std::vector<Matrix> parts;
      for (int j = 0; j < arch.branches; ++j) parts.push_back(layer(j, l));
      const Matrix m = l == 1 ? HStack(parts) : VStack(parts);
      rep.ranks.push_back(NumericalRank(m, rank_tol));
      const double f = FrobeniusNorm(m);
      rep.spectral_over_frobenius.push_back(f > 0.0 ? SpectralNorm(m) / f : 0.0);
      rep.singular_values.push_back(SingularValues(m));
      continue;
    }
    int rank = 0;
    double ratio = 1.0;
    bool any = false;
    Vector sv;
    for (int j = 0; j < arch.branches; ++j) {
      if (!ActiveBranch(params, arch, j)) continue;
      const Matrix& m = layer(j, l);
      const double f = FrobeniusNorm(m);
      if (f == 0.0) continue;
      rank = std::max(rank, NumericalRank(m, rank_tol));
      ratio = std::min(ratio, SpectralNorm(m) / f);
      if (!any) sv = SingularValues(m);
      any = true;
    }
    rep.ranks.push_back(rank);
    rep.spectral_over_frobenius.push_back(any ? ratio : 0.0);
    rep.singular_values.push_back(sv);
  }
  if (depth >= 3) {
    try {
      rep.alignment = BranchAlignment(params, arch);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateBranch) throw;
    }
  }
  if (ds != nullptr && arch.inputs == 1) {
    rep.kinks = DetectKinks(params, arch, ds->x.col(0)).kinks;
  }
  if (ds != nullptr && arch.any_bn() && IsOneHot(ds->labels)) {
    const ActivationTrace tr = Forward(params, arch, ds->x);
    std::vector<Matrix> cols;
    for (const BranchTrace& b : tr.branches) cols.push_back(b.act.back());
    const Matrix a_last = HStack(cols);
    if (a_last.cols() == ds->k()) {
      try {
        const CollapseReport c = NeuralCollapseCheck(a_last, ClassIndex(ds->labels));
        rep.etf_distance = c.etf_distance;
        rep.etf_alpha = c.alpha_fit;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kUnbalancedClasses) throw;
      }
    }
  }
  return rep;
}

}  // namespace dn
