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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "duality_nets/error.h"
#include "duality_nets/forward.h"
#include "duality_nets/rng.h"

namespace dn {

namespace {

constexpr double kDivergence = 1e12;

Dataset Rows(const Dataset& ds, const std::vector<int>& idx) {
  Dataset b;
  b.x = ds.x.select_rows(idx);
  b.labels = ds.labels.select_rows(idx);
  return b;
}

}  // namespace

void ValidateTrainConfig(const TrainConfig& c) {
  Require(c.learning_rate > 0.0 && std::isfinite(c.learning_rate),
          ErrorCode::kConfigError, "learning_rate must be > 0");
  Require(c.momentum >= 0.0 && c.momentum < 1.0, ErrorCode::kConfigError,
          "momentum must lie in [0, 1)");
  Require(c.steps >= 1, ErrorCode::kConfigError, "steps must be >= 1");
  Require(c.batch_size >= 0, ErrorCode::kConfigError, "batch_size must be >= 0");
  Require(c.beta >= 0.0, ErrorCode::kConfigError, "beta must be >= 0");
  Require(c.probe_every >= 0, ErrorCode::kConfigError, "probe_every must be >= 0");
  Require(c.init_scale > 0.0, ErrorCode::kConfigError, "init_scale must be > 0");
}

NetworkParams InitParams(const Architecture& arch, double scale, uint64_t seed) {
  Require(scale > 0.0, ErrorCode::kInvalidInput, "init scale must be > 0");
  NetworkParams p = ZeroParams(arch);
  const Rng root(seed, 0x1417);
  for (int j = 0; j < arch.branches; ++j) {
    Rng rng = root.Split(static_cast<uint64_t>(j));
    for (int l = 1; l <= arch.hidden_layers(); ++l) {
      Matrix& w = p.weights[j][l - 1];
      const double bound = scale / std::sqrt(static_cast<double>(arch.fan_in(l)));
      for (int i = 0; i < w.size(); ++i) w.data()[i] = rng.Uniform(-bound, bound);
      if (arch.has_bn(l)) {
        std::fill(p.bn_scale[j][l - 1].begin(), p.bn_scale[j][l - 1].end(), 1.0);
      }
    }
    if (arch.last_hidden_bias) {
      const double bound =
          scale / std::sqrt(static_cast<double>(arch.fan_in(arch.hidden_layers())));
      for (double& b : p.biases[j]) b = rng.Uniform(-bound, bound);
    }
    Matrix& h = p.head[j];
    const double bound = scale / std::sqrt(static_cast<double>(arch.last_width()));
    for (int i = 0; i < h.size(); ++i) h.data()[i] = rng.Uniform(-bound, bound);
  }
  return p;
}

std::vector<double*> ParamPointers(NetworkParams& p, const Architecture& arch) {
  std::vector<double*> out;
  for (int j = 0; j < arch.branches; ++j) {
    for (int l = 1; l <= arch.hidden_layers(); ++l) {
      Matrix& w = p.weights[j][l - 1];
      for (int i = 0; i < w.size(); ++i) out.push_back(w.data() + i);
      if (arch.has_bn(l)) {
        for (double& g : p.bn_scale[j][l - 1]) out.push_back(&g);
        for (double& a : p.bn_shift[j][l - 1]) out.push_back(&a);
      }
    }
    if (arch.last_hidden_bias) {
      for (double& b : p.biases[j]) out.push_back(&b);
    }
    Matrix& h = p.head[j];
    for (int i = 0; i < h.size(); ++i) out.push_back(h.data() + i);
  }
  return out;
}

double GradientNorm(const NetworkParams& grad, const Architecture& arch) {
  NetworkParams copy = grad;
  double s = 0.0;
  for (double* v : ParamPointers(copy, arch)) s += *v * *v;
  return std::sqrt(s);
}

NetworkParams Gradients(const NetworkParams& params, const Architecture& arch,
                        const Dataset& batch, double beta) {
  Require(beta >= 0.0, ErrorCode::kInvalidInput, "beta must be >= 0");
  const ActivationTrace tr = Forward(params, arch, batch.x);
  const Matrix resid = tr.output - batch.labels;
  const int n = batch.n();
  const int hidden = arch.hidden_layers();
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  // Weight decay covers every layer, or only the head and the last BN layer.
  const bool decay_all = !arch.any_bn();
  NetworkParams g = ZeroParams(arch);
  for (int j = 0; j < arch.branches; ++j) {
    const BranchTrace& bt = tr.branches[j];
    g.head[j] = MatTMul(bt.act.back(), resid) + params.head[j] * beta;
    Matrix grad = MatMulT(resid, params.head[j]);  // ∂/∂A_{L-1}
    for (int l = hidden; l >= 1; --l) {
      if (arch.activation == Activation::kRelu) {
        const Matrix& v = bt.post_bn[l - 1];
        for (int i = 0; i < grad.size(); ++i) {
          if (v.data()[i] <= 0.0) grad.data()[i] = 0.0;
        }
      }
      if (arch.has_bn(l)) {
        const Matrix& h = bt.normalized[l - 1];
        const Vector& gamma = params.bn_scale[j][l - 1];
        const Vector& alpha = params.bn_shift[j][l - 1];
        const bool decay_bn = l == hidden;
        for (int u = 0; u < grad.cols(); ++u) {
          double hg = 0.0;
          double sum = 0.0;
          for (int i = 0; i < n; ++i) {
            hg += h(i, u) * grad(i, u);
            sum += grad(i, u);
          }
          g.bn_scale[j][l - 1][u] = hg + (decay_bn ? beta * gamma[u] : 0.0);
          g.bn_shift[j][l - 1][u] = sum * inv_sqrt_n + (decay_bn ? beta * alpha[u] : 0.0);
          // ∂h/∂z = (P - h hᵀ) / ‖Pz‖ applied to γ·grad.
          const double mean = sum / n;
          const double scale = gamma[u] / bt.centered_norm[l - 1][u];
          for (int i = 0; i < n; ++i) {
            grad(i, u) = scale * (grad(i, u) - mean - h(i, u) * hg);
          }
        }
      }
      if (l == hidden && arch.last_hidden_bias) {
        Vector& db = g.biases[j];
        for (int i = 0; i < n; ++i) {
          for (int u = 0; u < grad.cols(); ++u) db[u] += grad(i, u);
        }
      }
      const Matrix& input = l == 1 ? batch.x : bt.act[l - 2];
      g.weights[j][l - 1] = MatTMul(input, grad);
      if (decay_all) g.weights[j][l - 1] += params.weights[j][l - 1] * beta;
      if (l > 1) grad = MatMulT(grad, params.weights[j][l - 1]);
    }
  }
  return g;
}

double FdCheck(const NetworkParams& params, const Architecture& arch,
               const Dataset& ds, double beta, double epsilon, uint64_t seed) {
  Require(epsilon >= 1e-7 && epsilon <= 1e-3, ErrorCode::kInvalidInput,
          "epsilon must lie in [1e-7, 1e-3]");
  NetworkParams grad = Gradients(params, arch, ds, beta);
  NetworkParams probe = params;
  std::vector<double*> g = ParamPointers(grad, arch);
  std::vector<double*> p = ParamPointers(probe, arch);
  Rng rng(seed, 0xFDC);
  const int samples = std::min<int>(64, static_cast<int>(p.size()));
  std::vector<int> idx(p.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (int s = 0; s < samples; ++s) {
    const int pick = s + static_cast<int>(rng.Below(idx.size() - s));
    std::swap(idx[s], idx[pick]);
  }
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    double* v = p[idx[s]];
    const double saved = *v;
    *v = saved + epsilon;
    const double up = PrimalObjective(probe, arch, ds, beta);
    *v = saved - epsilon;
    const double down = PrimalObjective(probe, arch, ds, beta);
    *v = saved;
    const double fd = (up - down) / (2.0 * epsilon);
    const double an = *g[idx[s]];
    worst = std::max(worst, std::abs(an - fd) /
                                (std::max(std::abs(an), std::abs(fd)) + 1e-6));
  }
  return worst;
}

Trajectory RunTraining(const NetworkParams& init, const Architecture& arch,
                       const Dataset& ds, const TrainConfig& config) {
  ValidateTrainConfig(config);
  ValidateParams(init, arch);
  const int n = ds.n();
  const bool full = config.batch_size == 0 || config.batch_size >= n;
  Trajectory traj;
  NetworkParams params = init;
  NetworkParams velocity = ZeroParams(arch);
  std::vector<double*> theta = ParamPointers(params, arch);
  std::vector<double*> vel = ParamPointers(velocity, arch);
  Rng rng(config.seed, 0x5D6);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  int cursor = n;

  auto record = [&](int step) {
    const double obj = PrimalObjective(params, arch, ds, config.beta);
    if (!std::isfinite(obj) || obj > kDivergence) {
      Fail(ErrorCode::kDiverged, "objective " + std::to_string(obj) +
                                     " at step " + std::to_string(step));
    }
    TrajectoryPoint pt;
    pt.step = step;
    pt.objective = obj;
    if (config.structure) pt.structure = Structure(params, arch, &ds);
    traj.points.push_back(std::move(pt));
    return obj;
  };
  record(0);
  for (int step = 1; step <= config.steps; ++step) {
    NetworkParams grad;
    if (full) {
      grad = Gradients(params, arch, ds, config.beta);
    } else {
      std::vector<int> idx;
      for (int b = 0; b < config.batch_size; ++b) {
        if (cursor == n) {
          for (int i = n - 1; i > 0; --i) {
            std::swap(order[i], order[rng.Below(static_cast<uint64_t>(i) + 1)]);
          }
          cursor = 0;
        }
        idx.push_back(order[cursor++]);
      }
      grad = Gradients(params, arch, Rows(ds, idx), config.beta);
    }
    const std::vector<double*> g = ParamPointers(grad, arch);
    for (size_t i = 0; i < theta.size(); ++i) {
      *vel[i] = config.momentum * *vel[i] - config.learning_rate * *g[i];
      *theta[i] += *vel[i];
      if (!std::isfinite(*theta[i]) || std::abs(*theta[i]) > kDivergence) {
        Fail(ErrorCode::kDiverged, "parameter blew up at step " + std::to_string(step));
      }
    }
    const bool last = step == config.steps;
    if (last || (config.probe_every > 0 && step % config.probe_every == 0)) {
      record(step);
    }
  }
  traj.final_objective = traj.points.back().objective;
  traj.final_params = std::move(params);
  return traj;
}

}  // namespace dn
