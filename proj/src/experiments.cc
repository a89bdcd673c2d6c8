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

#include "duality_nets/experiments.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "duality_nets/closedform.h"
#include "duality_nets/data.h"
#include "duality_nets/duality.h"
#include "duality_nets/error.h"
#include "duality_nets/forward.h"
#include "duality_nets/probes.h"
#include "duality_nets/rescale.h"
#include "duality_nets/rng.h"

namespace dn {

namespace {

std::string Tag(const std::string& prefix, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%g", prefix.c_str(), v);
  return buf;
}

class Sink {
 public:
  explicit Sink(ExperimentResult& r) : r_(r) {}
  void Row(double key, const std::string& metric, double value) {
    r_.rows.push_back({r_.experiment, key, metric, value});
  }
  void Metric(const std::string& name, double value) { r_.metrics[name] = value; }
  void Assert(Assertion a) { r_.assertions.push_back(std::move(a)); }
  Plot& plot() { return r_.plot; }

 private:
  ExperimentResult& r_;
};

Architecture FitArch(Architecture a, const Dataset& ds) {
  a.inputs = ds.d();
  a.outputs = ds.k();
  ValidateArchitecture(a);
  return a;
}

double FirstBeta(const ExperimentConfig& c) {
  Require(!c.betas.empty(), ErrorCode::kConfigError, "/beta: a regularization weight is required");
  return c.betas.front();
}

// Numerical rank with an absolute floor, so a layer that decayed to ~0 is
// rank 0 rather than rank 1.
int TrainedRank(const Matrix& w) {
  const Vector s = SingularValues(w);
  if (s.empty()) return 0;
  const double floor = kRankTol * std::max(s[0], 1.0);
  return static_cast<int>(std::count_if(s.begin(), s.end(),
                                        [&](double v) { return v > floor; }));
}

Matrix FirstLayer(const NetworkParams& p) {
  std::vector<Matrix> blocks;
  for (const auto& branch : p.weights) blocks.push_back(branch[0]);
  return HStack(blocks);
}

// Frobenius distance relative to the oracle, or to the labels when the oracle
// is the zero map.
double RelativeError(const Matrix& out, const Matrix& oracle, const Matrix& labels) {
  const double scale = FrobeniusNorm(oracle);
  const double denom = scale > 1e-12 * FrobeniusNorm(labels) ? scale : FrobeniusNorm(labels);
  return FrobeniusNorm(out - oracle) / std::max(denom, 1e-300);
}

std::vector<double> Grid(double lo, double hi, int count) {
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i) g[i] = lo + (hi - lo) * i / (count - 1);
  return g;
}

// ---------------------------------------------------------------- Fig. 1

struct SplineRun {
  double phase1 = 0.0;
  double interp = 0.0;
  double fraction = 0.0;
  int kinks = 0;
  std::vector<double> curve;
};

void Fig1(const ExperimentConfig& c, Sink& out) {
  const Dataset ds = BuildDataset(c.data);
  Require(ds.d() == 1 && ds.k() == 1, ErrorCode::kConfigError,
          "/dataset: fig1_spline needs one input column and scalar labels");
  std::vector<double> xs = ds.x.col(0);
  const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
  const double lo = *mn, hi = *mx, span = hi - lo;
  const std::vector<double> grid = Grid(lo - 0.1 * span, hi + 0.1 * span, 401);
  Matrix grid_x(static_cast<int>(grid.size()), 1);
  for (size_t i = 0; i < grid.size(); ++i) grid_x(static_cast<int>(i), 0) = grid[i];
  Plot& plot = out.plot();
  plot = {"Interpolating splines", "x", "f(x)", false, false, {}};
  plot.series.push_back({"data", xs, ds.labels.col(0), true});

  Dataset cf = ds;
  if (!cf.rank_one) cf.rank_one = RankOneFactor{xs, {1.0}};
  const int depths = static_cast<int>(c.depths.size());
  std::vector<Network> nets(depths);
  const int threads = EffectiveThreads(c.threads);
  ParallelFor(depths, threads, [&](int i) {
    Architecture a;
    a.depth = c.depths[i];
    a.branches = 2 * ds.n() + 1;
    a.widths.assign(a.depth - 1, 1);
    a.activation = Activation::kRelu;
    a.last_hidden_bias = true;
    nets[i] = DeepReluRankOne(cf, a, 0.0);
  });
  for (int i = 0; i < depths; ++i) {
    const int depth = c.depths[i];
    const Network& net = nets[i];
    const double interp = MaxAbs(ForwardOutput(net.params, net.arch, ds.x) - ds.labels);
    const KinkReport kr = DetectKinks(net.params, net.arch, xs);
    double offset = 0.0;
    for (double k : kr.kinks) {
      double best = std::numeric_limits<double>::infinity();
      for (double x : xs) best = std::min(best, std::abs(k - x));
      offset = std::max(offset, best);
    }
    out.Row(depth, "closed_interp_error", interp);
    out.Row(depth, "closed_kinks", static_cast<double>(kr.kinks.size()));
    out.Row(depth, "closed_max_kink_offset", offset);
    const std::string tag = "closed_L" + std::to_string(depth);
    out.Assert(Check(tag + "_interpolation", interp, "<=", 1e-8));
    out.Assert(Check(tag + "_kinks_at_data", offset, "<=", 0.5 * kr.grid_step));
    plot.series.push_back({"closed form L=" + std::to_string(depth), grid,
                           ForwardOutput(net.params, net.arch, grid_x).col(0)});
  }

  if (c.train.steps == 0) return;
  // Gradient descent on the centred input (z, 1); the constant column acts
  // as a first-layer bias.
  const double center = 0.5 * (lo + hi), half = 0.5 * span;
  Dataset gd;
  gd.x = Matrix(ds.n(), 2);
  gd.labels = ds.labels;
  for (int i = 0; i < ds.n(); ++i) {
    gd.x(i, 0) = (xs[i] - center) / half;
    gd.x(i, 1) = 1.0;
  }
  const Architecture arch = FitArch(c.arch, gd);
  Require(arch.activation == Activation::kRelu, ErrorCode::kConfigError,
          "/arch/activation: fig1_spline trains a relu network");
  const auto evaluate = [&](const NetworkParams& p, double x) {
    Matrix m(1, 2);
    m(0, 0) = (x - center) / half;
    m(0, 1) = 1.0;
    return ForwardOutput(p, arch, m)(0, 0);
  };
  std::vector<SplineRun> runs(c.runs);
  ParallelFor(c.runs, threads, [&](int r) {
    const uint64_t seed = c.train.seed + static_cast<uint64_t>(r);
    NetworkParams init = InitParams(arch, c.train.init_scale, seed);
    // Start every first-layer kink inside the (slightly padded) data range.
    Rng place(seed, 77);
    for (int j = 0; j < arch.branches; ++j) {
      Matrix& w = init.weights[j][0];
      for (int u = 0; u < w.cols(); ++u) w(1, u) = -w(0, u) * place.Uniform(-1.1, 1.1);
    }
    TrainConfig t = c.train;
    t.seed = seed;
    t.beta = FirstBeta(c);
    Trajectory tr = RunTraining(init, arch, gd, t);
    SplineRun& run = runs[r];
    run.phase1 = PrimalObjective(tr.final_params, arch, gd, t.beta);
    if (c.finetune_steps > 0) {
      t.beta = c.finetune_beta;
      t.steps = c.finetune_steps;
      tr = RunTraining(tr.final_params, arch, gd, t);
    }
    run.interp = MaxAbs(ForwardOutput(tr.final_params, arch, gd.x) - gd.labels);
    const KinkReport kr = DetectKinks(
        [&](double x) { return evaluate(tr.final_params, x); }, lo - 0.1 * span,
        hi + 0.1 * span);
    run.kinks = static_cast<int>(kr.kinks.size());
    run.fraction = kr.mass_fraction_near(xs, 0.02 * span);
    for (double x : grid) run.curve.push_back(evaluate(tr.final_params, x));
  });
  int best = 0;
  for (int r = 0; r < c.runs; ++r) {
    out.Row(r, "gd_phase1_objective", runs[r].phase1);
    out.Row(r, "gd_interp_error", runs[r].interp);
    out.Row(r, "gd_kink_mass_fraction", runs[r].fraction);
    out.Row(r, "gd_kinks", runs[r].kinks);
    if (runs[r].phase1 < runs[best].phase1) best = r;
  }
  out.Metric("gd_selected_run", best);
  out.Metric("gd_interp_error", runs[best].interp);
  out.Metric("gd_kink_mass_fraction", runs[best].fraction);
  out.Assert(Check("gd_interpolation", runs[best].interp, "<=", 1e-3));
  out.Assert(Check("gd_kink_mass_near_data", runs[best].fraction, ">=", 0.95));
  plot.series.push_back({"gradient descent", grid, runs[best].curve});
}

// ---------------------------------------------------------------- Fig. 2

struct SweepPoint {
  int rank = 0;
  int oracle_rank = 0;
  double error = 0.0;
  double objective = 0.0;
  double projection = 0.0;
};

Vector LabelSpectrum(const Dataset& ds) { return SingularValues(MatTMul(ds.labels, ds.x)); }

void Fig2(const ExperimentConfig& c, Sink& out) {
  const Dataset ds = BuildDataset(c.data);
  const Architecture arch = FitArch(c.arch, ds);
  Require(arch.depth == 2 && arch.activation == Activation::kLinear,
          ErrorCode::kConfigError, "/arch: fig2_rank_vs_beta trains a two-layer linear network");
  const Vector sigma = LabelSpectrum(ds);
  std::vector<double> betas = c.betas;
  if (betas.empty()) {
    for (double s : sigma) {
      if (s <= 1e-12 * sigma[0]) continue;
      betas.push_back(0.97 * s);
      betas.push_back(1.03 * s);
    }
  }
  std::sort(betas.begin(), betas.end());
  const NetworkParams init = InitParams(arch, c.train.init_scale, c.train.seed);
  std::vector<SweepPoint> pts(betas.size());
  ParallelFor(static_cast<int>(betas.size()), EffectiveThreads(c.threads), [&](int i) {
    TrainConfig t = c.train;
    t.beta = betas[i];
    const Trajectory tr = RunTraining(init, arch, ds, t);
    const Network oracle = TwoLayerLinear(ds, betas[i]);
    pts[i].rank = TrainedRank(FirstLayer(tr.final_params));
    pts[i].oracle_rank = static_cast<int>(std::count_if(
        sigma.begin(), sigma.end(), [&](double s) { return s > betas[i]; }));
    pts[i].error = RelativeError(ForwardOutput(tr.final_params, arch, ds.x),
                                 ForwardOutput(oracle.params, oracle.arch, ds.x), ds.labels);
    pts[i].objective = tr.final_objective;
  });
  int violations = 0, mismatches = 0;
  double worst_error = 0.0;
  for (size_t i = 0; i < betas.size(); ++i) {
    out.Row(betas[i], "rank", pts[i].rank);
    out.Row(betas[i], "oracle_rank", pts[i].oracle_rank);
    out.Row(betas[i], "oracle_rel_error", pts[i].error);
    out.Row(betas[i], "objective", pts[i].objective);
    if (i > 0 && pts[i].rank > pts[i - 1].rank) ++violations;
    if (pts[i].rank != pts[i].oracle_rank) ++mismatches;
    worst_error = std::max(worst_error, pts[i].error);
  }
  for (size_t i = 0; i < sigma.size(); ++i) out.Metric("sigma_" + std::to_string(i + 1), sigma[i]);
  out.Assert(Check("rank_monotone_violations", violations, "==", 0));
  out.Assert(Check("rank_matches_soft_threshold", mismatches, "==", 0));
  out.Assert(Check("oracle_max_rel_error", worst_error, "<=", 1e-3));
  int transitions = 0;
  for (size_t i = 1; i < betas.size(); ++i) {
    if (pts[i].rank >= pts[i - 1].rank) continue;
    const double at = std::sqrt(betas[i] * betas[i - 1]);
    double nearest = std::numeric_limits<double>::infinity();
    for (double s : sigma) {
      if (s > 0.0) nearest = std::min(nearest, std::abs(at - s) / s);
    }
    out.Row(at, "transition_beta", at);
    out.Assert(Check(Tag("transition_near_sigma_at_", at), nearest, "<=", 0.05));
    ++transitions;
  }
  out.Metric("transitions", transitions);
  out.Assert(Check("transitions_seen", transitions, ">=", 1));
  Plot& plot = out.plot();
  plot = {"Rank of W1 versus beta", "beta", "rank", true, false, {}};
  PlotSeries gd{"trained rank", betas, {}}, th{"soft-threshold rank", betas, {}, true};
  for (const SweepPoint& p : pts) {
    gd.y.push_back(p.rank);
    th.y.push_back(p.oracle_rank);
  }
  plot.series = {gd, th, {"singular values", sigma, std::vector<double>(sigma.size(), 0.0), true}};
}

void Fig6(const ExperimentConfig& c, Sink& out) {
  const Dataset ds = BuildDataset(c.data);
  const Architecture arch = FitArch(c.arch, ds);
  Require(arch.activation == Activation::kLinear, ErrorCode::kConfigError,
          "/arch/activation: fig6_projections trains a linear network");
  const Vector sigma = LabelSpectrum(ds);
  const SvdResult svd = Svd(MatTMul(ds.x, ds.labels));
  std::vector<double> betas = c.betas;
  if (betas.empty()) {
    for (size_t r = 1; r < sigma.size() && r <= 3; ++r) {
      betas.push_back(std::sqrt(sigma[r - 1] * sigma[r]));
    }
  }
  std::sort(betas.begin(), betas.end(), std::greater<>());
  const NetworkParams init = InitParams(arch, c.train.init_scale, c.train.seed);
  std::vector<SweepPoint> pts(betas.size());
  ParallelFor(static_cast<int>(betas.size()), EffectiveThreads(c.threads), [&](int i) {
    TrainConfig t = c.train;
    t.beta = betas[i];
    const Trajectory tr = RunTraining(init, arch, ds, t);
    const int r = static_cast<int>(std::count_if(sigma.begin(), sigma.end(),
                                                 [&](double s) { return s > betas[i]; }));
    pts[i].oracle_rank = r;
    pts[i].rank = TrainedRank(FirstLayer(tr.final_params));
    pts[i].projection =
        r == 0 ? 0.0
               : SingularProjection(FirstLayer(tr.final_params),
                                    svd.u.block(0, 0, ds.d(), r));
  });
  Plot& plot = out.plot();
  plot = {"Projection of first-layer neurons", "active singular directions",
          "mean squared projection", false, false, {}};
  PlotSeries s{"trained W1", {}, {}, true};
  for (size_t i = 0; i < betas.size(); ++i) {
    out.Row(betas[i], "directions", pts[i].oracle_rank);
    out.Row(betas[i], "rank", pts[i].rank);
    out.Row(betas[i], "projection", pts[i].projection);
    if (pts[i].oracle_rank > 0) {
      out.Assert(Check(Tag("projection_mass_beta_", betas[i]), pts[i].projection, ">=", 0.95));
    }
    s.x.push_back(pts[i].oracle_rank);
    s.y.push_back(pts[i].projection);
  }
  plot.series.push_back(s);
}

// ---------------------------------------------------------------- Fig. 3

Trajectory TrainTraced(const ExperimentConfig& c, const Dataset& ds,
                       const Architecture& arch) {
  TrainConfig t = c.train;
  t.beta = FirstBeta(c);
  t.structure = true;
  return RunTraining(InitParams(arch, t.init_scale, t.seed), arch, ds, t);
}

void Fig3(const ExperimentConfig& c, Sink& out) {
  const Dataset ds = BuildDataset(c.data);
  const Architecture arch = FitArch(c.arch, ds);
  const Trajectory tr = TrainTraced(c, ds, arch);
  const int hidden = arch.hidden_layers();
  Plot& plot = out.plot();
  plot = {"Operator over Frobenius norm", "step", "||W||_2 / ||W||_F", false, false, {}};
  plot.series.resize(arch.depth);
  for (int l = 0; l < arch.depth; ++l) plot.series[l].name = "layer " + std::to_string(l + 1);
  for (const TrajectoryPoint& p : tr.points) {
    out.Row(p.step, "objective", p.objective);
    for (int l = 0; l < arch.depth; ++l) {
      const double ratio = p.structure.spectral_over_frobenius[l];
      out.Row(p.step, "ratio_layer" + std::to_string(l + 1), ratio);
      out.Row(p.step, "rank_layer" + std::to_string(l + 1), p.structure.ranks[l]);
      plot.series[l].x.push_back(p.step);
      plot.series[l].y.push_back(ratio);
    }
  }
  const StructureReport& last = tr.points.back().structure;
  for (int l = 0; l < hidden; ++l) {
    out.Assert(Check("ratio_layer" + std::to_string(l + 1),
                     last.spectral_over_frobenius[l], ">=", 0.99));
  }
  for (size_t i = 0; i < last.alignment.size(); ++i) {
    out.Row(tr.points.back().step, "alignment_" + std::to_string(i + 1), last.alignment[i]);
    out.Assert(Check("alignment_" + std::to_string(i + 1), last.alignment[i], ">=", 0.99));
  }
  const double trivial = 0.5 * FrobeniusNorm(ds.labels) * FrobeniusNorm(ds.labels);
  out.Metric("final_objective", tr.final_objective);
  out.Metric("zero_network_objective", trivial);
  out.Assert(Check("beats_zero_network", tr.final_objective, "<=", trivial));
}

void Fig3b(const ExperimentConfig& c, Sink& out) {
  const Dataset ds = BuildDataset(c.data);
  const Architecture arch = FitArch(c.arch, ds);
  const Trajectory tr = TrainTraced(c, ds, arch);
  const int hidden = arch.hidden_layers();
  Plot& plot = out.plot();
  plot = {"Layer ranks during training", "step", "numerical rank", false, false, {}};
  plot.series.resize(hidden);
  for (int l = 0; l < hidden; ++l) plot.series[l].name = "layer " + std::to_string(l + 1);
  for (const TrajectoryPoint& p : tr.points) {
    out.Row(p.step, "objective", p.objective);
    for (int l = 0; l < arch.depth; ++l) {
      out.Row(p.step, "rank_layer" + std::to_string(l + 1), p.structure.ranks[l]);
      if (l < hidden) {
        plot.series[l].x.push_back(p.step);
        plot.series[l].y.push_back(p.structure.ranks[l]);
      }
    }
  }
  const StructureReport& last = tr.points.back().structure;
  for (int l = 0; l < hidden; ++l) {
    out.Assert(Check("rank_layer" + std::to_string(l + 1), last.ranks[l], "==", 1));
  }
  out.Metric("final_objective", tr.final_objective);
}

// ---------------------------------------------------------------- Fig. 4

Architecture AtDepth(Architecture a, int depth) {
  const int fill = a.widths.empty() ? 1 : a.widths.front();
  a.depth = depth;
  a.widths.assign(depth - 1, fill);
  return a;
}

void Fig4(const ExperimentConfig& c, Sink& out) {
  const Dataset ds = BuildDataset(c.data);
  const double beta = FirstBeta(c);
  const std::vector<int> depths = c.depths.empty() ? std::vector<int>{c.arch.depth} : c.depths;
  const int nd = static_cast<int>(depths.size());
  std::vector<double> closed(nd), gaps(nd);
  std::vector<Trajectory> trajs(nd * c.runs);
  std::vector<double> finals(nd * c.runs);
  const int threads = EffectiveThreads(c.threads);
  ParallelFor(nd * (c.runs + 1), threads, [&](int task) {
    const int i = task / (c.runs + 1), r = task % (c.runs + 1) - 1;
    const Architecture arch = FitArch(AtDepth(c.arch, depths[i]), ds);
    if (r < 0) {
      const Network net = DeepReluWhitened(ds, beta, arch, {TPolicy::kOptimal});
      gaps[i] = *DualityGap(net.params, arch, ds, beta).relative_gap;
      const NetworkParams wd = ToWeightDecayForm(net.params, arch).first;
      closed[i] = PrimalObjective(wd, arch, ds, beta);
      return;
    }
    TrainConfig t = c.train;
    t.beta = beta;
    t.seed = c.train.seed + static_cast<uint64_t>(r);
    trajs[i * c.runs + r] =
        RunTraining(InitParams(arch, t.init_scale, t.seed), arch, ds, t);
    finals[i * c.runs + r] =
        PrimalObjective(trajs[i * c.runs + r].final_params, arch, ds, beta);
  });
  Plot& plot = out.plot();
  plot = {"Training objective on whitened data", "step", "objective", false, true, {}};
  for (int i = 0; i < nd; ++i) {
    const std::string tag = "L" + std::to_string(depths[i]);
    out.Row(depths[i], "closed_form_objective", closed[i]);
    out.Row(depths[i], "closed_form_relative_gap", gaps[i]);
    out.Assert(Check(tag + "_closed_form_gap", gaps[i], "<=", 1e-8));
    for (int r = 0; r < c.runs; ++r) {
      const Trajectory& tr = trajs[i * c.runs + r];
      const std::string name = tag + "_run" + std::to_string(r);
      PlotSeries s{"SGD " + name, {}, {}};
      for (const TrajectoryPoint& p : tr.points) {
        out.Row(p.step, "sgd_" + name + "_objective", p.objective);
        s.x.push_back(p.step);
        s.y.push_back(p.objective);
      }
      out.Row(depths[i], "sgd_final_objective", finals[i * c.runs + r]);
      // Strict: the closed form must win by at least the tolerance.
      out.Assert(Check(name + "_closed_form_below_sgd", closed[i] - finals[i * c.runs + r],
                       "<=", -1e-9));
      if (r == 0) plot.series.push_back(s);
    }
    if (!trajs.empty() && c.runs > 0) {
      const Trajectory& tr = trajs[i * c.runs];
      plot.series.push_back({"closed form " + tag,
                             {0.0, static_cast<double>(tr.points.back().step)},
                             {closed[i], closed[i]}});
    }
  }
}

// ---------------------------------------------------------------- collapse

Dataset CollapseData(int n, int k, uint64_t seed) {
  Rng rng(seed, 0xC011);
  Dataset ds;
  ds.x = rng.NormalMatrix(n, n + 1);
  ds.labels = BalancedOneHot(n, k);
  ds.class_sizes.assign(k, n / k);
  return ds;
}

Architecture CollapseArch(int n, int k) {
  Architecture a;
  a.depth = 3;
  a.branches = k;
  a.inputs = n + 1;
  a.widths = {2 * n, 1};
  a.activation = Activation::kRelu;
  a.batch_norm = true;
  a.outputs = k;
  return a;
}

void Collapse(const ExperimentConfig& c, Sink& out) {
  const double beta = FirstBeta(c);
  const int count = static_cast<int>(c.sizes.size());
  std::vector<CollapseReport> reports(count);
  ParallelFor(count, EffectiveThreads(c.threads), [&](int i) {
    const auto [n, k] = c.sizes[i];
    const Dataset ds = CollapseData(n, k, c.seed + static_cast<uint64_t>(i));
    const Architecture arch = CollapseArch(n, k);
    const Network net = BnNetwork(ds, beta, arch, nullptr, c.seed);
    const ActivationTrace tr = Forward(net.params, arch, ds.x);
    std::vector<Matrix> cols;
    for (const BranchTrace& b : tr.branches) cols.push_back(b.act.back());
    reports[i] = NeuralCollapseCheck(HStack(cols), ClassIndex(ds.labels));
  });
  Plot& plot = out.plot();
  plot = {"Class means of last-layer activations", "K", "distance to simplex ETF",
          false, false, {}};
  PlotSeries s{"etf distance", {}, {}, true};
  for (int i = 0; i < count; ++i) {
    const auto [n, k] = c.sizes[i];
    const CollapseReport& r = reports[i];
    const std::string tag = "n" + std::to_string(n) + "_K" + std::to_string(k);
    out.Row(n, "etf_distance", r.etf_distance);
    out.Row(n, "max_entry_error", r.max_entry_error);
    out.Row(n, "alpha_fit", r.alpha_fit);
    out.Row(n, "alpha_target", r.alpha_target);
    out.Assert(Check(tag + "_entrywise", r.max_entry_error, "<=", 1e-10));
    out.Assert(Check(tag + "_etf_distance", r.etf_distance, "<=", 1e-10));
    out.Assert(Check(tag + "_alpha", r.alpha_fit, "==", r.alpha_target, 1e-10));
    s.x.push_back(k);
    s.y.push_back(r.etf_distance);
  }
  plot.series.push_back(s);
}

// ---------------------------------------------------------------- verify

struct Finding {
  std::string name;
  double value = 0.0;
};

Architecture Make(int depth, int branches, int d, std::vector<int> widths,
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

Dataset Gaussian(Rng& rng, int n, int d, int k) {
  Dataset ds;
  ds.x = rng.NormalMatrix(n, d);
  ds.labels = rng.NormalMatrix(n, k);
  return ds;
}

// Random one-hot labels with every class present, on whitened features.
Dataset WhitenedClasses(Rng& rng, int n, int k, int extra) {
  std::vector<int> cls(n);
  for (int i = 0; i < n; ++i) cls[i] = i < k ? i : static_cast<int>(rng.Below(k));
  Dataset ds;
  ds.x = rng.NormalMatrix(n, n + extra);
  ds.labels = OneHot(cls, k);
  return Whiten(ds);
}

int Between(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.Below(hi - lo + 1)); }

double MaxLabelNorm(const Dataset& ds) {
  double m = 0.0;
  for (int j = 0; j < ds.k(); ++j) m = std::max(m, Norm(ds.labels.col(j)));
  return m;
}

double StrongDualityInstance(int setting, Rng& rng) {
  switch (setting) {
    case 0:
    case 1: {  // two-layer linear, scalar then vector
      const int n = Between(rng, 3, 8), d = Between(rng, 2, 8), k = setting == 0 ? 1 : 3;
      const Dataset ds = Gaussian(rng, n, d, k);
      const double beta = rng.Uniform(0.05, 1.2) * SpectralNorm(MatTMul(ds.x, ds.labels));
      const Network net = TwoLayerLinear(ds, beta);
      return *DualityGap(net.params, net.arch, ds, beta).relative_gap;
    }
    case 2:
    case 3: {  // deep linear L = 3, 4
      const int depth = setting + 1, n = Between(rng, 3, 7), d = Between(rng, 2, 6), k = 2;
      const Dataset ds = Gaussian(rng, n, d, k);
      std::vector<int> widths(depth - 1, d);
      widths.back() = 1;
      const Architecture a = Make(depth, k, d, widths, Activation::kLinear, k);
      const double beta = rng.Uniform(0.05, 1.2) * SpectralNorm(MatTMul(ds.x, ds.labels));
      const Network net = DeepLinear(ds, beta, a, {TPolicy::kOptimal});
      return *DualityGap(net.params, a, ds, beta).relative_gap;
    }
    case 4:
    case 5:
    case 6: {  // whitened relu L = 2, 3, 4
      const int depth = setting - 2, k = Between(rng, 2, 3);
      const Dataset ds = WhitenedClasses(rng, Between(rng, k, 3 * k), k, Between(rng, 0, 3));
      const Architecture a = Make(depth, k, ds.d(), std::vector<int>(depth - 1, k),
                                  Activation::kRelu, k);
      const double beta = rng.Uniform(0.2, 1.2) * MaxLabelNorm(ds);
      const Network net = DeepReluWhitened(ds, beta, a);
      return *DualityGap(net.params, a, ds, beta).relative_gap;
    }
    default: {  // batch-norm head
      const int k = Between(rng, 2, 3), n = k * Between(rng, 1, 3);
      Dataset ds = Gaussian(rng, n, n + 1, k);
      ds.labels = BalancedOneHot(n, k);
      ds.class_sizes.assign(k, n / k);
      Architecture a = Make(3, k, n + 1, {2 * n, 1}, Activation::kRelu, k);
      a.batch_norm = true;
      const double beta = rng.Uniform(0.05, 1.2) * std::sqrt(static_cast<double>(n / k));
      // Redraw the random trunk until its features span the labels, which the
      // construction assumes.
      for (int attempt = 0;; ++attempt) {
        try {
          const Network net = BnNetwork(ds, beta, a, nullptr, rng.NextU64());
          return *DualityGap(net.params, a, ds, beta).relative_gap;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kOverparamAssumptionViolated || attempt == 20) throw;
        }
      }
    }
  }
}

const char* kStrongSettings[] = {"two_layer_linear_scalar", "two_layer_linear_vector",
                                 "deep_linear_L3",          "deep_linear_L4",
                                 "whitened_relu_L2",        "whitened_relu_L3",
                                 "whitened_relu_L4",        "batchnorm_head"};

// |formula - primal| over a β grid straddling every ‖y_j‖.
double FormulaInstance(Rng& rng) {
  const int k = Between(rng, 2, 4), depth = Between(rng, 2, 4);
  const Dataset ds = WhitenedClasses(rng, Between(rng, k, 3 * k), k, Between(rng, 0, 2));
  const Architecture a = Make(depth, k, ds.d(), std::vector<int>(depth - 1, k),
                              Activation::kRelu, k);
  std::vector<double> grid = {0.0};
  for (int j = 0; j < k; ++j) {
    const double y = Norm(ds.labels.col(j));
    for (double f : {0.5, 0.95, 1.0, 1.05, 1.5}) grid.push_back(f * y);
  }
  double worst = 0.0;
  for (double beta : grid) {
    const Network net = DeepReluWhitened(ds, beta, a, {TPolicy::kUnit});
    const double primal = CanonicalObjective(net.params, a, ds).Value(beta, false);
    worst = std::max(worst, std::abs(primal - OptimumValueFormula(ds, beta)));
  }
  return worst;
}

// Smallest |input| to any ReLU over the sample.
double KinkMargin(const NetworkParams& p, const Architecture& a, const Matrix& x) {
  double margin = std::numeric_limits<double>::infinity();
  for (const BranchTrace& b : Forward(p, a, x).branches) {
    for (const Matrix& m : b.post_bn) {
      for (int i = 0; i < m.size(); ++i) margin = std::min(margin, std::abs(m.data()[i]));
    }
  }
  return margin;
}

// Finite differences against backprop on a random configuration.
Finding GradientInstance(int index, Rng& rng) {
  static const char* kKinds[] = {"linear", "relu", "relu_bias", "bn_last", "bn_all"};
  const int kind = index % 5;
  const int depth = Between(rng, 2, 4), n = Between(rng, 4, 8), d = Between(rng, 2, 4);
  const int k = Between(rng, 1, 2);
  Dataset ds = Gaussian(rng, n, d, k);
  std::vector<int> widths(depth - 1);
  for (int& w : widths) w = Between(rng, 2, 5);
  Architecture a = Make(depth, Between(rng, 1, 2), d, widths,
                        kind == 0 ? Activation::kLinear : Activation::kRelu, k);
  a.last_hidden_bias = kind == 2;
  if (kind >= 3) {
    a.depth = std::max(depth, 3);
    a.widths.resize(a.depth - 1, 3);
    a.batch_norm = kind == 3;
    a.batch_norm_all = kind == 4;
  }
  const double beta = rng.Uniform(0.0, 0.5);
  // Redraw until every ReLU input is clear of its kink by far more than the
  // finite-difference step can move it.
  NetworkParams p = InitParams(a, 1.0, rng.NextU64());
  for (int attempt = 0; a.activation == Activation::kRelu && attempt < 100; ++attempt) {
    if (KinkMargin(p, a, ds.x) > 1e-3) break;
    p = InitParams(a, 1.0, rng.NextU64());
  }
  return {std::string(kKinds[kind]), FdCheck(p, a, ds, beta, 1e-5, rng.NextU64())};
}

// Gradient norm of a closed-form optimum mapped back to ℓ₂² form. Deep
// instances have one active branch: with several, the shared chain norm is
// optimal for the norm-constrained problem but not ℓ₂²-stationary.
double StationaryInstance(int index, Rng& rng) {
  Network net;
  Dataset ds;
  double beta = 0.0;
  switch (index % 4) {
    case 0: {
      ds = Gaussian(rng, Between(rng, 3, 6), Between(rng, 2, 5), 2);
      beta = rng.Uniform(0.1, 0.9) * SpectralNorm(MatTMul(ds.x, ds.labels));
      net = TwoLayerLinear(ds, beta);
      break;
    }
    case 1: {
      const int k = Between(rng, 2, 3);
      ds = WhitenedClasses(rng, Between(rng, k, 3 * k), k, 1);
      beta = rng.Uniform(0.1, 0.9) * MaxLabelNorm(ds);
      net = DeepReluWhitened(ds, beta, Make(2, k, ds.d(), {k}, Activation::kRelu, k));
      break;
    }
    case 2: {
      const int d = Between(rng, 2, 4), depth = Between(rng, 3, 4);
      ds = Gaussian(rng, Between(rng, 3, 6), d, 1);
      beta = rng.Uniform(0.1, 0.9) * SpectralNorm(MatTMul(ds.x, ds.labels));
      std::vector<int> widths(depth - 1, d);
      widths.back() = 1;
      net = DeepLinear(ds, beta, Make(depth, 1, d, widths, Activation::kLinear, 1),
                       {TPolicy::kOptimal});
      break;
    }
    default: {
      const int k = 2, n = 2 * Between(rng, 2, 3);
      ds = Gaussian(rng, n, n + 1, k);
      ds.labels = BalancedOneHot(n, k);
      ds.class_sizes.assign(k, n / k);
      Architecture a = Make(3, k, n + 1, {4 * n, 1}, Activation::kRelu, k);
      a.batch_norm = true;
      beta = rng.Uniform(0.1, 0.9) * std::sqrt(static_cast<double>(n / k));
      for (int attempt = 0;; ++attempt) {
        try {
          net = BnNetwork(ds, beta, a, nullptr, rng.NextU64());
          break;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kOverparamAssumptionViolated || attempt == 20) throw;
        }
      }
      break;
    }
  }
  const NetworkParams wd = ToWeightDecayForm(net.params, net.arch).first;
  return GradientNorm(Gradients(wd, net.arch, ds, beta), net.arch);
}

// Signed relative gap of an arbitrary parameter point; weak duality says >= 0.
Finding WeakDualityInstance(int index, Rng& rng) {
  static const char* kKinds[] = {"linear",    "deep_linear", "whitened_relu", "rank_one",
                                 "rank_one_bias", "batchnorm", "brute_force"};
  const int kind = index % 7;
  Dataset ds;
  Architecture a;
  const int k = kind == 3 || kind == 4 || kind == 6 ? 1 : Between(rng, 1, 3);
  switch (kind) {
    case 0:
      ds = Gaussian(rng, Between(rng, 3, 8), Between(rng, 2, 6), k);
      a = Make(2, Between(rng, 1, 3), ds.d(), {1}, Activation::kLinear, k);
      break;
    case 1:
      ds = Gaussian(rng, Between(rng, 3, 8), Between(rng, 2, 6), k);
      a = Make(Between(rng, 3, 4), Between(rng, 1, 3), ds.d(), {}, Activation::kLinear, k);
      a.widths.assign(a.depth - 1, 3);
      break;
    case 2: {
      const int kk = std::max(k, 2);
      ds = WhitenedClasses(rng, Between(rng, kk, 3 * kk), kk, 1);
      a = Make(Between(rng, 2, 4), kk, ds.d(), {}, Activation::kRelu, kk);
      a.widths.assign(a.depth - 1, kk);
      break;
    }
    case 3:
    case 4: {
      const int n = Between(rng, 3, 8), d = Between(rng, 1, 3);
      Vector c(n), a0 = rng.NormalVector(d);
      for (double& v : c) v = kind == 3 ? rng.Uniform(0.5, 2.0) : rng.Uniform(-2.0, 2.0);
      ds.x = Outer(c, a0);
      ds.labels = Matrix::ColumnVector(Scaled(c, rng.Normal()));
      ds.rank_one = RankOneFactor{c, a0};
      a = Make(kind == 3 ? Between(rng, 2, 4) : 2, Between(rng, 1, 4), d, {}, Activation::kRelu, 1);
      a.widths.assign(a.depth - 1, 1);
      a.last_hidden_bias = kind == 4;
      ds.labels = Matrix(n, 1);
      for (int i = 0; i < n; ++i) ds.labels(i, 0) = rng.Normal();
      break;
    }
    case 5: {
      const int kk = std::max(k, 2), n = kk * Between(rng, 1, 3);
      ds = Gaussian(rng, n, n + 1, kk);
      ds.labels = BalancedOneHot(n, kk);
      ds.class_sizes.assign(kk, n / kk);
      a = Make(3, kk, n + 1, {4, 1}, Activation::kRelu, kk);
      a.batch_norm = true;
      break;
    }
    default:
      ds = Gaussian(rng, Between(rng, 3, 8), Between(rng, 1, 3), 1);
      a = Make(2, Between(rng, 1, 4), ds.d(), {1}, Activation::kRelu, 1);
      a.last_hidden_bias = rng.Below(2) == 1;
      break;
  }
  const double beta = rng.Uniform(0.05, 1.0);
  const NetworkParams p = InitParams(a, rng.Uniform(0.2, 2.0), rng.NextU64());
  const DualCertificate cert = DualityGap(p, a, ds, beta);
  return {kKinds[kind], *cert.gap / (1.0 + std::abs(*cert.primal_value))};
}

// Analytic ReLU constraint value against 2ⁿ-pattern enumeration.
Finding BruteForceInstance(int index, Rng& rng) {
  static const char* kKinds[] = {"rank_one", "rank_one_bias", "whitened"};
  const int kind = index % 3;
  const int n = Between(rng, 2, 10);
  Dataset ds;
  Architecture a = Make(2, 1, 1, {1}, Activation::kRelu, 1);
  Vector lambda = rng.NormalVector(n);
  if (kind == 2) {
    ds = WhitenedClasses(rng, n, 1, Between(rng, 0, 2));
    ds.labels = Matrix(n, 1);
  } else {
    const int d = Between(rng, 1, 3);
    Vector c(n), a0 = rng.NormalVector(d);
    for (double& v : c) v = rng.Uniform(-2.0, 2.0);
    ds.x = Outer(c, a0);
    ds.labels = Matrix(n, 1);
    ds.rank_one = RankOneFactor{c, a0};
    a.last_hidden_bias = kind == 1;
    if (kind == 1) {
      double mean = 0.0;
      for (double v : lambda) mean += v / n;
      for (double& v : lambda) v -= mean;
    }
  }
  a.inputs = ds.d();
  const double analytic = DualFeasibility(Matrix::ColumnVector(lambda), ds, 1.0, a, 1.0);
  const double brute = BruteForceReluExtreme(lambda, ds.x, a.last_hidden_bias);
  return {kKinds[kind], std::abs(analytic - brute) / (1.0 + std::abs(brute))};
}

template <typename F>
std::vector<double> Sweep(int count, int threads, uint64_t seed, uint64_t stream, F f) {
  std::vector<double> out(count);
  ParallelFor(count, threads, [&](int i) {
    Rng rng = Rng(seed, stream).Split(static_cast<uint64_t>(i));
    out[i] = f(i, rng);
  });
  return out;
}

double Max(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  return m;
}

void Verify(const ExperimentConfig& c, Sink& out) {
  const int threads = EffectiveThreads(c.threads);
  const int n = c.instances;
  Plot& plot = out.plot();
  plot = {"Verification suite", "check", "worst value", false, true, {}};
  PlotSeries worst{"worst case", {}, {}, true};
  int column = 0;
  const auto record = [&](const std::string& name, const std::vector<double>& values,
                          const std::string& op, double bound) {
    for (size_t i = 0; i < values.size(); ++i) out.Row(i, name, values[i]);
    const double w = op == ">=" ? -Max([&] {
      std::vector<double> neg;
      for (double v : values) neg.push_back(-v);
      return neg;
    }())
                                : Max(values);
    out.Metric(name, w);
    out.Assert(Check(name, w, op, bound));
    worst.x.push_back(column++);
    worst.y.push_back(std::abs(w));
  };

  // Strong duality at closed-form optima.
  for (int s = 0; s < 8; ++s) {
    record(std::string("strong_duality.") + kStrongSettings[s],
           Sweep(n, threads, c.seed, 100 + s,
                 [&](int, Rng& rng) { return StrongDualityInstance(s, rng); }),
           "<=", 1e-8);
  }
  // Whitened optimum-value formula.
  record("whitened_formula.random_grid",
         Sweep(std::max(1, n / 5), threads, c.seed, 200, [](int, Rng& rng) {
           return FormulaInstance(rng);
         }),
         "<=", 1e-10);
  {
    Dataset ds;
    ds.x = Matrix::Identity(2);
    ds.labels = Matrix::Identity(2);
    ds.whitened = true;
    const Architecture a = Make(2, 2, 2, {2}, Activation::kRelu, 2);
    const Network net = DeepReluWhitened(ds, 0.5, a);
    const double v = CanonicalObjective(net.params, a, ds).Value(0.5, false);
    out.Row(0, "whitened_formula.identity_value", v);
    out.Assert(Check("whitened_formula.identity_value", v, "==", 0.75, 1e-12));
    out.Assert(Check("whitened_formula.identity_formula", OptimumValueFormula(ds, 0.5), "==",
                     0.75, 1e-12));
  }
  // Gradients.
  std::vector<Finding> fd(20);
  ParallelFor(20, threads, [&](int i) {
    Rng rng = Rng(c.seed, 300).Split(static_cast<uint64_t>(i));
    fd[i] = GradientInstance(i, rng);
  });
  std::vector<double> plain, bn;
  for (int i = 0; i < 20; ++i) {
    out.Row(i, "gradient.fd_" + fd[i].name, fd[i].value);
    (fd[i].name.rfind("bn", 0) == 0 ? bn : plain).push_back(fd[i].value);
  }
  record("gradient.fd_linear_relu", plain, "<=", 1e-5);
  record("gradient.fd_batchnorm", bn, "<=", 1e-4);
  record("gradient.closed_form_stationarity",
         Sweep(12, threads, c.seed, 400, [](int i, Rng& rng) { return StationaryInstance(i, rng); }),
         "<=", 1e-6);
  // Weak duality on arbitrary parameters and the brute-force oracle.
  std::vector<Finding> weak(200);
  ParallelFor(200, threads, [&](int i) {
    Rng rng = Rng(c.seed, 500).Split(static_cast<uint64_t>(i));
    weak[i] = WeakDualityInstance(i, rng);
  });
  std::vector<double> weak_values;
  for (const Finding& f : weak) weak_values.push_back(f.value);
  record("weak_duality.relative_gap", weak_values, ">=", -1e-9);
  std::vector<Finding> brute(3 * std::max(1, n / 5));
  ParallelFor(static_cast<int>(brute.size()), threads, [&](int i) {
    Rng rng = Rng(c.seed, 600).Split(static_cast<uint64_t>(i));
    brute[i] = BruteForceInstance(i, rng);
  });
  std::vector<double> brute_values;
  for (const Finding& f : brute) brute_values.push_back(f.value);
  record("brute_force.relative_mismatch", brute_values, "<=", 1e-9);
  plot.series.push_back(worst);
}

// ---------------------------------------------------------------- single runs

void Construct(const ExperimentConfig& c, Sink& out) {
  const Dataset ds = BuildDataset(c.data);
  const Architecture arch = FitArch(c.arch, ds);
  const double beta = FirstBeta(c);
  const Network net = ConstructClosedForm(ds, arch, beta, c.seed);
  const CanonicalParts parts = CanonicalObjective(net.params, net.arch, ds);
  const NetworkParams wd = ToWeightDecayForm(net.params, net.arch).first;
  out.Metric("loss", parts.loss);
  out.Metric("canonical_objective", parts.Value(beta));
  out.Metric("weight_decay_objective", PrimalObjective(wd, net.arch, ds, beta));
  out.Metric("branches", net.arch.branches);
  const DualCertificate cert = DualityGap(net.params, net.arch, ds, beta);
  out.Metric("dual_value", cert.dual_value);
  out.Metric("relative_gap", *cert.relative_gap);
  out.Assert(Check("relative_gap", *cert.relative_gap, "<=", 1e-8));
  Plot& plot = out.plot();
  plot = {"Head mass per branch", "branch", "mass", false, false, {}};
  PlotSeries s{"head mass", {}, {}, true};
  for (int j = 0; j < net.arch.branches; ++j) {
    const double m = BranchHeadMass(net.params, net.arch, j);
    out.Row(j, "head_mass", m);
    s.x.push_back(j);
    s.y.push_back(m);
  }
  plot.series.push_back(s);
}

void Train(const ExperimentConfig& c, Sink& out) {
  const Dataset ds = BuildDataset(c.data);
  const Architecture arch = FitArch(c.arch, ds);
  TrainConfig t = c.train;
  t.beta = FirstBeta(c);
  const Trajectory tr = RunTraining(InitParams(arch, t.init_scale, t.seed), arch, ds, t);
  Plot& plot = out.plot();
  plot = {"Training objective", "step", "objective", false, true, {}};
  PlotSeries s{"objective", {}, {}};
  for (const TrajectoryPoint& p : tr.points) {
    out.Row(p.step, "objective", p.objective);
    for (size_t l = 0; l < p.structure.ranks.size(); ++l) {
      out.Row(p.step, "rank_layer" + std::to_string(l + 1), p.structure.ranks[l]);
    }
    s.x.push_back(p.step);
    s.y.push_back(p.objective);
  }
  plot.series.push_back(s);
  out.Metric("initial_objective", tr.points.front().objective);
  out.Metric("final_objective", tr.final_objective);
  out.Assert(Check("objective_decreased", tr.final_objective, "<=",
                   tr.points.front().objective));
}

}  // namespace

ExperimentResult RunExperiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.experiment = config.experiment;
  result.config_echo = ConfigEcho(config);
  Sink out(result);
  const std::string& e = config.experiment;
  if (e == "fig1_spline") {
    Fig1(config, out);
  } else if (e == "fig2_rank_vs_beta") {
    Fig2(config, out);
  } else if (e == "fig3_norms") {
    Fig3(config, out);
  } else if (e == "fig3b_relu_rank") {
    Fig3b(config, out);
  } else if (e == "fig4_whitened") {
    Fig4(config, out);
  } else if (e == "fig6_projections") {
    Fig6(config, out);
  } else if (e == "neural_collapse") {
    Collapse(config, out);
  } else if (e == "verify_suite") {
    Verify(config, out);
  } else if (e == "construct") {
    Construct(config, out);
  } else if (e == "train") {
    Train(config, out);
  } else {
    Fail(ErrorCode::kConfigError, "/experiment: unknown experiment '" + e + "'");
  }
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace dn
