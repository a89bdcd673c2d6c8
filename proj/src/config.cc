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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include "duality_nets/data.h"
#include "duality_nets/error.h"
#include "duality_nets/experiments.h"
#include "duality_nets/rng.h"
#include "json.hpp"

namespace dn {

namespace {

using Json = nlohmann::json;

[[noreturn]] void Bad(const std::string& ptr, const std::string& what) {
  Fail(ErrorCode::kConfigError, (ptr.empty() ? "/" : ptr) + ": " + what);
}

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown fields.
class Section {
 public:
  Section(const Json& j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {
    if (!j_.is_object()) Bad(ptr_, "expected an object");
  }

  bool Has(const std::string& key) const { return j_.contains(key); }

  const Json* Take(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string Ptr(const std::string& key) const { return ptr_ + "/" + key; }

  void Int(const std::string& key, int& out, int lo,
           int hi = std::numeric_limits<int>::max()) {
    const Json* v = Take(key);
    if (!v) return;
    out = AsInt(*v, Ptr(key), lo, hi);
  }

  void U64(const std::string& key, uint64_t& out) {
    const Json* v = Take(key);
    if (!v) return;
    if (!v->is_number_integer() || (v->is_number_integer() && v->get<int64_t>() < 0 &&
                                    !v->is_number_unsigned())) {
      Bad(Ptr(key), "expected a non-negative integer");
    }
    out = v->get<uint64_t>();
  }

  void Real(const std::string& key, double& out, double lo,
            double hi = std::numeric_limits<double>::infinity()) {
    const Json* v = Take(key);
    if (!v) return;
    out = AsReal(*v, Ptr(key), lo, hi);
  }

  void Bool(const std::string& key, bool& out) {
    const Json* v = Take(key);
    if (!v) return;
    if (!v->is_boolean()) Bad(Ptr(key), "expected true or false");
    out = v->get<bool>();
  }

  void String(const std::string& key, std::string& out) {
    const Json* v = Take(key);
    if (!v) return;
    if (!v->is_string()) Bad(Ptr(key), "expected a string");
    out = v->get<std::string>();
  }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) Bad(Ptr(it.key()), "unknown field");
    }
  }

  static int AsInt(const Json& v, const std::string& ptr, int lo, int hi) {
    if (!v.is_number_integer()) Bad(ptr, "expected an integer");
    const int64_t x = v.get<int64_t>();
    if (x < lo || x > hi) {
      Bad(ptr, "value " + std::to_string(x) + " outside [" + std::to_string(lo) +
                   ", " + std::to_string(hi) + "]");
    }
    return static_cast<int>(x);
  }

  static double AsReal(const Json& v, const std::string& ptr, double lo,
                       double hi) {
    if (!v.is_number()) Bad(ptr, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < lo || x > hi) {
      Bad(ptr, "value out of range");
    }
    return x;
  }

 private:
  const Json& j_;
  std::string ptr_;
  std::set<std::string> seen_;
};

template <typename T, typename F>
std::vector<T> List(const Json& v, const std::string& ptr, F element) {
  if (!v.is_array()) Bad(ptr, "expected an array");
  std::vector<T> out;
  for (size_t i = 0; i < v.size(); ++i) {
    out.push_back(element(v[i], ptr + "/" + std::to_string(i)));
  }
  return out;
}

void ReadDataset(Section s, DatasetSpec& d) {
  s.String("source", d.source);
  static const std::set<std::string> kSources = {"gaussian", "rank_one", "teacher",
                                                 "spline", "csv"};
  if (!kSources.count(d.source)) {
    Bad(s.Ptr("source"), "unknown source '" + d.source + "'");
  }
  s.Int("n", d.n, 1, 100000);
  s.Int("d", d.d, 1, 100000);
  s.Int("k", d.k, 1, 10000);
  s.U64("seed", d.seed);
  s.Bool("whiten", d.whiten);
  s.Bool("onehot", d.onehot);
  s.Bool("positive_c", d.positive_c);
  s.String("csv", d.csv_path);
  if (d.source == "csv") {
    if (d.csv_path.empty()) Bad(s.Ptr("csv"), "csv source needs a path");
    if (!std::filesystem::exists(d.csv_path)) {
      Bad(s.Ptr("csv"), "file '" + d.csv_path + "' does not exist");
    }
  }
  if (d.onehot && d.source != "csv" && d.n % d.k != 0) {
    Bad(s.Ptr("n"), "balanced one-hot labels need K to divide n");
  }
  s.Finish();
}

void ReadArch(Section s, Architecture& a) {
  s.Int("depth", a.depth, 2, 64);
  s.Int("branches", a.branches, 1, 100000);
  if (const Json* w = s.Take("widths")) {
    a.widths = List<int>(*w, s.Ptr("widths"), [](const Json& e, const std::string& p) {
      return Section::AsInt(e, p, 1, 100000);
    });
  }
  std::string act = ActivationName(a.activation);
  s.String("activation", act);
  if (act != "linear" && act != "relu") {
    Bad(s.Ptr("activation"), "expected 'linear' or 'relu'");
  }
  a.activation = ParseActivation(act);
  s.Bool("bias", a.last_hidden_bias);
  s.Bool("batch_norm", a.batch_norm);
  s.Bool("batch_norm_all", a.batch_norm_all);
  if (static_cast<int>(a.widths.size()) != a.depth - 1) {
    Bad(s.Ptr("widths"), "needs depth - 1 = " + std::to_string(a.depth - 1) +
                             " entries");
  }
  s.Finish();
}

void ReadTrain(Section s, ExperimentConfig& c) {
  TrainConfig& t = c.train;
  s.Real("learning_rate", t.learning_rate, 0.0);
  s.Real("momentum", t.momentum, 0.0, 0.999999);
  s.Int("steps", t.steps, 0);
  s.Int("batch_size", t.batch_size, 0);
  s.Real("init_scale", t.init_scale, 0.0);
  s.Int("probe_every", t.probe_every, 0);
  s.U64("seed", t.seed);
  s.Int("runs", c.runs, 1, 1000);
  s.Real("finetune_beta", c.finetune_beta, 0.0);
  s.Int("finetune_steps", c.finetune_steps, 0);
  s.Finish();
  if (t.learning_rate <= 0.0) Bad(s.Ptr("learning_rate"), "must be positive");
}

Json ArchJson(const Architecture& a) {
  return {{"depth", a.depth},
          {"branches", a.branches},
          {"widths", a.widths},
          {"activation", ActivationName(a.activation)},
          {"bias", a.last_hidden_bias},
          {"batch_norm", a.batch_norm},
          {"batch_norm_all", a.batch_norm_all}};
}

}  // namespace

std::string ConfigEcho(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["experiment"] = c.experiment;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  j["dataset"] = {{"source", c.data.source}, {"n", c.data.n},
                  {"d", c.data.d},           {"k", c.data.k},
                  {"seed", c.data.seed},     {"whiten", c.data.whiten},
                  {"onehot", c.data.onehot}, {"positive_c", c.data.positive_c},
                  {"csv", c.data.csv_path}};
  j["arch"] = ArchJson(c.arch);
  j["train"] = {{"learning_rate", c.train.learning_rate},
                {"momentum", c.train.momentum},
                {"steps", c.train.steps},
                {"batch_size", c.train.batch_size},
                {"init_scale", c.train.init_scale},
                {"probe_every", c.train.probe_every},
                {"seed", c.train.seed},
                {"runs", c.runs},
                {"finetune_beta", c.finetune_beta},
                {"finetune_steps", c.finetune_steps}};
  j["betas"] = c.betas;
  j["depths"] = c.depths;
  nlohmann::ordered_json sizes = nlohmann::ordered_json::array();
  for (const auto& [n, k] : c.sizes) sizes.push_back({n, k});
  j["sizes"] = sizes;
  j["instances"] = c.instances;
  return j.dump();
}

namespace {

Architecture MakeArch(int depth, int branches, std::vector<int> widths,
                      Activation act) {
  Architecture a;
  a.depth = depth;
  a.branches = branches;
  a.widths = std::move(widths);
  a.activation = act;
  return a;
}

}  // namespace

const std::vector<std::string>& ExperimentNames() {
  static const std::vector<std::string> kNames = {
      "fig1_spline",     "fig2_rank_vs_beta", "fig3_norms",  "fig3b_relu_rank",
      "fig4_whitened",   "fig6_projections",  "neural_collapse",
      "verify_suite",    "construct",         "train"};
  return kNames;
}

ExperimentConfig DefaultConfig(const std::string& experiment) {
  const auto& names = ExperimentNames();
  Require(std::find(names.begin(), names.end(), experiment) != names.end(),
          ErrorCode::kConfigError, "/experiment: unknown experiment '" + experiment + "'");
  ExperimentConfig c;
  c.experiment = experiment;
  c.train.structure = false;
  c.train.seed = 1;
  if (experiment == "fig1_spline") {
    c.data = {"spline", 10, 1, 1, 1};
    c.depths = {2, 3, 4};
    c.arch = MakeArch(3, 1, {20, 20}, Activation::kRelu);
    c.arch.last_hidden_bias = true;
    c.train.learning_rate = 0.01;
    c.train.steps = 200000;
    c.train.momentum = 0.9;
    c.betas = {1e-2};
    c.finetune_beta = 1e-6;
    c.finetune_steps = 50000;
    c.runs = 4;
  } else if (experiment == "fig2_rank_vs_beta" || experiment == "fig6_projections") {
    c.data = {"teacher", 15, 20, 5, 1};
    c.data.whiten = true;
    c.arch = MakeArch(2, 1, {50}, Activation::kLinear);
    c.train.learning_rate = 0.02;
    c.train.steps = 50000;
  } else if (experiment == "fig3_norms") {
    c.data = {"gaussian", 20, 5, 5, 1};
    c.arch = MakeArch(4, 1, {50, 30, 40}, Activation::kLinear);
    c.train.learning_rate = 0.002;
    c.train.steps = 20000;
    c.train.probe_every = 500;
    c.betas = {3.5};
  } else if (experiment == "fig3b_relu_rank") {
    c.data = {"rank_one", 20, 10, 1, 1};
    c.arch = MakeArch(5, 1, {50, 40, 30, 20}, Activation::kRelu);
    c.train.learning_rate = 0.002;
    c.train.steps = 20000;
    c.train.probe_every = 500;
    c.betas = {0.1};
  } else if (experiment == "fig4_whitened") {
    c.data = {"gaussian", 60, 90, 10, 1};
    c.data.whiten = true;
    c.data.onehot = true;
    c.arch = MakeArch(3, 10, {20, 20}, Activation::kRelu);
    c.depths = {3, 4, 5};
    c.betas = {0.1};
    c.train.learning_rate = 0.02;
    c.train.init_scale = 2.0;  // keeps the L = 5 product away from zero
    c.train.batch_size = 20;
    c.train.steps = 3000;
    c.train.probe_every = 100;
    c.runs = 4;
  } else if (experiment == "neural_collapse") {
    c.sizes = {{4, 2}, {12, 3}, {60, 10}};
    c.betas = {0.1};
  } else if (experiment == "verify_suite") {
    c.instances = 50;
  } else if (experiment == "construct") {
    c.data = {"gaussian", 6, 4, 2, 1};
    c.arch = MakeArch(2, 2, {2}, Activation::kLinear);
    c.betas = {0.5};
  } else if (experiment == "train") {
    c.data = {"gaussian", 20, 5, 2, 1};
    c.arch = MakeArch(3, 1, {20, 20}, Activation::kRelu);
    c.train.steps = 5000;
    c.train.learning_rate = 0.005;
    c.train.probe_every = 500;
    c.train.structure = true;
    c.betas = {0.01};
  }
  return c;
}

ExperimentConfig ParseExperimentConfig(const std::string& json_text,
                                       const std::string& experiment) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    Bad("", std::string("invalid JSON: ") + e.what());
  }
  Section top(j, "");
  std::string name = experiment;
  if (const Json* e = top.Take("experiment")) {
    if (!e->is_string()) Bad("/experiment", "expected a string");
    const std::string inner = e->get<std::string>();
    if (!name.empty() && inner != name) {
      Bad("/experiment", "config names '" + inner + "' but '" + name +
                             "' was requested");
    }
    name = inner;
  }
  if (name.empty()) Bad("/experiment", "missing experiment name");
  const auto& names = ExperimentNames();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    Bad("/experiment", "unknown experiment '" + name + "'");
  }
  ExperimentConfig c = DefaultConfig(name);
  if (top.Has("seed")) {
    top.U64("seed", c.seed);
    c.data.seed = c.seed;
    c.train.seed = c.seed;
  }
  top.Int("threads", c.threads, 1, 1024);
  top.String("output_dir", c.output_dir);
  top.Int("instances", c.instances, 1, 100000);
  if (const Json* d = top.Take("dataset")) ReadDataset(Section(*d, "/dataset"), c.data);
  if (const Json* a = top.Take("arch")) ReadArch(Section(*a, "/arch"), c.arch);
  if (const Json* t = top.Take("train")) ReadTrain(Section(*t, "/train"), c);
  if (top.Has("beta") && top.Has("betas")) Bad("/betas", "give beta or betas, not both");
  if (const Json* b = top.Take("beta")) c.betas = {Section::AsReal(*b, "/beta", 0.0, 1e12)};
  if (const Json* b = top.Take("betas")) {
    c.betas = List<double>(*b, "/betas", [](const Json& e, const std::string& p) {
      return Section::AsReal(e, p, 0.0, 1e12);
    });
  }
  if (const Json* d = top.Take("depths")) {
    c.depths = List<int>(*d, "/depths", [](const Json& e, const std::string& p) {
      return Section::AsInt(e, p, 2, 64);
    });
  }
  if (const Json* s = top.Take("sizes")) {
    c.sizes = List<std::pair<int, int>>(*s, "/sizes", [](const Json& e, const std::string& p) {
      if (!e.is_array() || e.size() != 2) Bad(p, "expected [n, K]");
      const int n = Section::AsInt(e[0], p + "/0", 2, 100000);
      const int k = Section::AsInt(e[1], p + "/1", 2, 10000);
      if (n % k != 0) Bad(p, "K must divide n");
      return std::make_pair(n, k);
    });
  }
  top.Finish();
  return c;
}

Dataset BuildDataset(const DatasetSpec& spec) {
  Dataset ds;
  if (spec.source == "csv") {
    ds = LoadCsvDataset(spec.csv_path, 0);
  } else if (spec.source == "spline") {
    // Jittered grid on [1, 3]: one abscissa per cell of width 2/n.
    Rng rng(spec.seed, 3);
    ds.x = Matrix(spec.n, 1);
    ds.labels = Matrix(spec.n, 1);
    for (int i = 0; i < spec.n; ++i) {
      ds.x(i, 0) = 1.0 + (2 * i + 1 + 0.8 * (rng.Uniform() - 0.5)) / spec.n;
      ds.labels(i, 0) = rng.Normal();
    }
    Vector c = ds.x.col(0);
    ds.rank_one = RankOneFactor{c, {1.0}};
  } else {
    GeneratorSpec g;
    g.kind = ParseGeneratorKind(spec.source);
    g.n = spec.n;
    g.d = spec.d;
    g.k = spec.k;
    g.seed = spec.seed;
    g.positive_c = spec.positive_c;
    ds = Generate(g);
    if (spec.onehot) {
      ds.labels = BalancedOneHot(spec.n, spec.k);
      ds.class_sizes.assign(spec.k, spec.n / spec.k);
    }
  }
  if (spec.whiten) ds = Whiten(ds);
  ValidateDataset(ds);
  return ds;
}

}  // namespace dn
