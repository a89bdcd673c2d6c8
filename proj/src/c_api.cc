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

#include "duality_nets/c_api.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "duality_nets/closedform.h"
#include "duality_nets/data.h"
#include "duality_nets/duality.h"
#include "duality_nets/error.h"
#include "duality_nets/experiments.h"
#include "duality_nets/forward.h"
#include "duality_nets/types.h"

struct dn_dataset {
  dn::Dataset ds;
};

struct dn_network {
  dn::Network net;
};

namespace {

thread_local std::string last_error;

template <typename F>
dn_status Guard(F&& body) {
  last_error.clear();
  try {
    body();
    return DN_OK;
  } catch (const dn::Error& e) {
    last_error = e.what();
    return static_cast<dn_status>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DN_INTERNAL;
  } catch (const std::exception& e) {
    last_error = std::string("internal: ") + e.what();
    return DN_INTERNAL;
  } catch (...) {
    last_error = "internal: unknown exception";
    return DN_INTERNAL;
  }
}

void NotNull(const void* p, const char* what) {
  dn::Require(p != nullptr, dn::ErrorCode::kInvalidInput, std::string(what) + " is null");
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* dn_version(void) { return "0.1.0"; }

const char* dn_status_name(int status) {
  if (status < 0 || status > DN_INTERNAL) return "UnknownStatus";
  // Names are static string literals behind the string_view.
  return dn::ErrorCodeName(static_cast<dn::ErrorCode>(status)).data();
}

const char* dn_last_error(void) { return last_error.c_str(); }

dn_status dn_dataset_create(int n, int d, int k, const double* x, const double* y,
                            int whiten, dn_dataset** out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = nullptr;
    NotNull(x, "x");
    NotNull(y, "y");
    dn::Require(n > 0 && d > 0 && k > 0, dn::ErrorCode::kShapeError,
                "dataset dimensions must be positive");
    auto h = std::make_unique<dn_dataset>();
    h->ds.x = dn::Matrix(n, d);
    h->ds.labels = dn::Matrix(n, k);
    std::copy(x, x + static_cast<size_t>(n) * d, h->ds.x.data());
    std::copy(y, y + static_cast<size_t>(n) * k, h->ds.labels.data());
    if (whiten) h->ds = dn::Whiten(h->ds);
    dn::ValidateDataset(h->ds);
    *out = h.release();
  });
}

dn_status dn_dataset_load_csv(const char* path, int classes, dn_dataset** out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = nullptr;
    NotNull(path, "path");
    auto h = std::make_unique<dn_dataset>();
    h->ds = dn::LoadCsvDataset(path, classes);
    *out = h.release();
  });
}

dn_status dn_dataset_shape(const dn_dataset* ds, int* n, int* d, int* k) {
  return Guard([&] {
    NotNull(ds, "dataset");
    if (n) *n = ds->ds.n();
    if (d) *d = ds->ds.d();
    if (k) *k = ds->ds.k();
  });
}

void dn_dataset_free(dn_dataset* ds) { delete ds; }

dn_status dn_construct(const dn_dataset* ds, const dn_arch* arch, double beta,
                       uint64_t seed, dn_network** out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = nullptr;
    NotNull(ds, "dataset");
    NotNull(arch, "arch");
    dn::Require(arch->depth >= 2, dn::ErrorCode::kShapeError, "depth must be at least 2");
    NotNull(arch->widths, "arch.widths");
    dn::Architecture a;
    a.depth = arch->depth;
    a.branches = arch->branches;
    a.inputs = ds->ds.d();
    a.outputs = ds->ds.k();
    a.widths.assign(arch->widths, arch->widths + arch->depth - 1);
    dn::Require(arch->activation == DN_LINEAR || arch->activation == DN_RELU,
                dn::ErrorCode::kInvalidInput, "unknown activation");
    a.activation = arch->activation == DN_RELU ? dn::Activation::kRelu
                                               : dn::Activation::kLinear;
    a.last_hidden_bias = arch->last_hidden_bias != 0;
    a.batch_norm = arch->batch_norm != 0;
    a.batch_norm_all = arch->batch_norm_all != 0;
    dn::ValidateArchitecture(a);
    auto h = std::make_unique<dn_network>();
    h->net = dn::ConstructClosedForm(ds->ds, a, beta, seed);
    *out = h.release();
  });
}

dn_status dn_network_objective(const dn_network* net, const dn_dataset* ds, double beta,
                               double* out) {
  return Guard([&] {
    NotNull(net, "network");
    NotNull(ds, "dataset");
    NotNull(out, "out");
    *out = dn::PrimalObjective(net->net.params, net->net.arch, ds->ds, beta);
  });
}

dn_status dn_network_relative_gap(const dn_network* net, const dn_dataset* ds,
                                  double beta, double* out) {
  return Guard([&] {
    NotNull(net, "network");
    NotNull(ds, "dataset");
    NotNull(out, "out");
    const dn::DualCertificate c = dn::DualityGap(net->net.params, net->net.arch, ds->ds, beta);
    dn::Require(c.relative_gap.has_value(), dn::ErrorCode::kNoDualConstruction,
                "no dual certificate for this setting");
    *out = *c.relative_gap;
  });
}

dn_status dn_network_predict(const dn_network* net, const double* x, int rows,
                             double* out, size_t out_len) {
  return Guard([&] {
    NotNull(net, "network");
    NotNull(x, "x");
    NotNull(out, "out");
    const dn::Architecture& a = net->net.arch;
    dn::Require(rows > 0, dn::ErrorCode::kShapeError, "rows must be positive");
    dn::Require(out_len >= static_cast<size_t>(rows) * a.outputs, dn::ErrorCode::kShapeError,
                "output buffer too small");
    dn::Matrix m(rows, a.inputs);
    std::copy(x, x + static_cast<size_t>(rows) * a.inputs, m.data());
    const dn::Matrix f = dn::ForwardOutput(net->net.params, a, m);
    std::copy(f.data(), f.data() + static_cast<size_t>(rows) * a.outputs, out);
  });
}

dn_status dn_network_shape(const dn_network* net, int* inputs, int* outputs,
                           int* branches) {
  return Guard([&] {
    NotNull(net, "network");
    if (inputs) *inputs = net->net.arch.inputs;
    if (outputs) *outputs = net->net.arch.outputs;
    if (branches) *branches = net->net.arch.branches;
  });
}

void dn_network_free(dn_network* net) { delete net; }

size_t dn_experiment_count(void) { return dn::ExperimentNames().size(); }

const char* dn_experiment_name(size_t index) {
  const auto& names = dn::ExperimentNames();
  return index < names.size() ? names[index].c_str() : nullptr;
}

dn_status dn_run_experiment(const char* experiment, const char* config_json,
                            const char* out_dir, const uint64_t* seed, int threads,
                            int* all_pass, char** report_json) {
  return Guard([&] {
    NotNull(experiment, "experiment");
    if (report_json) *report_json = nullptr;
    dn::ExperimentConfig c =
        dn::ParseExperimentConfig(config_json ? config_json : "{}", experiment);
    if (seed) {
      c.seed = *seed;
      c.data.seed = *seed;
      c.train.seed = *seed;
    }
    if (threads > 0) c.threads = threads;
    if (out_dir) c.output_dir = out_dir;
    const dn::ExperimentResult r = dn::RunExperiment(c);
    dn::WriteArtifacts(r, c.output_dir);
    if (all_pass) *all_pass = r.pass() ? 1 : 0;
    if (report_json) *report_json = CopyString(dn::EmitReport(r));
  });
}

void dn_string_free(char* s) { std::free(s); }

}  // extern "C"
