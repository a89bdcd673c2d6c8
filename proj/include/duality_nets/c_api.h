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

// Stable C interface. Every call returns a dn_status; on failure the
// message is available from dn_last_error() on the same thread until the
// next call. Matrices are row-major.

#ifndef DUALITY_NETS_C_API_H_
#define DUALITY_NETS_C_API_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dn_status {
  DN_OK = 0,
  DN_INVALID_INPUT = 1,
  DN_SHAPE_ERROR = 2,
  DN_DEGENERATE_NEURON = 3,
  DN_DEGENERATE_BRANCH = 4,
  DN_CONSTANT_ACTIVATION = 5,
  DN_INFEASIBLE = 6,
  DN_DUPLICATE_ABSCISSA = 7,
  DN_PRECONDITION_VIOLATED = 8,
  DN_WIDTH_TOO_SMALL = 9,
  DN_OVERPARAM_ASSUMPTION_VIOLATED = 10,
  DN_TOO_LARGE_FOR_BRUTE_FORCE = 11,
  DN_NO_DUAL_CONSTRUCTION = 12,
  DN_ZERO_MATRIX = 13,
  DN_UNBALANCED_CLASSES = 14,
  DN_DIVERGED = 15,
  DN_CANNOT_WHITEN = 16,
  DN_INVALID_LABEL = 17,
  DN_PARSE_ERROR = 18,
  DN_CONFIG_ERROR = 19,
  DN_IO_ERROR = 20,
  DN_INTERNAL = 21
} dn_status;

typedef struct dn_dataset dn_dataset;
typedef struct dn_network dn_network;

typedef enum dn_activation { DN_LINEAR = 0, DN_RELU = 1 } dn_activation;

// Shape of the network to construct. Inputs and outputs come from the data.
typedef struct dn_arch {
  int depth;
  int branches;
  const int* widths;  // depth - 1 entries
  dn_activation activation;
  int last_hidden_bias;
  int batch_norm;
  int batch_norm_all;
} dn_arch;

const char* dn_version(void);
const char* dn_status_name(int status);
const char* dn_last_error(void);

// Copies x (n×d) and y (n×k). `whiten` maps X to orthonormal rows (needs n <= d).
dn_status dn_dataset_create(int n, int d, int k, const double* x, const double* y,
                            int whiten, dn_dataset** out);
// CSV with a header row and an integer `label` column, one-hot encoded over
// `classes` classes (0 infers the largest label + 1).
dn_status dn_dataset_load_csv(const char* path, int classes, dn_dataset** out);
dn_status dn_dataset_shape(const dn_dataset* ds, int* n, int* d, int* k);
void dn_dataset_free(dn_dataset* ds);

// Closed-form optimum for the data's setting (linear, whitened one-hot ReLU,
// rank-one ReLU or batch norm).
dn_status dn_construct(const dn_dataset* ds, const dn_arch* arch, double beta,
                       uint64_t seed, dn_network** out);
// Weight-decay objective ½‖f(X) − Y‖² + (β/2)Σ‖W‖².
dn_status dn_network_objective(const dn_network* net, const dn_dataset* ds, double beta,
                               double* out);
// |primal − dual| / (1 + |primal|) from the dual certificate.
dn_status dn_network_relative_gap(const dn_network* net, const dn_dataset* ds,
                                  double beta, double* out);
// Writes rows × outputs values into `out`.
dn_status dn_network_predict(const dn_network* net, const double* x, int rows,
                             double* out, size_t out_len);
dn_status dn_network_shape(const dn_network* net, int* inputs, int* outputs,
                           int* branches);
void dn_network_free(dn_network* net);

size_t dn_experiment_count(void);
const char* dn_experiment_name(size_t index);

// Runs `experiment` with `config_json` (may be NULL for defaults) and writes
// results.csv, report.json and plot.svg to `out_dir` (NULL keeps the
// configured directory). Non-NULL `seed` and positive `threads` override the
// config. `report_json`, when non-NULL, receives a copy of report.json to be
// released with dn_string_free.
dn_status dn_run_experiment(const char* experiment, const char* config_json,
                            const char* out_dir, const uint64_t* seed, int threads,
                            int* all_pass, char** report_json);
void dn_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif  // DUALITY_NETS_C_API_H_
