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

#ifndef DUALITY_NETS_DATA_H_
#define DUALITY_NETS_DATA_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "duality_nets/types.h"

namespace dn {

enum class GeneratorKind { kGaussian, kRankOne, kTeacher };

GeneratorKind ParseGeneratorKind(const std::string& name);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::kGaussian;
  int n = 10;
  int d = 5;
  int k = 1;
  uint64_t seed = 0;
  std::optional<Architecture> teacher_arch;
  bool positive_c = true;
};

// gaussian: X, Y i.i.d. N(0, 1).
// rank_one: X = c a₀ᵀ, a₀ ~ N(0, I), c ~ U[0.5, 2] when positive_c else
//           N(0, 1); Y = c κᵀ with κ ~ N(0, I_K), so every column lies in
//           span{c}.
// teacher:  X ~ N(0, 1), Y = teacher(X) for a seeded network (default: relu,
//           one branch of width 10) drawn like init with scale 1.
Dataset Generate(const GeneratorSpec& spec);

// X_w = U_x V_{x,1:n}ᵀ. Throws CannotWhiten when n > d or rank(X) < n.
Dataset Whiten(const Dataset& ds);

Matrix OneHot(const std::vector<int>& labels, int k);

struct OneHotEncoding {
  Matrix labels;                // n×K, rows sorted by class
  std::vector<int> class_sizes;
  std::vector<int> order;       // row i of the output is input row order[i]
  bool balanced = false;
};

// Stable sort by class, then one-hot. Unbalanced input is allowed but flagged.
OneHotEncoding OneHotBalanced(const std::vector<int>& labels, int k);

// Applies OneHotBalanced to the dataset's rows (labels must be one-hot).
Dataset SortByClass(const Dataset& ds);

// Balanced one-hot labels with n/K rows per class, sorted.
Matrix BalancedOneHot(int n, int k);

struct Table {
  std::vector<std::string> header;
  Matrix values;
};

// Numbers are written with 17 significant digits.
void SaveCsv(const Table& table, const std::string& path);
Table LoadCsv(const std::string& path);

// Columns f0..f{d-1} plus an integer "label" column.
Table DatasetToTable(const Dataset& ds);
// Requires a "label" column of integer classes; k = 0 infers max+1.
Dataset TableToDataset(const Table& table, int k = 0);
Dataset LoadCsvDataset(const std::string& path, int k = 0);

}  // namespace dn

#endif  // DUALITY_NETS_DATA_H_
