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

#include "duality_nets/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "duality_nets/error.h"
#include "duality_nets/forward.h"
#include "duality_nets/rng.h"

namespace dn {

GeneratorKind ParseGeneratorKind(const std::string& name) {
  if (name == "gaussian") return GeneratorKind::kGaussian;
  if (name == "rank_one") return GeneratorKind::kRankOne;
  if (name == "teacher") return GeneratorKind::kTeacher;
  Fail(ErrorCode::kInvalidInput, "unknown generator kind '" + name + "'");
}

namespace {

NetworkParams TeacherParams(const Architecture& arch, Rng rng) {
  NetworkParams p = ZeroParams(arch);
  auto fill = [&rng](Matrix& w) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.rows()));
    for (int i = 0; i < w.size(); ++i) w.data()[i] = rng.Uniform(-bound, bound);
  };
  for (int j = 0; j < arch.branches; ++j) {
    for (Matrix& w : p.weights[j]) fill(w);
    fill(p.head[j]);
    for (int l = 1; l <= arch.hidden_layers(); ++l) {
      for (double& g : p.bn_scale[j][l - 1]) g = 1.0;
    }
  }
  return p;
}

}  // namespace

Dataset Generate(const GeneratorSpec& spec) {
  Require(spec.n >= 1 && spec.d >= 1 && spec.k >= 1, ErrorCode::kInvalidInput,
          "generator needs n, d, K >= 1");
  const Rng root(spec.seed);
  Dataset ds;
  switch (spec.kind) {
    case GeneratorKind::kGaussian: {
      Rng rx = root.Split(1);
      Rng ry = root.Split(2);
      ds.x = rx.NormalMatrix(spec.n, spec.d);
      ds.labels = ry.NormalMatrix(spec.n, spec.k);
      break;
    }
    case GeneratorKind::kRankOne: {
      Rng rc = root.Split(3);
      Rng ra = root.Split(4);
      Rng rk = root.Split(5);
      RankOneFactor f;
      f.c.resize(spec.n);
      for (double& c : f.c) c = spec.positive_c ? rc.Uniform(0.5, 2.0) : rc.Normal();
      f.a0 = ra.NormalVector(spec.d);
      const Vector kappa = rk.NormalVector(spec.k);
      ds.x = Outer(f.c, f.a0);
      ds.labels = Outer(f.c, kappa);
      ds.rank_one = std::move(f);
      break;
    }
    case GeneratorKind::kTeacher: {
      Rng rx = root.Split(6);
      ds.x = rx.NormalMatrix(spec.n, spec.d);
      Architecture arch;
      if (spec.teacher_arch) {
        arch = *spec.teacher_arch;
      } else {
        arch.depth = 2;
        arch.branches = 1;
        arch.widths = {10};
        arch.activation = Activation::kRelu;
      }
      arch.inputs = spec.d;
      arch.outputs = spec.k;
      const NetworkParams teacher = TeacherParams(arch, root.Split(7));
      ds.labels = ForwardOutput(teacher, arch, ds.x);
      break;
    }
  }
  return ds;
}

Dataset Whiten(const Dataset& ds) {
  const int n = ds.n();
  const int d = ds.d();
  Require(n <= d, ErrorCode::kCannotWhiten,
          "whitening needs n <= d (got n=" + std::to_string(n) +
              ", d=" + std::to_string(d) + ")");
  const SvdResult s = Svd(ds.x);
  Require(!s.sigma.empty() && s.sigma[n - 1] > kRankTol * s.sigma[0],
          ErrorCode::kCannotWhiten, "X is rank deficient");
  Matrix xw(n, d);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      const double uik = s.u(i, k);
      for (int c = 0; c < d; ++c) xw(i, c) += uik * s.v(c, k);
    }
  }
  Dataset out = ds;
  out.x = std::move(xw);
  out.whitened = true;
  out.rank_one.reset();
  return out;
}

Matrix OneHot(const std::vector<int>& labels, int k) {
  Require(k >= 1, ErrorCode::kInvalidInput, "K must be >= 1");
  Matrix y(static_cast<int>(labels.size()), k);
  for (size_t i = 0; i < labels.size(); ++i) {
    Require(labels[i] >= 0 && labels[i] < k, ErrorCode::kInvalidLabel,
            "class index " + std::to_string(labels[i]) + " outside [0, " +
                std::to_string(k) + ")");
    y(static_cast<int>(i), labels[i]) = 1.0;
  }
  return y;
}

OneHotEncoding OneHotBalanced(const std::vector<int>& labels, int k) {
  OneHotEncoding enc;
  Matrix unsorted = OneHot(labels, k);
  enc.order.resize(labels.size());
  std::iota(enc.order.begin(), enc.order.end(), 0);
  std::stable_sort(enc.order.begin(), enc.order.end(),
                   [&](int a, int b) { return labels[a] < labels[b]; });
  enc.labels = unsorted.select_rows(enc.order);
  enc.class_sizes.assign(k, 0);
  for (int c : labels) ++enc.class_sizes[c];
  for (int c = 0; c < k; ++c) {
    Require(enc.class_sizes[c] > 0, ErrorCode::kInvalidLabel,
            "class " + std::to_string(c) + " is empty");
  }
  enc.balanced = std::all_of(enc.class_sizes.begin(), enc.class_sizes.end(),
                             [&](int s) { return s == enc.class_sizes[0]; });
  return enc;
}

Dataset SortByClass(const Dataset& ds) {
  const OneHotEncoding enc = OneHotBalanced(ClassIndex(ds.labels), ds.k());
  Dataset out = ds;
  out.x = ds.x.select_rows(enc.order);
  out.labels = enc.labels;
  out.class_sizes = enc.class_sizes;
  if (ds.rank_one) {
    for (size_t i = 0; i < enc.order.size(); ++i) {
      out.rank_one->c[i] = ds.rank_one->c[enc.order[i]];
    }
  }
  return out;
}

Matrix BalancedOneHot(int n, int k) {
  Require(k >= 1 && n % k == 0, ErrorCode::kInvalidInput,
          "balanced one-hot needs K | n");
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i / (n / k);
  return OneHot(labels, k);
}

void SaveCsv(const Table& table, const std::string& path) {
  Require(static_cast<int>(table.header.size()) == table.values.cols(),
          ErrorCode::kShapeError, "header and column counts differ");
  std::ofstream out(path);
  Require(out.good(), ErrorCode::kIoError, "cannot open " + path);
  for (size_t c = 0; c < table.header.size(); ++c) {
    out << (c ? "," : "") << table.header[c];
  }
  out << "\n";
  char buf[64];
  for (int r = 0; r < table.values.rows(); ++r) {
    for (int c = 0; c < table.values.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", table.values(r, c));
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
  Require(out.good(), ErrorCode::kIoError, "write failed for " + path);
}

namespace {

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Table LoadCsv(const std::string& path) {
  std::ifstream in(path);
  Require(in.good(), ErrorCode::kIoError, "cannot open " + path);
  std::string line;
  Require(static_cast<bool>(std::getline(in, line)), ErrorCode::kParseError,
          path + ": missing header row");
  Table t;
  for (const std::string& h : SplitLine(line)) t.header.push_back(Trim(h));
  const int cols = static_cast<int>(t.header.size());
  std::vector<double> values;
  int row = 0;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    ++row;
    const auto cells = SplitLine(line);
    Require(static_cast<int>(cells.size()) == cols, ErrorCode::kParseError,
            path + ": row " + std::to_string(row) + " has " +
                std::to_string(cells.size()) + " cells, expected " +
                std::to_string(cols));
    for (int c = 0; c < cols; ++c) {
      const std::string cell = Trim(cells[c]);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      Require(res.ec == std::errc() && res.ptr == cell.data() + cell.size() &&
                  !cell.empty(),
              ErrorCode::kParseError,
              path + ": row " + std::to_string(row) + ", column " +
                  std::to_string(c + 1) + " ('" + t.header[c] +
                  "'): not a number: '" + cell + "'");
      values.push_back(v);
    }
  }
  t.values = Matrix(row, cols);
  std::copy(values.begin(), values.end(), t.values.data());
  return t;
}

Table DatasetToTable(const Dataset& ds) {
  Table t;
  for (int c = 0; c < ds.d(); ++c) t.header.push_back("f" + std::to_string(c));
  t.header.push_back("label");
  t.values = Matrix(ds.n(), ds.d() + 1);
  const std::vector<int> cls = ClassIndex(ds.labels);
  for (int r = 0; r < ds.n(); ++r) {
    for (int c = 0; c < ds.d(); ++c) t.values(r, c) = ds.x(r, c);
    t.values(r, ds.d()) = cls[r];
  }
  return t;
}

Dataset TableToDataset(const Table& table, int k) {
  const auto it = std::find(table.header.begin(), table.header.end(), "label");
  Require(it != table.header.end(), ErrorCode::kParseError,
          "missing 'label' column");
  const int label_col = static_cast<int>(it - table.header.begin());
  const int n = table.values.rows();
  const int d = table.values.cols() - 1;
  Dataset ds;
  ds.x = Matrix(n, d);
  std::vector<int> labels(n);
  int max_label = 0;
  for (int r = 0; r < n; ++r) {
    int c_out = 0;
    for (int c = 0; c < table.values.cols(); ++c) {
      if (c == label_col) continue;
      ds.x(r, c_out++) = table.values(r, c);
    }
    const double v = table.values(r, label_col);
    Require(v >= 0.0 && v == std::floor(v) && v < 1e9, ErrorCode::kParseError,
            "row " + std::to_string(r + 1) + ", column " +
                std::to_string(label_col + 1) +
                " ('label'): not a nonnegative integer class");
    labels[r] = static_cast<int>(v);
    max_label = std::max(max_label, labels[r]);
  }
  const int classes = k > 0 ? k : max_label + 1;
  ds.labels = OneHot(labels, classes);
  return ds;
}

Dataset LoadCsvDataset(const std::string& path, int k) {
  return TableToDataset(LoadCsv(path), k);
}

}  // namespace dn
