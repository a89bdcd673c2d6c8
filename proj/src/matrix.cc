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

#include "duality_nets/matrix.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "duality_nets/error.h"

namespace dn {

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols),
      data_(static_cast<size_t>(rows) * static_cast<size_t>(cols), fill) {
  Require(rows >= 0 && cols >= 0, ErrorCode::kShapeError,
          "negative matrix dimension");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = static_cast<int>(rows.size());
  cols_ = rows_ == 0 ? 0 : static_cast<int>(rows.begin()->size());
  data_.reserve(static_cast<size_t>(rows_ * cols_));
  for (const auto& r : rows) {
    Require(static_cast<int>(r.size()) == cols_, ErrorCode::kShapeError,
            "ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::Identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::Diagonal(const Vector& d) {
  const int n = static_cast<int>(d.size());
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::ColumnVector(const Vector& v) {
  Matrix m(static_cast<int>(v.size()), 1);
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

Matrix Matrix::RowVector(const Vector& v) {
  Matrix m(1, static_cast<int>(v.size()));
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

Vector Matrix::col(int c) const {
  Vector v(rows_);
  for (int r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
  return v;
}

Vector Matrix::row(int r) const {
  return Vector(row_ptr(r), row_ptr(r) + cols_);
}

void Matrix::set_col(int c, const Vector& v) {
  Require(static_cast<int>(v.size()) == rows_, ErrorCode::kShapeError,
          "set_col length mismatch");
  for (int r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

void Matrix::set_row(int r, const Vector& v) {
  Require(static_cast<int>(v.size()) == cols_, ErrorCode::kShapeError,
          "set_row length mismatch");
  std::copy(v.begin(), v.end(), row_ptr(r));
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

Matrix Matrix::block(int r0, int c0, int nr, int nc) const {
  Require(r0 >= 0 && c0 >= 0 && r0 + nr <= rows_ && c0 + nc <= cols_,
          ErrorCode::kShapeError, "block out of range");
  Matrix b(nr, nc);
  for (int r = 0; r < nr; ++r) {
    for (int c = 0; c < nc; ++c) b(r, c) = (*this)(r0 + r, c0 + c);
  }
  return b;
}

Matrix Matrix::select_rows(const std::vector<int>& idx) const {
  Matrix b(static_cast<int>(idx.size()), cols_);
  for (size_t i = 0; i < idx.size(); ++i) {
    std::copy(row_ptr(idx[i]), row_ptr(idx[i]) + cols_,
              b.row_ptr(static_cast<int>(i)));
  }
  return b;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  Require(rows_ == o.rows_ && cols_ == o.cols_, ErrorCode::kShapeError,
          "matrix add shape mismatch");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  Require(rows_ == o.rows_ && cols_ == o.cols_, ErrorCode::kShapeError,
          "matrix subtract shape mismatch");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    Fail(ErrorCode::kShapeError,
         "matmul " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
             " by " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  const int n = b.cols();
  for (int i = 0; i < a.rows(); ++i) {
    double* ci = c.row_ptr(i);
    const double* ai = a.row_ptr(i);
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = b.row_ptr(k);
      for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Vector operator*(const Matrix& a, const Vector& v) {
  Require(a.cols() == static_cast<int>(v.size()), ErrorCode::kShapeError,
          "matvec shape mismatch");
  Vector out(a.rows(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    const double* ai = a.row_ptr(i);
    double s = 0.0;
    for (int k = 0; k < a.cols(); ++k) s += ai[k] * v[k];
    out[i] = s;
  }
  return out;
}

Matrix MatTMul(const Matrix& a, const Matrix& b) {
  Require(a.rows() == b.rows(), ErrorCode::kShapeError,
          "MatTMul shape mismatch");
  Matrix c(a.cols(), b.cols());
  const int n = b.cols();
  for (int k = 0; k < a.rows(); ++k) {
    const double* ak = a.row_ptr(k);
    const double* bk = b.row_ptr(k);
    for (int i = 0; i < a.cols(); ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      double* ci = c.row_ptr(i);
      for (int j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

Matrix MatMulT(const Matrix& a, const Matrix& b) {
  Require(a.cols() == b.cols(), ErrorCode::kShapeError,
          "MatMulT shape mismatch");
  Matrix c(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i) {
    const double* ai = a.row_ptr(i);
    for (int j = 0; j < b.rows(); ++j) {
      const double* bj = b.row_ptr(j);
      double s = 0.0;
      for (int k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
      c(i, j) = s;
    }
  }
  return c;
}

Vector MatTVec(const Matrix& a, const Vector& v) {
  Require(a.rows() == static_cast<int>(v.size()), ErrorCode::kShapeError,
          "MatTVec shape mismatch");
  Vector out(a.cols(), 0.0);
  for (int k = 0; k < a.rows(); ++k) {
    const double* ak = a.row_ptr(k);
    for (int i = 0; i < a.cols(); ++i) out[i] += ak[i] * v[k];
  }
  return out;
}

Matrix Outer(const Vector& u, const Vector& v) {
  Matrix m(static_cast<int>(u.size()), static_cast<int>(v.size()));
  for (size_t i = 0; i < u.size(); ++i) {
    for (size_t j = 0; j < v.size(); ++j) {
      m(static_cast<int>(i), static_cast<int>(j)) = u[i] * v[j];
    }
  }
  return m;
}

Matrix HStack(const std::vector<Matrix>& blocks) {
  if (blocks.empty()) return Matrix();
  int cols = 0;
  const int rows = blocks.front().rows();
  for (const Matrix& b : blocks) {
    Require(b.rows() == rows, ErrorCode::kShapeError, "HStack row mismatch");
    cols += b.cols();
  }
  Matrix out(rows, cols);
  int c0 = 0;
  for (const Matrix& b : blocks) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < b.cols(); ++c) out(r, c0 + c) = b(r, c);
    }
    c0 += b.cols();
  }
  return out;
}

Matrix VStack(const std::vector<Matrix>& blocks) {
  if (blocks.empty()) return Matrix();
  int rows = 0;
  const int cols = blocks.front().cols();
  for (const Matrix& b : blocks) {
    Require(b.cols() == cols, ErrorCode::kShapeError, "VStack col mismatch");
    rows += b.rows();
  }
  Matrix out(rows, cols);
  int r0 = 0;
  for (const Matrix& b : blocks) {
    std::copy(b.data(), b.data() + b.size(), out.row_ptr(r0));
    r0 += b.rows();
  }
  return out;
}

double FrobeniusNorm(const Matrix& a) {
  return std::sqrt(FrobeniusDot(a, a));
}

double FrobeniusDot(const Matrix& a, const Matrix& b) {
  Require(a.rows() == b.rows() && a.cols() == b.cols(),
          ErrorCode::kShapeError, "FrobeniusDot shape mismatch");
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

double MaxAbs(const Matrix& a) {
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i]));
  return m;
}

double MaxAbsDiff(const Matrix& a, const Matrix& b) {
  Require(a.rows() == b.rows() && a.cols() == b.cols(),
          ErrorCode::kShapeError, "MaxAbsDiff shape mismatch");
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

bool AllFinite(const Matrix& a) {
  for (int i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a.data()[i])) return false;
  }
  return true;
}

double Dot(const Vector& a, const Vector& b) {
  Require(a.size() == b.size(), ErrorCode::kShapeError, "Dot size mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Norm(const Vector& a) { return std::sqrt(Dot(a, a)); }

Vector Scaled(const Vector& a, double s) {
  Vector out(a);
  for (double& x : out) x *= s;
  return out;
}

Vector Add(const Vector& a, const Vector& b) {
  Require(a.size() == b.size(), ErrorCode::kShapeError, "Add size mismatch");
  Vector out(a);
  for (size_t i = 0; i < a.size(); ++i) out[i] += b[i];
  return out;
}

Vector Sub(const Vector& a, const Vector& b) {
  Require(a.size() == b.size(), ErrorCode::kShapeError, "Sub size mismatch");
  Vector out(a);
  for (size_t i = 0; i < a.size(); ++i) out[i] -= b[i];
  return out;
}

Vector PositivePart(const Vector& a) {
  Vector out(a);
  for (double& x : out) x = std::max(x, 0.0);
  return out;
}

namespace {

// Orthogonalizes the columns of b (m×n, m >= n) in place, accumulating the
// rotations into v (n×n).
void JacobiSweeps(Matrix& b, Matrix* v) {
  const int m = b.rows();
  const int n = b.cols();
  constexpr double kEps = 1e-15;
  constexpr int kMaxSweeps = 80;
  // Column-major scratch keeps the inner loops contiguous.
  std::vector<double> cols(static_cast<size_t>(m) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) cols[static_cast<size_t>(j) * m + i] = b(i, j);
  }
  std::vector<double> vcols;
  if (v != nullptr) {
    vcols.assign(static_cast<size_t>(n) * n, 0.0);
    for (int j = 0; j < n; ++j) vcols[static_cast<size_t>(j) * n + j] = 1.0;
  }
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      double* bp = &cols[static_cast<size_t>(p) * m];
      for (int q = p + 1; q < n; ++q) {
        double* bq = &cols[static_cast<size_t>(q) * m];
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (int i = 0; i < m; ++i) {
          alpha += bp[i] * bp[i];
          beta += bq[i] * bq[i];
          gamma += bp[i] * bq[i];
        }
        if (gamma == 0.0 || std::abs(gamma) <= kEps * std::sqrt(alpha * beta)) {
          continue;
        }
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < m; ++i) {
          const double x = bp[i];
          const double y = bq[i];
          bp[i] = c * x - s * y;
          bq[i] = s * x + c * y;
        }
        if (v != nullptr) {
          double* vp = &vcols[static_cast<size_t>(p) * n];
          double* vq = &vcols[static_cast<size_t>(q) * n];
          for (int i = 0; i < n; ++i) {
            const double x = vp[i];
            const double y = vq[i];
            vp[i] = c * x - s * y;
            vq[i] = s * x + c * y;
          }
        }
      }
    }
    if (!rotated) break;
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) b(i, j) = cols[static_cast<size_t>(j) * m + i];
  }
  if (v != nullptr) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) (*v)(i, j) = vcols[static_cast<size_t>(j) * n + i];
    }
  }
}

// Fills columns [k, m) of u with an orthonormal completion of columns [0, k).
void CompleteBasis(Matrix& u, int k) {
  const int m = u.rows();
  int filled = k;
  for (int cand = 0; cand < m && filled < m; ++cand) {
    Vector e(m, 0.0);
    e[cand] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < filled; ++j) {
        double d = 0.0;
        for (int i = 0; i < m; ++i) d += u(i, j) * e[i];
        for (int i = 0; i < m; ++i) e[i] -= d * u(i, j);
      }
    }
    const double nrm = Norm(e);
    if (nrm < 0.5) continue;
    for (int i = 0; i < m; ++i) u(i, filled) = e[i] / nrm;
    ++filled;
  }
}

}  // namespace

SvdResult Svd(const Matrix& a) {
  Require(AllFinite(a), ErrorCode::kInvalidInput, "svd of non-finite matrix");
  if (a.rows() < a.cols()) {
    SvdResult t = Svd(a.transpose());
    return SvdResult{std::move(t.v), std::move(t.sigma), std::move(t.u)};
  }
  const int m = a.rows();
  const int n = a.cols();
  Matrix b = a;
  Matrix v(n, n);
  JacobiSweeps(b, &v);

  std::vector<double> norms(n);
  for (int j = 0; j < n; ++j) norms[j] = Norm(b.col(j));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return norms[x] > norms[y]; });

  SvdResult out{Matrix(m, m), Vector(n), Matrix(n, n)};
  const double smax = n > 0 ? norms[order[0]] : 0.0;
  int kept = 0;
  for (int k = 0; k < n; ++k) {
    const int j = order[k];
    out.sigma[k] = norms[j];
    for (int i = 0; i < n; ++i) out.v(i, k) = v(i, j);
    if (norms[j] > 0.0 && norms[j] > smax * 1e-280) {
      for (int i = 0; i < m; ++i) out.u(i, k) = b(i, j) / norms[j];
      kept = k + 1;
    }
  }
  // Columns past `kept` (null singular values) get an orthonormal completion.
  CompleteBasis(out.u, kept);
  return out;
}

Vector SingularValues(const Matrix& a) {
  Require(AllFinite(a), ErrorCode::kInvalidInput,
          "singular values of non-finite matrix");
  Matrix b = a.rows() < a.cols() ? a.transpose() : a;
  JacobiSweeps(b, nullptr);
  Vector s(b.cols());
  for (int j = 0; j < b.cols(); ++j) s[j] = Norm(b.col(j));
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

double SpectralNorm(const Matrix& a) {
  if (a.empty()) return 0.0;
  return SingularValues(a).front();
}

Matrix Pinv(const Matrix& a, double tol) {
  Require(tol > 0.0, ErrorCode::kInvalidInput, "pinv tolerance must be > 0");
  const SvdResult s = Svd(a);
  Matrix out(a.cols(), a.rows());
  if (s.sigma.empty() || s.sigma[0] == 0.0) return out;
  const double cut = tol * s.sigma[0];
  for (size_t k = 0; k < s.sigma.size(); ++k) {
    if (s.sigma[k] <= cut) break;
    const double inv = 1.0 / s.sigma[k];
    const int kk = static_cast<int>(k);
    for (int i = 0; i < a.cols(); ++i) {
      const double vi = s.v(i, kk) * inv;
      if (vi == 0.0) continue;
      for (int j = 0; j < a.rows(); ++j) out(i, j) += vi * s.u(j, kk);
    }
  }
  return out;
}

int NumericalRank(const Matrix& a, double tol) {
  Require(tol > 0.0, ErrorCode::kInvalidInput, "rank tolerance must be > 0");
  if (a.empty()) return 0;
  const Vector s = SingularValues(a);
  if (s[0] == 0.0) return 0;
  int r = 0;
  for (double x : s) r += x > tol * s[0] ? 1 : 0;
  return r;
}

Matrix SingularValueThreshold(const Matrix& a, double tau) {
  const SvdResult s = Svd(a);
  Matrix out(a.rows(), a.cols());
  for (size_t k = 0; k < s.sigma.size(); ++k) {
    const double w = s.sigma[k] - tau;
    if (w <= 0.0) break;
    const int kk = static_cast<int>(k);
    for (int i = 0; i < a.rows(); ++i) {
      const double ui = s.u(i, kk) * w;
      for (int j = 0; j < a.cols(); ++j) out(i, j) += ui * s.v(j, kk);
    }
  }
  return out;
}

}  // namespace dn
