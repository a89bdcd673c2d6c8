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

#ifndef DUALITY_NETS_MATRIX_H_
#define DUALITY_NETS_MATRIX_H_

#include <initializer_list>
#include <vector>

namespace dn {

using Vector = std::vector<double>;

// Default relative threshold for numerical rank and pseudo-inverse cutoffs.
inline constexpr double kRankTol = 1e-8;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix Identity(int n);
  static Matrix Diagonal(const Vector& d);
  static Matrix ColumnVector(const Vector& v);
  static Matrix RowVector(const Vector& v);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }
  int size() const { return rows_ * cols_; }

  double& operator()(int r, int c) { return data_[Index(r, c)]; }
  double operator()(int r, int c) const { return data_[Index(r, c)]; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row_ptr(int r) { return data_.data() + Index(r, 0); }
  const double* row_ptr(int r) const { return data_.data() + Index(r, 0); }

  Vector col(int c) const;
  Vector row(int r) const;
  void set_col(int c, const Vector& v);
  void set_row(int r, const Vector& v);

  Matrix transpose() const;
  // Rows [r0, r0+nr) and columns [c0, c0+nc).
  Matrix block(int r0, int c0, int nr, int nc) const;
  Matrix select_rows(const std::vector<int>& idx) const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  bool operator==(const Matrix& o) const = default;

 private:
  int Index(int r, int c) const { return r * cols_ + c; }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, const Vector& v);

// aᵀ b without forming the transpose.
Matrix MatTMul(const Matrix& a, const Matrix& b);
// a bᵀ without forming the transpose.
Matrix MatMulT(const Matrix& a, const Matrix& b);
Vector MatTVec(const Matrix& a, const Vector& v);
Matrix Outer(const Vector& u, const Vector& v);
Matrix HStack(const std::vector<Matrix>& blocks);
Matrix VStack(const std::vector<Matrix>& blocks);

double FrobeniusNorm(const Matrix& a);
double FrobeniusDot(const Matrix& a, const Matrix& b);
double MaxAbs(const Matrix& a);
double MaxAbsDiff(const Matrix& a, const Matrix& b);
bool AllFinite(const Matrix& a);

double Dot(const Vector& a, const Vector& b);
double Norm(const Vector& a);
Vector Scaled(const Vector& a, double s);
Vector Add(const Vector& a, const Vector& b);
Vector Sub(const Vector& a, const Vector& b);
Vector PositivePart(const Vector& a);

struct SvdResult {
  Matrix u;      // n×n orthogonal
  Vector sigma;  // min(n, d) values, descending
  Matrix v;      // d×d orthogonal
};

// Full SVD by one-sided Jacobi rotations. Throws InvalidInput on non-finite
// entries.
SvdResult Svd(const Matrix& a);

// Singular values only (same algorithm, skips U completion).
Vector SingularValues(const Matrix& a);

double SpectralNorm(const Matrix& a);

// Moore-Penrose pseudo-inverse; singular values <= tol·σ_max are dropped.
Matrix Pinv(const Matrix& a, double tol = kRankTol);

int NumericalRank(const Matrix& a, double tol = kRankTol);

// U(Σ - τ)₊Vᵀ.
Matrix SingularValueThreshold(const Matrix& a, double tau);

}  // namespace dn

#endif  // DUALITY_NETS_MATRIX_H_
