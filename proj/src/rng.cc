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

#include "duality_nets/rng.h"

#include <cmath>
#include <numbers>

namespace dn {

namespace {
constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
constexpr uint64_t kSeedMul = 0xD1B54A32D192ED03ULL;
constexpr uint64_t kStreamMul = 0x8CB92BA72F3D8DD7ULL;
}  // namespace

uint64_t SplitMix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

Rng::Rng(uint64_t seed, uint64_t stream)
    : base_(seed * kSeedMul + stream * kStreamMul) {}

uint64_t Rng::NextU64() {
  ++counter_;
  return SplitMix64(base_ + counter_ * kGamma);
}

double Rng::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

double Rng::Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

double Rng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  const double u2 = Uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

uint64_t Rng::Below(uint64_t bound) {
  if (bound <= 1) return 0;
  // Rejection keeps the draw unbiased.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t x = NextU64();
  while (x >= limit) x = NextU64();
  return x % bound;
}

Rng Rng::Split(uint64_t stream) const {
  Rng child(0, 0);
  child.base_ = SplitMix64(base_ ^ (stream * kStreamMul + kGamma));
  return child;
}

Matrix Rng::NormalMatrix(int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = Normal();
  return m;
}

Matrix Rng::UniformMatrix(int rows, int cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = Uniform(lo, hi);
  return m;
}

Vector Rng::NormalVector(int n) {
  Vector v(n);
  for (double& x : v) x = Normal();
  return v;
}

Vector Rng::UnitVector(int n) {
  Vector v = NormalVector(n);
  double nrm = Norm(v);
  while (nrm == 0.0) {
    v = NormalVector(n);
    nrm = Norm(v);
  }
  return Scaled(v, 1.0 / nrm);
}

}  // namespace dn
