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

#ifndef DUALITY_NETS_RNG_H_
#define DUALITY_NETS_RNG_H_

#include <cstdint>

#include "duality_nets/matrix.h"

namespace dn {

// Counter-based generator: draw k of stream s is SplitMix64's finalizer
// applied to seed·φ + s·ψ + k·γ (64-bit wraparound). The mapping is fixed so
// seeds reproduce across platforms and languages.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0);

  uint64_t NextU64();
  // Uniform in [0, 1) with 53 bits of precision.
  double Uniform();
  double Uniform(double lo, double hi);
  // Box-Muller, both outputs consumed in order.
  double Normal();
  uint64_t Below(uint64_t bound);

  // Independent child stream; does not advance this generator.
  Rng Split(uint64_t stream) const;

  Matrix NormalMatrix(int rows, int cols);
  Matrix UniformMatrix(int rows, int cols, double lo, double hi);
  Vector NormalVector(int n);
  Vector UnitVector(int n);

 private:
  uint64_t base_;
  uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

uint64_t SplitMix64(uint64_t x);

}  // namespace dn

#endif  // DUALITY_NETS_RNG_H_
