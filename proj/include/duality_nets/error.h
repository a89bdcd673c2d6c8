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

#ifndef DUALITY_NETS_ERROR_H_
#define DUALITY_NETS_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dn {

// Numeric values are part of the C ABI (see c_api.h); append only.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidInput = 1,
  kShapeError = 2,
  kDegenerateNeuron = 3,
  kDegenerateBranch = 4,
  kConstantActivation = 5,
  kInfeasible = 6,
  kDuplicateAbscissa = 7,
  kPreconditionViolated = 8,
  kWidthTooSmall = 9,
  kOverparamAssumptionViolated = 10,
  kTooLargeForBruteForce = 11,
  kNoDualConstruction = 12,
  kZeroMatrix = 13,
  kUnbalancedClasses = 14,
  kDiverged = 15,
  kCannotWhiten = 16,
  kInvalidLabel = 17,
  kParseError = 18,
  kConfigError = 19,
  kIoError = 20,
  kInternal = 21,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) Fail(code, message);
}

// Literal messages skip the string construction on the success path.
inline void Require(bool condition, ErrorCode code, const char* message) {
  if (!condition) Fail(code, message);
}

}  // namespace dn

#endif  // DUALITY_NETS_ERROR_H_
