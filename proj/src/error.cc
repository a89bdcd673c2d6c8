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

#include "duality_nets/error.h"

namespace dn {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kShapeError: return "ShapeError";
    case ErrorCode::kDegenerateNeuron: return "DegenerateNeuron";
    case ErrorCode::kDegenerateBranch: return "DegenerateBranch";
    case ErrorCode::kConstantActivation: return "ConstantActivation";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kDuplicateAbscissa: return "DuplicateAbscissa";
    case ErrorCode::kPreconditionViolated: return "PreconditionViolated";
    case ErrorCode::kWidthTooSmall: return "WidthTooSmall";
    case ErrorCode::kOverparamAssumptionViolated:
      return "OverparamAssumptionViolated";
    case ErrorCode::kTooLargeForBruteForce: return "TooLargeForBruteForce";
    case ErrorCode::kNoDualConstruction: return "NoDualConstruction";
    case ErrorCode::kZeroMatrix: return "ZeroMatrix";
    case ErrorCode::kUnbalancedClasses: return "UnbalancedClasses";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kCannotWhiten: return "CannotWhiten";
    case ErrorCode::kInvalidLabel: return "InvalidLabel";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

}  // namespace dn
