// Copyright 2026 The visgp Authors.
//
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

#pragma once

#include <stdexcept>
#include <string>

namespace visgp {

enum class ErrorCode {
  InvalidInput,
  InvalidGeometry,
  Unreachable,
  InvalidParam,
  NotPositiveDefinite,
  NoConvergence,
  NotChordal,
  NumericalFailure,
  NoVisibleNeighbors,
};

const char* to_string(ErrorCode code);

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::InvalidParam: return "InvalidParam";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotChordal: return "NotChordal";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::NoVisibleNeighbors: return "NoVisibleNeighbors";
  }
  return "Unknown";
}

}  // namespace visgp
