// Copyright 2026 The prefinfer Authors.
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

#ifndef PREFINFER_ERROR_HPP_
#define PREFINFER_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace prefinfer {

enum class ErrorCode {
  kInvalidTask,
  kLengthMismatch,
  kNoCandidates,
  kOracleUnavailable,
  kScoreUnavailable,
  kUserUnavailable,
  kParse,
  kLoad,
  kExport,
  kNotFound,
  kConflict,
  kBudget,
  kValidation,
  kConfig,
  kInternal,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidTask: return "invalid_task";
    case ErrorCode::kLengthMismatch: return "length_mismatch";
    case ErrorCode::kNoCandidates: return "no_candidates";
    case ErrorCode::kOracleUnavailable: return "oracle_unavailable";
    case ErrorCode::kScoreUnavailable: return "score_unavailable";
    case ErrorCode::kUserUnavailable: return "user_unavailable";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kLoad: return "load_error";
    case ErrorCode::kExport: return "export_error";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kBudget: return "budget_exhausted";
    case ErrorCode::kValidation: return "validation_error";
    case ErrorCode::kConfig: return "config_error";
    case ErrorCode::kInternal: return "internal_error";
  }
  return "unknown";
}

// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace prefinfer

#endif  // PREFINFER_ERROR_HPP_
