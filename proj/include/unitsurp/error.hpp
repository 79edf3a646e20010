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
#include <string_view>

namespace unitsurp {

enum class ErrorCode {
  kInvalidArgument,
  kIoError,
  kUnknownState,
  kUnknownSymbol,
  kEmptyInitials,
  kAlphabetMismatch,
  kNoPath,
  kAmbiguousOutput,
  kNondeterminizable,
  kParseError,
  kEmptyDelimiterSet,
  kEmptySpelling,
  kRuleCompileError,
  kTrailingGarbage,
  kEmptyUnit,
  kZeroPrefixMass,
  kEmptyCorpus,
  kEnumerationTooLarge,
  kBeamExhausted,
  kCandidateUnscorable,
  kSpanOutOfRange,
  kAlignmentMismatch,
  kDegenerateInput,
  kSingularDesign,
  kNonPositiveMeasure,
  kEmptyHeldout,
};

std::string_view error_code_name(ErrorCode code);

// True for failures of a numerical procedure rather than of the input data.
bool is_numeric_failure(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }
  const std::string& message() const { return message_; }

  // Same code, message prefixed with "<where>: ".
  Error within(const std::string& where) const { return Error(code_, where + ": " + message_); }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace unitsurp
