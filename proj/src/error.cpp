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

#include "unitsurp/error.hpp"

namespace unitsurp {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kUnknownState: return "UnknownState";
    case ErrorCode::kUnknownSymbol: return "UnknownSymbol";
    case ErrorCode::kEmptyInitials: return "EmptyInitials";
    case ErrorCode::kAlphabetMismatch: return "AlphabetMismatch";
    case ErrorCode::kNoPath: return "NoPath";
    case ErrorCode::kAmbiguousOutput: return "AmbiguousOutput";
    case ErrorCode::kNondeterminizable: return "Nondeterminizable";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kEmptyDelimiterSet: return "EmptyDelimiterSet";
    case ErrorCode::kEmptySpelling: return "EmptySpelling";
    case ErrorCode::kRuleCompileError: return "RuleCompileError";
    case ErrorCode::kTrailingGarbage: return "TrailingGarbage";
    case ErrorCode::kEmptyUnit: return "EmptyUnit";
    case ErrorCode::kZeroPrefixMass: return "ZeroPrefixMass";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kEnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorCode::kBeamExhausted: return "BeamExhausted";
    case ErrorCode::kCandidateUnscorable: return "CandidateUnscorable";
    case ErrorCode::kSpanOutOfRange: return "SpanOutOfRange";
    case ErrorCode::kAlignmentMismatch: return "AlignmentMismatch";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kSingularDesign: return "SingularDesign";
    case ErrorCode::kNonPositiveMeasure: return "NonPositiveMeasure";
    case ErrorCode::kEmptyHeldout: return "EmptyHeldout";
  }
  return "Unknown";
}

bool is_numeric_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNondeterminizable:
    case ErrorCode::kZeroPrefixMass:
    case ErrorCode::kEnumerationTooLarge:
    case ErrorCode::kBeamExhausted:
    case ErrorCode::kCandidateUnscorable:
    case ErrorCode::kSingularDesign:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code),
      message_(message) {}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace unitsurp
