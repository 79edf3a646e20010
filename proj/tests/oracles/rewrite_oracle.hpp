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

#include <string>
#include <vector>

#include "unitsurp/units/rewrite.hpp"

namespace oracle {

// SEP as a byte inside oracle strings.
inline constexpr char kSepByte = '\x1f';

// Applies one rule to `text` as a string rewrite, using std::regex for the
// pattern and both contexts.
std::string rewrite(const unitsurp::RewriteRule& rule, const std::string& text);
std::string rewrite_all(const std::vector<unitsurp::RewriteRule>& rules, std::string text);

// Splits text into units: whitespace and SEP runs are boundaries.
std::vector<std::string> absorb_units(const std::string& text);

// Units of an acontextual parse computed with plain string scanning.
std::vector<std::string> delimiter_units(const std::string& text, char delim,
                                         const std::string& attribution);

}  // namespace oracle
