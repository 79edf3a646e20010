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

#include "unitsurp/fst/transducer.hpp"

namespace unitsurp {

// A unit is a nonempty string over the unit alphabet; it never contains SEP.
using Unit = SymbolString;
using UnitString = std::vector<Unit>;

// Completion code: every unit followed by SEP. Throws InvalidArgument if a
// unit contains SEP.
SymbolString h_encode(const UnitString& units, Symbol sep);
// Onset code: SEP before every unit. Not prefix-free; kept for comparison.
SymbolString h_encode_onset(const UnitString& units, Symbol sep);

// Inverse of h_encode. Throws TrailingGarbage if the string does not end in
// SEP and EmptyUnit on adjacent SEPs unless `allow_empty`.
UnitString h_decode(const SymbolString& delta, Symbol sep, bool allow_empty = false);

// True if `prefix` is a prefix of `s`.
bool is_prefix(const SymbolString& prefix, const SymbolString& s);

std::vector<std::string> spell_units(const UnitString& units, const Alphabet& alpha);

}  // namespace unitsurp
