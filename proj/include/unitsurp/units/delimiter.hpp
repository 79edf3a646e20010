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

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "unitsurp/fst/transducer.hpp"

namespace unitsurp {

enum class Attribution { kLeading, kTrailing, kAbsorb, kNone };

Attribution parse_attribution(std::string_view name);
std::string_view attribution_name(Attribution a);

// Delimiter insertion over `in`; `out` must hold SEP and every input label.
// The last unit's SEP is the final output of the states that need one.
//   leading:  every delimiter opens a new unit; a delimiter at the very start
//             stays with the first unit.
//   trailing: delimiters stay with the preceding unit; SEP goes before the
//             next non-delimiter.
//   absorb:   runs of delimiters collapse into a single SEP.
// Throws EmptyDelimiterSet.
Transducer delimiter_fst(AlphabetPtr in, AlphabetPtr out,
                         const std::vector<Symbol>& delimiters, Attribution attribution);

// Token -> its UTF-8 characters, each followed by SEP. `out` is the byte
// alphabet with SEP. Throws EmptySpelling.
Transducer char_fst(AlphabetPtr tokens, AlphabetPtr out);

// Bytes -> UTF-8 characters each followed by SEP. Malformed sequences split
// into single-byte characters. With `drop` nonempty, those bytes are removed
// instead of becoming units.
Transducer utf8_char_fst(AlphabetPtr in, AlphabetPtr out,
                         const std::vector<Symbol>& drop = {});

// Token -> its spelling, one byte symbol of `bytes` per byte.
Transducer spelling_fst(AlphabetPtr tokens, AlphabetPtr bytes);

// x -> x SEP: every input symbol is its own unit.
Transducer tokens_fst(AlphabetPtr in, AlphabetPtr out);

// Output alphabet for tokens_fst: the input labels plus SEP.
Alphabet with_sep(const Alphabet& a);

}  // namespace unitsurp
