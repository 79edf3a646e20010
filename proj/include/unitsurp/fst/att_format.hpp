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
#include <string_view>

#include "unitsurp/fst/transducer.hpp"

namespace unitsurp {

// AT&T-style text: `src<TAB>dst<TAB>in<TAB>out` per arc, `state` or
// `state<TAB>out` per final state. Multi-symbol outputs are space-separated
// labels; `<eps>` stands for the empty string. Lines starting with '#' are
// comments, except the `# states N` and `# initials q...` directives written
// by serialize(). Without an initials directive the source of the first line
// is the initial state.
std::string serialize(const Transducer& f);

// Throws ParseError naming the offending line.
Transducer deserialize(std::string_view text, AlphabetPtr in_alpha,
                       AlphabetPtr out_alpha);

}  // namespace unitsurp
