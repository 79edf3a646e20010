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

#include <cstddef>
#include <vector>

#include "unitsurp/fst/transducer.hpp"

namespace unitsurp {

// x:x over every symbol of `alpha`.
Transducer identity(AlphabetPtr alpha);
// x:y where y is the output symbol with the same label as x. Throws
// AlphabetMismatch if `out` lacks one of the labels.
Transducer identity(AlphabetPtr in, AlphabetPtr out);

// Relational composition, matching g's input symbols to f's output symbols
// by label. Uses a sequence epsilon filter so each composed path is produced
// once.
Transducer compose(const Transducer& f, const Transducer& g);

// The unique output of `f` on `input`. Throws NoPath or AmbiguousOutput.
SymbolString apply_fst(const Transducer& f, const SymbolString& input);

// All distinct outputs, sorted; at most `limit` of them.
std::vector<SymbolString> apply_all(const Transducer& f,
                                    const SymbolString& input,
                                    std::size_t limit = 16);

// Acceptor over the input alphabet; arcs copy their input to the output.
Transducer input_project(const Transducer& f);

// States whose epsilon-closure (over input-epsilon arcs) has an arc for every
// input symbol.
std::vector<StateId> universal_states(const Transducer& f);

// States from which the input projection accepts every continuation.
// Exploration stops after `max_subsets` subsets; unexplored states count as
// not co-universal.
std::vector<StateId> co_universal_states(const Transducer& f,
                                         std::size_t max_subsets = 200000);

// Splits multi-symbol outputs through fresh states so every arc writes at most
// one symbol. Final outputs longer than one symbol become epsilon-input chains.
Transducer normalize_single_output(const Transducer& f);

// Removes arcs that neither read nor write.
Transducer remove_epsilon_epsilon(const Transducer& f);

// Keeps accessible and coaccessible states. An empty relation comes back as
// a single non-final initial state.
Transducer trim(const Transducer& f);

struct MinimizeOptions {
  std::size_t max_states = 1000000;
};

// Minimal deterministic acceptor over (input, output) pair labels, read back
// as a single-output transducer. Throws Nondeterminizable when the subset
// construction exceeds `max_states` or finals disagree on their output.
Transducer minimize(const Transducer& f, MinimizeOptions options = {});

}  // namespace unitsurp
