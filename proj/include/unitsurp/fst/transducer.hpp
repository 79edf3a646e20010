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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "unitsurp/fst/alphabet.hpp"

namespace unitsurp {

using StateId = std::int32_t;
using SymbolString = std::vector<Symbol>;

inline constexpr StateId kNoState = -1;

// An arc reads one input symbol (or nothing) and writes a possibly empty
// string of output symbols.
struct Arc {
  Symbol in = kEpsilon;
  SymbolString out;
  StateId dst = kNoState;

  bool operator==(const Arc&) const = default;
};

// Unweighted transducer. A final state may carry a final output, written when
// the input ends there. Immutable once built.
class Transducer {
 public:
  Transducer() = default;

  const Alphabet& input_alphabet() const { return *in_; }
  const Alphabet& output_alphabet() const { return *out_; }
  const AlphabetPtr& input_alphabet_ptr() const { return in_; }
  const AlphabetPtr& output_alphabet_ptr() const { return out_; }

  std::size_t num_states() const { return arcs_.size(); }
  std::size_t num_arcs() const;
  std::span<const Arc> arcs(StateId q) const { return arcs_[q]; }
  const std::vector<StateId>& initials() const { return initials_; }

  bool is_final(StateId q) const { return final_[q].has_value(); }
  // Valid only for final states.
  const SymbolString& final_output(StateId q) const { return *final_[q]; }
  std::vector<StateId> finals() const;

  bool single_output() const;
  bool operator==(const Transducer& other) const;

 private:
  friend class TransducerBuilder;

  AlphabetPtr in_;
  AlphabetPtr out_;
  std::vector<std::vector<Arc>> arcs_;
  std::vector<StateId> initials_;
  std::vector<std::optional<SymbolString>> final_;
};

// Accumulates states and arcs; build() validates every reference.
class TransducerBuilder {
 public:
  TransducerBuilder(AlphabetPtr in, AlphabetPtr out);

  StateId add_state();
  void ensure_states(std::size_t n);
  std::size_t num_states() const { return num_states_; }

  void add_arc(StateId src, Symbol in, SymbolString out, StateId dst);
  void add_arc(StateId src, Symbol in, Symbol out, StateId dst) {
    add_arc(src, in, out == kEpsilon ? SymbolString{} : SymbolString{out}, dst);
  }
  void add_initial(StateId q) { initials_.push_back(q); }
  void set_final(StateId q, SymbolString out = {});

  // Throws UnknownState, UnknownSymbol or EmptyInitials.
  Transducer build() &&;
  // Same validation, but an empty initial set is allowed.
  Transducer build_unchecked_initials() &&;

 private:
  Transducer finish(bool require_initials);

  AlphabetPtr in_;
  AlphabetPtr out_;
  std::size_t num_states_ = 0;
  struct PendingArc {
    StateId src;
    Arc arc;
  };
  std::vector<PendingArc> arcs_;
  std::vector<StateId> initials_;
  std::vector<std::pair<StateId, SymbolString>> finals_;
};

// Raw description form used by file loaders and tests.
struct ArcSpec {
  StateId src;
  Symbol in;
  SymbolString out;
  StateId dst;
};

Transducer build(std::size_t num_states, const std::vector<ArcSpec>& arcs,
                 const std::vector<StateId>& initials,
                 const std::vector<StateId>& finals, AlphabetPtr in_alpha,
                 AlphabetPtr out_alpha);

}  // namespace unitsurp
