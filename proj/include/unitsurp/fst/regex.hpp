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

#include <string_view>
#include <vector>

#include "unitsurp/fst/alphabet.hpp"

namespace unitsurp {

// Thompson NFA over the symbols of an alphabet extended with two
// pseudo-symbols: BOS (index size()) for `^` and EOS (size() + 1) for `$`.
//
// Syntax: literal bytes, `.`, `[...]` / `[^...]` byte classes with ranges,
// `\d \D \s \S \w \W`, `\xNN`, `\n \t \r`, `<sep>`, grouping, `|`, `*`, `+`,
// `?`, `^`, `$`. `.` and negated classes cover every real symbol (SEP
// included) but never BOS or EOS. Classes match single bytes.
class Nfa {
 public:
  struct State {
    std::vector<int> eps;
    int set = -1;   // index into sets(), or -1
    int next = -1;  // target of the set-labelled edge
  };

  static Nfa parse(std::string_view pattern, const Alphabet& alphabet);
  // Accepts only the empty string.
  static Nfa empty_string(const Alphabet& alphabet);

  int start() const { return start_; }
  int accept() const { return accept_; }
  const std::vector<State>& states() const { return states_; }
  // Each set is a membership vector over the extended symbols.
  const std::vector<std::vector<char>>& sets() const { return sets_; }
  std::size_t extended_size() const { return ext_; }
  bool matches_empty() const;

  // Appends `other` after this machine (accept -> other's start).
  // Returns the index of the junction edge target in the merged numbering.
  int append(const Nfa& other);

  // Epsilon closure. If `blocked_from` >= 0, the epsilon edge from that state
  // to `blocked_to` is not followed.
  std::vector<int> closure(std::vector<int> states, int blocked_from = -1,
                           int blocked_to = -1) const;
  // States reached by one edge on extended symbol `x` (no closure).
  std::vector<int> step(const std::vector<int>& states, int x) const;

  std::size_t bos() const { return ext_ - 2; }
  std::size_t eos() const { return ext_ - 1; }

 private:
  int add_state() {
    states_.emplace_back();
    return static_cast<int>(states_.size()) - 1;
  }

  friend class RegexParser;

  std::vector<State> states_;
  std::vector<std::vector<char>> sets_;
  int start_ = -1;
  int accept_ = -1;
  std::size_t ext_ = 0;
};

// Partition of the extended symbols so that every set of every given NFA is a
// union of classes.
struct SymbolClasses {
  std::vector<int> class_of;        // extended symbol -> class
  std::vector<int> representative;  // class -> one extended symbol
  std::vector<std::vector<int>> members;

  static SymbolClasses refine(const std::vector<const Nfa*>& nfas,
                              std::size_t extended_size);
  std::size_t size() const { return representative.size(); }
};

// Parses a replacement-side string (literal bytes, escapes, `<sep>`) into
// output symbols.
std::vector<Symbol> parse_symbol_string(std::string_view text,
                                        const Alphabet& alphabet);

}  // namespace unitsurp
