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
#include <utility>
#include <vector>

#include "unitsurp/fst/transducer.hpp"

namespace unitsurp {

// Byte-level BPE. Text is split into chunks before each whitespace run, so a
// leading space stays attached to the word after it. Ids 0-255 are bytes.
class BpeTokenizer {
 public:
  static BpeTokenizer learn(const std::vector<std::string>& lines, std::size_t num_merges);

  AlphabetPtr alphabet() const { return alphabet_; }
  std::size_t num_merges() const { return merges_.size(); }

  SymbolString encode(std::string_view text) const;
  std::string decode(const SymbolString& tokens) const { return alphabet_->spell(tokens); }

  std::string to_json() const;
  static BpeTokenizer from_json(std::string_view text);
  void save(const std::string& path) const;
  static BpeTokenizer load(const std::string& path);

 private:
  struct Merge {
    Symbol left, right, result;
  };

  BpeTokenizer();
  void add_merge(Symbol left, Symbol right);
  void encode_chunk(std::string_view chunk, SymbolString& out) const;

  Alphabet table_;
  AlphabetPtr alphabet_;
  std::vector<Merge> merges_;
  std::map<std::pair<Symbol, Symbol>, std::size_t> rank_;
};

std::vector<std::string_view> pretokenize(std::string_view text);

}  // namespace unitsurp
