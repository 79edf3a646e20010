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

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "unitsurp/fst/transducer.hpp"
#include "unitsurp/units/delimiter.hpp"
#include "unitsurp/units/hcode.hpp"
#include "unitsurp/units/rewrite.hpp"

namespace unitsurp {

enum class InventoryKind { kTokens, kCharacters, kAcontextual, kContextual };

InventoryKind parse_inventory_kind(std::string_view name);
std::string_view inventory_kind_name(InventoryKind kind);

struct UnitInventorySpec {
  InventoryKind kind = InventoryKind::kAcontextual;
  // Raw delimiter bytes, one per entry.
  std::vector<std::string> delimiters{" "};
  Attribution attribution = Attribution::kLeading;
  std::vector<RewriteRule> rules;

  // Throws InvalidArgument when the invariants of the kind do not hold.
  void validate() const;
  std::string name() const;

  // {"kind": ..., "delimiters": [...], "attribution": ..., "rules": [...]}.
  // "rules" is a list of {pattern, replacement, left, right} objects, the
  // string "default", or a DSL text under "rules_text".
  static UnitInventorySpec from_json(std::string_view text);
  std::string to_json() const;
};

// A compiled unit parser rho with its SEP encoding. Immutable.
class UnitParser {
 public:
  // Machine over raw bytes.
  static UnitParser compile(const UnitInventorySpec& spec);
  // The same inventory read from a token alphabet whose spellings are bytes.
  // For the tokens kind every token is a unit.
  static UnitParser compile_for_tokens(const UnitInventorySpec& spec, AlphabetPtr tokens);

  const UnitInventorySpec& spec() const { return spec_; }
  const Transducer& fst() const { return *fst_; }
  std::shared_ptr<const Transducer> fst_ptr() const { return fst_; }
  const Alphabet& input_alphabet() const { return fst_->input_alphabet(); }
  const Alphabet& output_alphabet() const { return fst_->output_alphabet(); }
  Symbol sep() const { return *fst_->output_alphabet().sep(); }

  SymbolString transduce(const SymbolString& sigma) const;
  UnitString segment(const SymbolString& sigma) const;
  // Byte-level input only.
  std::vector<std::string> segment_text(std::string_view text) const;
  std::string unit_text(const Unit& u) const { return output_alphabet().spell(u); }

  // Encodes a unit spelling over the output alphabet (bytes or tokens).
  Unit encode_unit(std::string_view spelling) const;

 private:
  UnitParser(UnitInventorySpec spec, std::shared_ptr<const Transducer> fst, bool token_units)
      : spec_(std::move(spec)), fst_(std::move(fst)), token_units_(token_units) {}

  UnitInventorySpec spec_;
  std::shared_ptr<const Transducer> fst_;
  bool token_units_ = false;
};

// Byte-level machine for a spec.
Transducer build_inventory_fst(const UnitInventorySpec& spec);

// Whitespace bytes absorbed around contextual units.
const std::vector<unsigned char>& whitespace_bytes();

}  // namespace unitsurp
