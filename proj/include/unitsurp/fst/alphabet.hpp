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

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace unitsurp {

using Symbol = std::int32_t;

inline constexpr Symbol kEpsilon = -1;
inline constexpr Symbol kNoSymbol = -2;

inline constexpr std::string_view kSepLabel = "<sep>";
inline constexpr std::string_view kEosLabel = "<eos>";
inline constexpr std::string_view kEpsLabel = "<eps>";

// Dense symbol table. Every symbol has a printable label (used in files) and
// a spelling, the raw bytes it stands for. SEP and EOS spell as nothing.
class Alphabet {
 public:
  Alphabet() { byte_symbol_.fill(kNoSymbol); }

  Symbol add(std::string label, std::string spelling);
  Symbol add(std::string label) {
    std::string spelling = label;
    return add(std::move(label), std::move(spelling));
  }
  Symbol add_sep();
  Symbol add_eos();

  std::size_t size() const { return labels_.size(); }
  bool contains(Symbol s) const {
    return s >= 0 && static_cast<std::size_t>(s) < labels_.size();
  }
  const std::string& label(Symbol s) const;
  const std::string& spelling(Symbol s) const;

  std::optional<Symbol> find(std::string_view label) const;
  // Throws UnknownSymbol.
  Symbol at(std::string_view label) const;

  std::optional<Symbol> sep() const { return sep_; }
  std::optional<Symbol> eos() const { return eos_; }
  bool is_sep(Symbol s) const { return sep_ && *sep_ == s; }

  // Symbol whose spelling is exactly this single byte, if any.
  Symbol byte_symbol(unsigned char b) const { return byte_symbol_[b]; }

  // Encodes raw text one byte per symbol. Throws UnknownSymbol.
  std::vector<Symbol> encode_bytes(std::string_view text) const;
  std::string spell(const std::vector<Symbol>& symbols) const;
  std::string labels_of(const std::vector<Symbol>& symbols,
                        std::string_view joiner = " ") const;

  bool operator==(const Alphabet& other) const {
    return labels_ == other.labels_;
  }

  // 256 byte symbols with ids equal to byte values, optionally followed by SEP.
  static Alphabet bytes(bool with_sep);
  static Alphabet from_labels(const std::vector<std::string>& labels);

  // Label for a byte: the character itself when printable ASCII other than space
  // and backslash, else \xNN.
  static std::string byte_label(unsigned char b);
  // Inverse of the escaping used in labels. Reserved labels decode to "".
  static std::string unescape(std::string_view label);

 private:
  std::vector<std::string> labels_;
  std::vector<std::string> spellings_;
  std::unordered_map<std::string, Symbol> index_;
  std::array<Symbol, 256> byte_symbol_;
  std::optional<Symbol> sep_;
  std::optional<Symbol> eos_;
};

using AlphabetPtr = std::shared_ptr<const Alphabet>;

inline AlphabetPtr make_alphabet(Alphabet a) {
  return std::make_shared<const Alphabet>(std::move(a));
}

}  // namespace unitsurp
