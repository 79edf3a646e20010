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

#include "unitsurp/fst/alphabet.hpp"

#include <cstdio>

#include "unitsurp/error.hpp"

namespace unitsurp {

Symbol Alphabet::add(std::string label, std::string spelling) {
  if (label.empty() || label == kEpsLabel) {
    fail(ErrorCode::kInvalidArgument, "invalid symbol label '" + label + "'");
  }
  if (index_.count(label)) {
    fail(ErrorCode::kInvalidArgument, "duplicate symbol label '" + label + "'");
  }
  const Symbol id = static_cast<Symbol>(labels_.size());
  if (label == kSepLabel) sep_ = id;
  if (label == kEosLabel) eos_ = id;
  if (spelling.size() == 1) {
    auto b = static_cast<unsigned char>(spelling[0]);
    if (byte_symbol_[b] == kNoSymbol) byte_symbol_[b] = id;
  }
  index_.emplace(label, id);
  labels_.push_back(std::move(label));
  spellings_.push_back(std::move(spelling));
  return id;
}

Symbol Alphabet::add_sep() { return add(std::string(kSepLabel), ""); }
Symbol Alphabet::add_eos() { return add(std::string(kEosLabel), ""); }

const std::string& Alphabet::label(Symbol s) const {
  if (!contains(s)) fail(ErrorCode::kUnknownSymbol, std::to_string(s));
  return labels_[s];
}

const std::string& Alphabet::spelling(Symbol s) const {
  if (!contains(s)) fail(ErrorCode::kUnknownSymbol, std::to_string(s));
  return spellings_[s];
}

std::optional<Symbol> Alphabet::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Symbol Alphabet::at(std::string_view label) const {
  auto s = find(label);
  if (!s) fail(ErrorCode::kUnknownSymbol, "'" + std::string(label) + "'");
  return *s;
}

std::vector<Symbol> Alphabet::encode_bytes(std::string_view text) const {
  std::vector<Symbol> out;
  out.reserve(text.size());
  for (char c : text) {
    const Symbol s = byte_symbol_[static_cast<unsigned char>(c)];
    if (s == kNoSymbol) {
      fail(ErrorCode::kUnknownSymbol,
           "byte " + byte_label(static_cast<unsigned char>(c)) +
               " has no symbol");
    }
    out.push_back(s);
  }
  return out;
}

std::string Alphabet::spell(const std::vector<Symbol>& symbols) const {
  std::string out;
  for (Symbol s : symbols) out += spelling(s);
  return out;
}

std::string Alphabet::labels_of(const std::vector<Symbol>& symbols,
                                std::string_view joiner) const {
  std::string out;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i) out += joiner;
    out += label(symbols[i]);
  }
  return out;
}

Alphabet Alphabet::bytes(bool with_sep) {
  Alphabet a;
  for (int b = 0; b < 256; ++b) {
    a.add(byte_label(static_cast<unsigned char>(b)),
          std::string(1, static_cast<char>(b)));
  }
  if (with_sep) a.add_sep();
  return a;
}

Alphabet Alphabet::from_labels(const std::vector<std::string>& labels) {
  Alphabet a;
  for (const auto& l : labels) {
    if (l == kSepLabel) {
      a.add_sep();
    } else if (l == kEosLabel) {
      a.add_eos();
    } else {
      a.add(l, unescape(l));
    }
  }
  return a;
}

std::string Alphabet::byte_label(unsigned char b) {
  if (b > 0x20 && b < 0x7f && b != '\\') return std::string(1, static_cast<char>(b));
  char buf[8];
  std::snprintf(buf, sizeof buf, "\\x%02X", b);
  return buf;
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string Alphabet::unescape(std::string_view label) {
  if (label == kSepLabel || label == kEosLabel || label == kEpsLabel) return "";
  std::string out;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] == '\\' && i + 3 < label.size() && label[i + 1] == 'x' &&
        hex_value(label[i + 2]) >= 0 && hex_value(label[i + 3]) >= 0) {
      out += static_cast<char>(hex_value(label[i + 2]) * 16 +
                               hex_value(label[i + 3]));
      i += 3;
    } else {
      out += label[i];
    }
  }
  return out;
}

}  // namespace unitsurp
