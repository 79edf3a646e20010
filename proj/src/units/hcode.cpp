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

#include "unitsurp/units/hcode.hpp"

#include <algorithm>

#include "unitsurp/error.hpp"

namespace unitsurp {

SymbolString h_encode(const UnitString& units, Symbol sep) {
  SymbolString out;
  for (const auto& u : units) {
    if (std::find(u.begin(), u.end(), sep) != u.end()) {
      fail(ErrorCode::kInvalidArgument, "unit contains SEP");
    }
    out.insert(out.end(), u.begin(), u.end());
    out.push_back(sep);
  }
  return out;
}

SymbolString h_encode_onset(const UnitString& units, Symbol sep) {
  SymbolString out;
  for (const auto& u : units) {
    if (std::find(u.begin(), u.end(), sep) != u.end()) {
      fail(ErrorCode::kInvalidArgument, "unit contains SEP");
    }
    out.push_back(sep);
    out.insert(out.end(), u.begin(), u.end());
  }
  return out;
}

UnitString h_decode(const SymbolString& delta, Symbol sep, bool allow_empty) {
  UnitString units;
  Unit cur;
  for (Symbol s : delta) {
    if (s == sep) {
      if (cur.empty() && !allow_empty) {
        fail(ErrorCode::kEmptyUnit, "adjacent separators");
      }
      units.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(s);
    }
  }
  if (!cur.empty()) {
    fail(ErrorCode::kTrailingGarbage, "string does not end in a separator");
  }
  return units;
}

bool is_prefix(const SymbolString& prefix, const SymbolString& s) {
  return prefix.size() <= s.size() && std::equal(prefix.begin(), prefix.end(), s.begin());
}

std::vector<std::string> spell_units(const UnitString& units, const Alphabet& alpha) {
  std::vector<std::string> out;
  out.reserve(units.size());
  for (const auto& u : units) out.push_back(alpha.spell(u));
  return out;
}

}  // namespace unitsurp
