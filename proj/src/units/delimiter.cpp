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

#include "unitsurp/units/delimiter.hpp"

#include <algorithm>

#include "unitsurp/error.hpp"
#include "unitsurp/fst/operations.hpp"

namespace unitsurp {
namespace {

std::vector<Symbol> output_map(const Alphabet& in, const Alphabet& out) {
  std::vector<Symbol> m(in.size());
  for (std::size_t s = 0; s < in.size(); ++s) {
    auto t = out.find(in.label(static_cast<Symbol>(s)));
    if (!t) {
      fail(ErrorCode::kAlphabetMismatch,
           "output alphabet lacks '" + in.label(static_cast<Symbol>(s)) + "'");
    }
    m[s] = *t;
  }
  return m;
}

Symbol require_sep(const Alphabet& out) {
  auto sep = out.sep();
  if (!sep) fail(ErrorCode::kAlphabetMismatch, "output alphabet has no <sep>");
  return *sep;
}

}  // namespace

Attribution parse_attribution(std::string_view name) {
  if (name == "leading") return Attribution::kLeading;
  if (name == "trailing") return Attribution::kTrailing;
  if (name == "absorb") return Attribution::kAbsorb;
  if (name == "none") return Attribution::kNone;
  fail(ErrorCode::kInvalidArgument, "unknown attribution '" + std::string(name) + "'");
}

std::string_view attribution_name(Attribution a) {
  switch (a) {
    case Attribution::kLeading: return "leading";
    case Attribution::kTrailing: return "trailing";
    case Attribution::kAbsorb: return "absorb";
    case Attribution::kNone: return "none";
  }
  return "none";
}

Transducer delimiter_fst(AlphabetPtr in, AlphabetPtr out,
                         const std::vector<Symbol>& delimiters, Attribution attribution) {
  if (delimiters.empty()) fail(ErrorCode::kEmptyDelimiterSet, "no delimiters given");
  const auto m = output_map(*in, *out);
  const Symbol sep = require_sep(*out);
  std::vector<char> is_delim(in->size(), 0);
  for (Symbol d : delimiters) {
    if (!in->contains(d)) fail(ErrorCode::kUnknownSymbol, "delimiter " + std::to_string(d));
    is_delim[d] = 1;
  }
  TransducerBuilder b(in, out);
  const StateId s = b.add_state();  // start
  const StateId w = b.add_state();  // inside a unit
  b.add_initial(s);
  b.set_final(s);
  b.set_final(w, {sep});
  switch (attribution) {
    case Attribution::kLeading:
      for (Symbol x = 0; x < static_cast<Symbol>(in->size()); ++x) {
        b.add_arc(s, x, m[x], w);
        if (is_delim[x]) {
          b.add_arc(w, x, SymbolString{sep, m[x]}, w);
        } else {
          b.add_arc(w, x, m[x], w);
        }
      }
      break;
    case Attribution::kTrailing: {
      const StateId d = b.add_state();  // after a delimiter
      b.set_final(d, {sep});
      for (Symbol x = 0; x < static_cast<Symbol>(in->size()); ++x) {
        if (is_delim[x]) {
          b.add_arc(s, x, m[x], d);
          b.add_arc(w, x, m[x], d);
          b.add_arc(d, x, m[x], d);
        } else {
          b.add_arc(s, x, m[x], w);
          b.add_arc(w, x, m[x], w);
          b.add_arc(d, x, SymbolString{sep, m[x]}, w);
        }
      }
      break;
    }
    case Attribution::kAbsorb: {
      const StateId d = b.add_state();  // boundary already written
      b.set_final(d);
      for (Symbol x = 0; x < static_cast<Symbol>(in->size()); ++x) {
        if (is_delim[x]) {
          b.add_arc(s, x, kEpsilon, s);
          b.add_arc(w, x, sep, d);
          b.add_arc(d, x, kEpsilon, d);
        } else {
          b.add_arc(s, x, m[x], w);
          b.add_arc(w, x, m[x], w);
          b.add_arc(d, x, m[x], w);
        }
      }
      break;
    }
    case Attribution::kNone:
      fail(ErrorCode::kInvalidArgument, "delimiter machines need an attribution");
  }
  return std::move(b).build();
}

Transducer utf8_char_fst(AlphabetPtr in, AlphabetPtr out, const std::vector<Symbol>& drop) {
  const auto m = output_map(*in, *out);
  const Symbol sep = require_sep(*out);
  std::vector<char> dropped(in->size(), 0);
  for (Symbol d : drop) dropped[d] = 1;
  TransducerBuilder b(in, out);
  const StateId start = b.add_state();
  StateId pending[4] = {start, b.add_state(), b.add_state(), b.add_state()};
  b.add_initial(start);
  b.set_final(start);
  for (int k = 1; k <= 3; ++k) b.set_final(pending[k], {sep});

  auto byte_of = [&](Symbol x) -> int {
    const auto& sp = in->spelling(x);
    return sp.size() == 1 ? static_cast<unsigned char>(sp[0]) : -1;
  };
  // How reading x from the start state behaves.
  auto from_start = [&](Symbol x, SymbolString& o, StateId& dst) {
    const int v = byte_of(x);
    o.clear();
    if (dropped[x]) {
      dst = start;
      return;
    }
    o.push_back(m[x]);
    int need = 0;
    if (v >= 0xC2 && v <= 0xDF) need = 1;
    else if (v >= 0xE0 && v <= 0xEF) need = 2;
    else if (v >= 0xF0 && v <= 0xF4) need = 3;
    if (need == 0) {
      o.push_back(sep);
      dst = start;
    } else {
      dst = pending[need];
    }
  };
  for (Symbol x = 0; x < static_cast<Symbol>(in->size()); ++x) {
    SymbolString o;
    StateId dst;
    from_start(x, o, dst);
    b.add_arc(start, x, o, dst);
    const int v = byte_of(x);
    const bool continuation = v >= 0x80 && v <= 0xBF && !dropped[x];
    for (int k = 1; k <= 3; ++k) {
      if (continuation) {
        if (k == 1) {
          b.add_arc(pending[k], x, SymbolString{m[x], sep}, start);
        } else {
          b.add_arc(pending[k], x, m[x], pending[k - 1]);
        }
      } else {
        SymbolString o2{sep};
        o2.insert(o2.end(), o.begin(), o.end());
        b.add_arc(pending[k], x, o2, dst);
      }
    }
  }
  return trim(std::move(b).build());
}

Transducer spelling_fst(AlphabetPtr tokens, AlphabetPtr bytes) {
  TransducerBuilder b(tokens, bytes);
  const StateId q = b.add_state();
  b.add_initial(q);
  b.set_final(q);
  for (Symbol t = 0; t < static_cast<Symbol>(tokens->size()); ++t) {
    const auto& sp = tokens->spelling(t);
    if (sp.empty()) {
      fail(ErrorCode::kEmptySpelling, "token '" + tokens->label(t) + "' has no spelling");
    }
    b.add_arc(q, t, bytes->encode_bytes(sp), q);
  }
  return std::move(b).build();
}

Transducer char_fst(AlphabetPtr tokens, AlphabetPtr out) {
  auto bytes = make_alphabet(Alphabet::bytes(false));
  return minimize(compose(spelling_fst(tokens, bytes), utf8_char_fst(bytes, out)));
}

Transducer tokens_fst(AlphabetPtr in, AlphabetPtr out) {
  const auto m = output_map(*in, *out);
  const Symbol sep = require_sep(*out);
  TransducerBuilder b(in, out);
  const StateId q = b.add_state();
  b.add_initial(q);
  b.set_final(q);
  for (Symbol x = 0; x < static_cast<Symbol>(in->size()); ++x) {
    b.add_arc(q, x, SymbolString{m[x], sep}, q);
  }
  return std::move(b).build();
}

Alphabet with_sep(const Alphabet& a) {
  Alphabet out;
  for (std::size_t s = 0; s < a.size(); ++s) {
    out.add(a.label(static_cast<Symbol>(s)), a.spelling(static_cast<Symbol>(s)));
  }
  if (!out.sep()) out.add_sep();
  return out;
}

}  // namespace unitsurp
