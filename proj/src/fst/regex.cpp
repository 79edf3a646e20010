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

#include "unitsurp/fst/regex.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "unitsurp/error.hpp"

namespace unitsurp {
namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_';
}

}  // namespace

class RegexParser {
 public:
  RegexParser(std::string_view pattern, const Alphabet& alphabet, Nfa& nfa)
      : p_(pattern), alpha_(alphabet), nfa_(nfa) {}

  void run() {
    auto [s, a] = parse_alt();
    if (pos_ != p_.size()) error("unexpected '" + std::string(1, p_[pos_]) + "'");
    nfa_.start_ = s;
    nfa_.accept_ = a;
  }

 private:
  using Frag = std::pair<int, int>;

  [[noreturn]] void error(const std::string& what) {
    fail(ErrorCode::kRuleCompileError, "regex '" + std::string(p_) + "' at offset " +
                                           std::to_string(pos_) + ": " + what);
  }

  bool at_end() const { return pos_ >= p_.size(); }
  char peek() const { return p_[pos_]; }
  bool starts_with(std::string_view s) const { return p_.substr(pos_).starts_with(s); }

  std::vector<char> new_set() { return std::vector<char>(nfa_.ext_, 0); }

  void add_byte(std::vector<char>& set, unsigned char b) {
    const Symbol s = alpha_.byte_symbol(b);
    if (s != kNoSymbol) set[s] = 1;
  }

  void add_byte_class(std::vector<char>& set, char kind) {
    for (int b = 0; b < 256; ++b) {
      const auto c = static_cast<unsigned char>(b);
      bool in = false;
      switch (kind) {
        case 'd': case 'D': in = c >= '0' && c <= '9'; break;
        case 's': case 'S': in = is_space_byte(c); break;
        case 'w': case 'W': in = is_word_byte(c); break;
      }
      if (kind == 'D' || kind == 'S' || kind == 'W') in = !in;
      if (in) add_byte(set, c);
    }
    if (kind == 'D' || kind == 'S' || kind == 'W') {
      // Negated escapes also cover symbols that are not single bytes.
      for (std::size_t s = 0; s < alpha_.size(); ++s) {
        if (alpha_.spelling(static_cast<Symbol>(s)).size() != 1) set[s] = 1;
      }
    }
  }

  Frag atom_set(std::vector<char> set) {
    const int s = nfa_.add_state();
    const int a = nfa_.add_state();
    nfa_.sets_.push_back(std::move(set));
    nfa_.states_[s].set = static_cast<int>(nfa_.sets_.size()) - 1;
    nfa_.states_[s].next = a;
    return {s, a};
  }

  Frag empty() {
    const int s = nfa_.add_state();
    const int a = nfa_.add_state();
    nfa_.states_[s].eps.push_back(a);
    return {s, a};
  }

  Frag parse_alt() {
    Frag left = parse_concat();
    while (!at_end() && peek() == '|') {
      ++pos_;
      Frag right = parse_concat();
      const int s = nfa_.add_state();
      const int a = nfa_.add_state();
      nfa_.states_[s].eps = {left.first, right.first};
      nfa_.states_[left.second].eps.push_back(a);
      nfa_.states_[right.second].eps.push_back(a);
      left = {s, a};
    }
    return left;
  }

  Frag parse_concat() {
    Frag acc = empty();
    while (!at_end() && peek() != '|' && peek() != ')') {
      Frag next = parse_repeat();
      nfa_.states_[acc.second].eps.push_back(next.first);
      acc.second = next.second;
    }
    return acc;
  }

  Frag parse_repeat() {
    Frag f = parse_atom();
    while (!at_end() && (peek() == '*' || peek() == '+' || peek() == '?')) {
      const char op = p_[pos_++];
      const int s = nfa_.add_state();
      const int a = nfa_.add_state();
      nfa_.states_[s].eps.push_back(f.first);
      nfa_.states_[f.second].eps.push_back(a);
      if (op == '*' || op == '?') nfa_.states_[s].eps.push_back(a);
      if (op == '*' || op == '+') nfa_.states_[f.second].eps.push_back(f.first);
      f = {s, a};
    }
    return f;
  }

  Frag parse_atom() {
    if (at_end()) error("unexpected end of pattern");
    const char c = peek();
    if (c == '(') {
      ++pos_;
      Frag f = parse_alt();
      if (at_end() || peek() != ')') error("missing ')'");
      ++pos_;
      return f;
    }
    if (c == '*' || c == '+' || c == '?') error("quantifier without operand");
    if (c == '[') return atom_set(parse_class());
    if (c == '.') {
      ++pos_;
      auto set = new_set();
      for (std::size_t s = 0; s < alpha_.size(); ++s) set[s] = 1;
      return atom_set(std::move(set));
    }
    if (c == '^' || c == '$') {
      ++pos_;
      auto set = new_set();
      set[c == '^' ? nfa_.bos() : nfa_.eos()] = 1;
      return atom_set(std::move(set));
    }
    if (starts_with(kSepLabel)) {
      pos_ += kSepLabel.size();
      auto set = new_set();
      if (auto s = alpha_.sep()) set[*s] = 1;
      return atom_set(std::move(set));
    }
    auto set = new_set();
    if (c == '\\') {
      parse_escape(set);
    } else {
      add_byte(set, static_cast<unsigned char>(c));
      ++pos_;
    }
    return atom_set(std::move(set));
  }

  // Consumes a backslash escape, adding its members to `set`. Returns the
  // byte value for single-byte escapes (usable as a range endpoint), else -1.
  int parse_escape(std::vector<char>& set) {
    ++pos_;
    if (at_end()) error("dangling backslash");
    const char e = p_[pos_++];
    switch (e) {
      case 'd': case 'D': case 's': case 'S': case 'w': case 'W':
        add_byte_class(set, e);
        return -1;
      case 'n': add_byte(set, '\n'); return '\n';
      case 't': add_byte(set, '\t'); return '\t';
      case 'r': add_byte(set, '\r'); return '\r';
      case 'x': {
        if (pos_ + 2 > p_.size() || hex_digit(p_[pos_]) < 0 ||
            hex_digit(p_[pos_ + 1]) < 0) {
          error("bad \\x escape");
        }
        const int b = hex_digit(p_[pos_]) * 16 + hex_digit(p_[pos_ + 1]);
        pos_ += 2;
        add_byte(set, static_cast<unsigned char>(b));
        return b;
      }
      default:
        add_byte(set, static_cast<unsigned char>(e));
        return static_cast<unsigned char>(e);
    }
  }

  std::vector<char> parse_class() {
    ++pos_;  // '['
    bool negate = false;
    if (!at_end() && peek() == '^') {
      negate = true;
      ++pos_;
    }
    auto set = new_set();
    bool first = true;
    while (true) {
      if (at_end()) error("missing ']'");
      if (peek() == ']' && !first) {
        ++pos_;
        break;
      }
      first = false;
      if (starts_with(kSepLabel)) {
        pos_ += kSepLabel.size();
        if (auto s = alpha_.sep()) set[*s] = 1;
        continue;
      }
      int lo;
      if (peek() == '\\') {
        lo = parse_escape(set);
      } else {
        lo = static_cast<unsigned char>(p_[pos_++]);
        add_byte(set, static_cast<unsigned char>(lo));
      }
      if (lo >= 0 && pos_ + 1 < p_.size() && peek() == '-' && p_[pos_ + 1] != ']') {
        ++pos_;
        int hi;
        if (peek() == '\\') {
          auto scratch = new_set();
          hi = parse_escape(scratch);
          if (hi < 0) error("class escape as range endpoint");
        } else {
          hi = static_cast<unsigned char>(p_[pos_++]);
        }
        if (hi < lo) error("reversed range");
        for (int b = lo; b <= hi; ++b) add_byte(set, static_cast<unsigned char>(b));
      }
    }
    if (negate) {
      for (std::size_t s = 0; s < alpha_.size(); ++s) set[s] = !set[s];
      set[nfa_.bos()] = 0;
      set[nfa_.eos()] = 0;
    }
    return set;
  }

  std::string_view p_;
  const Alphabet& alpha_;
  Nfa& nfa_;
  std::size_t pos_ = 0;
};

Nfa Nfa::parse(std::string_view pattern, const Alphabet& alphabet) {
  Nfa nfa;
  nfa.ext_ = alphabet.size() + 2;
  RegexParser(pattern, alphabet, nfa).run();
  return nfa;
}

Nfa Nfa::empty_string(const Alphabet& alphabet) { return parse("", alphabet); }

bool Nfa::matches_empty() const {
  auto c = closure({start_});
  return std::find(c.begin(), c.end(), accept_) != c.end();
}

int Nfa::append(const Nfa& other) {
  const int offset = static_cast<int>(states_.size());
  const int set_offset = static_cast<int>(sets_.size());
  for (const auto& s : other.states_) {
    State t = s;
    for (int& e : t.eps) e += offset;
    if (t.set >= 0) t.set += set_offset;
    if (t.next >= 0) t.next += offset;
    states_.push_back(std::move(t));
  }
  sets_.insert(sets_.end(), other.sets_.begin(), other.sets_.end());
  const int junction = other.start_ + offset;
  states_[accept_].eps.push_back(junction);
  accept_ = other.accept_ + offset;
  return junction;
}

std::vector<int> Nfa::closure(std::vector<int> states, int blocked_from,
                              int blocked_to) const {
  std::vector<char> seen(states_.size(), 0);
  std::vector<int> out;
  for (int s : states) {
    if (!seen[s]) {
      seen[s] = 1;
      out.push_back(s);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int s = out[i];
    for (int t : states_[s].eps) {
      if (s == blocked_from && t == blocked_to) continue;
      if (!seen[t]) {
        seen[t] = 1;
        out.push_back(t);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> Nfa::step(const std::vector<int>& states, int x) const {
  std::vector<int> out;
  for (int s : states) {
    const auto& st = states_[s];
    if (st.set >= 0 && sets_[st.set][x]) out.push_back(st.next);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SymbolClasses SymbolClasses::refine(const std::vector<const Nfa*>& nfas,
                                    std::size_t extended_size) {
  SymbolClasses c;
  c.class_of.assign(extended_size, 0);
  std::map<std::vector<char>, int> sig_ids;
  for (std::size_t x = 0; x < extended_size; ++x) {
    std::vector<char> sig;
    for (const Nfa* n : nfas) {
      for (const auto& set : n->sets()) sig.push_back(set[x]);
    }
    auto [it, inserted] = sig_ids.try_emplace(sig, static_cast<int>(c.representative.size()));
    if (inserted) {
      c.representative.push_back(static_cast<int>(x));
      c.members.emplace_back();
    }
    c.class_of[x] = it->second;
    c.members[it->second].push_back(static_cast<int>(x));
  }
  return c;
}

std::vector<Symbol> parse_symbol_string(std::string_view text,
                                        const Alphabet& alphabet) {
  std::vector<Symbol> out;
  auto push_byte = [&](unsigned char b) {
    const Symbol s = alphabet.byte_symbol(b);
    if (s == kNoSymbol) {
      fail(ErrorCode::kRuleCompileError,
           "byte " + Alphabet::byte_label(b) + " is not an output symbol");
    }
    out.push_back(s);
  };
  for (std::size_t i = 0; i < text.size();) {
    if (text.substr(i).starts_with(kSepLabel)) {
      auto s = alphabet.sep();
      if (!s) fail(ErrorCode::kRuleCompileError, "output alphabet has no <sep>");
      out.push_back(*s);
      i += kSepLabel.size();
    } else if (text[i] == '\\' && i + 1 < text.size()) {
      const char e = text[i + 1];
      if (e == 'x' && i + 3 < text.size() && hex_digit(text[i + 2]) >= 0 &&
          hex_digit(text[i + 3]) >= 0) {
        push_byte(static_cast<unsigned char>(hex_digit(text[i + 2]) * 16 +
                                             hex_digit(text[i + 3])));
        i += 4;
      } else {
        push_byte(e == 'n' ? '\n' : e == 't' ? '\t' : static_cast<unsigned char>(e));
        i += 2;
      }
    } else {
      push_byte(static_cast<unsigned char>(text[i]));
      ++i;
    }
  }
  return out;
}

}  // namespace unitsurp
