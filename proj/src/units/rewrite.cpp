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

#include "unitsurp/units/rewrite.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <unordered_map>

#include "unitsurp/error.hpp"
#include "unitsurp/fst/operations.hpp"
#include "unitsurp/fst/regex.hpp"

namespace unitsurp {
namespace {

std::string_view trim_ws(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

class SubsetTable {
 public:
  int intern(const std::vector<int>& s) {
    auto [it, inserted] = ids_.try_emplace(s, static_cast<int>(items_.size()));
    if (inserted) items_.push_back(s);
    return it->second;
  }
  const std::vector<int>& get(int id) const { return items_[id]; }

 private:
  std::map<std::vector<int>, int> ids_;
  std::deque<std::vector<int>> items_;
};

bool contains(const std::vector<int>& v, int x) {
  return std::binary_search(v.begin(), v.end(), x);
}

std::vector<int> merge(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

void reject_symbol(const Nfa& nfa, std::size_t x, const std::string& what) {
  for (const auto& set : nfa.sets()) {
    if (set[x]) fail(ErrorCode::kRuleCompileError, what);
  }
}

struct Replacement {
  bool copy = false;
  SymbolString prefix;
  SymbolString suffix;
};

Replacement parse_replacement(std::string_view text, const Alphabet& out) {
  Replacement r;
  const auto pos = text.find("$0");
  if (pos == std::string_view::npos) {
    r.suffix = parse_symbol_string(text, out);
    return r;
  }
  if (text.find("$0", pos + 2) != std::string_view::npos) {
    fail(ErrorCode::kRuleCompileError, "replacement uses $0 more than once");
  }
  r.copy = true;
  r.prefix = parse_symbol_string(text.substr(0, pos), out);
  r.suffix = parse_symbol_string(text.substr(pos + 2), out);
  return r;
}

struct CompilerState {
  int l, m, x, r, n;
  auto operator<=>(const CompilerState&) const = default;
};

}  // namespace

RewriteRule parse_rule(std::string_view line) {
  const auto arrow = line.find("->");
  if (arrow == std::string_view::npos) {
    fail(ErrorCode::kRuleCompileError, "missing '->' in rule '" + std::string(line) + "'");
  }
  RewriteRule rule;
  rule.pattern = std::string(trim_ws(line.substr(0, arrow)));
  std::string_view rest = line.substr(arrow + 2);
  const auto slash = rest.find(" / ");
  if (slash != std::string_view::npos) {
    std::string_view ctx = rest.substr(slash + 3);
    rest = rest.substr(0, slash);
    const auto gap = ctx.find("__");
    if (gap == std::string_view::npos) {
      fail(ErrorCode::kRuleCompileError, "context without '__' in '" + std::string(line) + "'");
    }
    rule.left = std::string(trim_ws(ctx.substr(0, gap)));
    rule.right = std::string(trim_ws(ctx.substr(gap + 2)));
  }
  rule.replacement = std::string(trim_ws(rest));
  if (rule.pattern.empty()) fail(ErrorCode::kRuleCompileError, "empty pattern");
  return rule;
}

std::vector<RewriteRule> parse_rules(std::string_view text) {
  std::vector<RewriteRule> rules;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim_ws(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    rules.push_back(parse_rule(line));
  }
  return rules;
}

std::string format_rule(const RewriteRule& rule) {
  std::string s = rule.pattern + " -> " + rule.replacement;
  if (!rule.left.empty() || !rule.right.empty()) {
    s += " / " + rule.left + " __ " + rule.right;
  }
  return s;
}

Transducer compile_rule(const RewriteRule& rule, AlphabetPtr in, AlphabetPtr out) {
  const auto n = static_cast<int>(in->size());
  const Nfa left = Nfa::parse(rule.left, *in);
  const Nfa pat = Nfa::parse(rule.pattern, *in);
  const Nfa right = Nfa::parse(rule.right, *in);
  reject_symbol(pat, pat.bos(), "pattern may not use ^");
  reject_symbol(pat, pat.eos(), "pattern may not use $");
  reject_symbol(right, right.bos(), "right context may not use ^");
  reject_symbol(left, left.eos(), "left context may not use $");
  const Replacement rep = parse_replacement(rule.replacement, *out);

  std::vector<Symbol> copy_out(n);
  for (Symbol x = 0; x < n; ++x) {
    auto t = out->find(in->label(x));
    if (!t) fail(ErrorCode::kAlphabetMismatch, "output alphabet lacks '" + in->label(x) + "'");
    copy_out[x] = *t;
  }

  // Pattern followed by right context; the junction edge is blocked while a
  // subset only tracks the pattern.
  Nfa pr = pat;
  const int p_accept = pat.accept();
  const int junction = pr.append(right);
  const int pr_accept = pr.accept();
  auto close_p = [&](std::vector<int> s) { return pr.closure(std::move(s), p_accept, junction); };
  auto close_full = [&](std::vector<int> s) { return pr.closure(std::move(s)); };
  const std::vector<int> p_start = close_p({pr.start()});

  const SymbolClasses classes = SymbolClasses::refine({&left, &pr}, pr.extended_size());
  const int bos = static_cast<int>(pr.bos());
  const int eos = static_cast<int>(pr.eos());

  auto left_step = [&](const std::vector<int>& s, int x) {
    auto t = left.step(s, x);
    t.push_back(left.start());
    return left.closure(std::move(t));
  };
  auto right_step = [&](const std::vector<int>& s, int x) {
    return right.closure(right.step(s, x));
  };
  const std::vector<int> right_start = right.closure({right.start()});
  const bool right_trivial = contains(right_start, right.accept());

  SubsetTable lsets, psets, rsets, obligations, nsets;
  const int empty_n = nsets.intern({});
  const int no_obligations = obligations.intern({});

  TransducerBuilder b(in, out);
  std::map<CompilerState, StateId> ids;
  std::vector<CompilerState> states;
  std::deque<StateId> queue;
  auto get = [&](const CompilerState& cs) {
    auto [it, inserted] = ids.try_emplace(cs, static_cast<StateId>(states.size()));
    if (inserted) {
      states.push_back(cs);
      b.add_state();
      queue.push_back(it->second);
    }
    return it->second;
  };

  const int l0 = lsets.intern(left_step(left.closure({left.start()}), bos));
  b.add_initial(get({l0, -1, -1, no_obligations, empty_n}));

  struct Option {
    CompilerState dst;
    bool copy_symbol;
    const SymbolString* before;
    const SymbolString* after;
  };
  const SymbolString none;
  const SymbolString& start_out = rep.prefix;
  const SymbolString& end_out = rep.suffix;

  while (!queue.empty()) {
    const StateId id = queue.front();
    queue.pop_front();
    const CompilerState cs = states[id];
    const std::vector<int> lset = lsets.get(cs.l);
    const bool left_ok = contains(lset, left.accept());
    const std::vector<int> nset = nsets.get(cs.n);

    // Acceptance at the end of input.
    if (cs.m < 0) {
      bool ok = !contains(close_full(pr.step(nset, eos)), pr_accept);
      for (int o : obligations.get(cs.r)) {
        ok = ok && contains(right_step(rsets.get(o), eos), right.accept());
      }
      if (ok) b.set_final(id);
    }

    for (std::size_t c = 0; c < classes.size(); ++c) {
      const int x = classes.representative[c];
      bool has_real = false;
      for (int member : classes.members[c]) has_real = has_real || member < n;
      if (!has_real) continue;

      const int l2 = lsets.intern(left_step(lset, x));
      std::vector<int> r2;
      bool dead = false;
      for (int o : obligations.get(cs.r)) {
        auto t = right_step(rsets.get(o), x);
        if (t.empty()) {
          dead = true;
          break;
        }
        if (!contains(t, right.accept())) r2.push_back(rsets.intern(t));
      }
      if (dead) continue;
      std::vector<int> nbase = pr.step(nset, x);
      if (cs.x >= 0) nbase = merge(nbase, pr.step(psets.get(cs.x), x));
      nbase = close_full(std::move(nbase));
      if (contains(nbase, pr_accept)) continue;
      auto with_new_obligation = [&]() {
        std::vector<int> r3 = r2;
        if (!right_trivial) r3.push_back(rsets.intern(right_start));
        std::sort(r3.begin(), r3.end());
        r3.erase(std::unique(r3.begin(), r3.end()), r3.end());
        return obligations.intern(r3);
      };
      std::sort(r2.begin(), r2.end());
      r2.erase(std::unique(r2.begin(), r2.end()), r2.end());
      const int r2_id = obligations.intern(r2);
      const int nbase_id = nsets.intern(nbase);

      std::vector<Option> options;
      std::vector<int> matched;
      if (cs.m < 0) {
        std::vector<int> n1 = nbase;
        if (left_ok) n1 = close_full(merge(n1, pr.step(p_start, x)));
        if (!contains(n1, pr_accept)) {
          options.push_back({{l2, -1, -1, r2_id, nsets.intern(n1)}, true, &none, &none});
        }
        if (left_ok) matched = close_p(pr.step(p_start, x));
      } else {
        matched = close_p(pr.step(psets.get(cs.m), x));
      }
      if (!matched.empty()) {
        const int mid = psets.intern(matched);
        const SymbolString* before = cs.m < 0 ? &start_out : &none;
        options.push_back({{l2, mid, -1, r2_id, nbase_id}, rep.copy, before, &none});
        if (contains(matched, p_accept)) {
          options.push_back(
              {{l2, -1, mid, with_new_obligation(), nbase_id}, rep.copy, before, &end_out});
        }
      }
      for (const auto& opt : options) {
        const StateId dst = get(opt.dst);
        for (int member : classes.members[c]) {
          if (member >= n) continue;
          SymbolString o = *opt.before;
          if (opt.copy_symbol) o.push_back(copy_out[member]);
          o.insert(o.end(), opt.after->begin(), opt.after->end());
          b.add_arc(id, member, std::move(o), dst);
        }
      }
    }
  }
  return minimize(trim(std::move(b).build()));
}

Transducer compose_rules(const std::vector<RewriteRule>& rules, AlphabetPtr in,
                         AlphabetPtr out) {
  if (rules.empty()) return identity(in, out);
  Transducer f = compile_rule(rules[0], in, out);
  for (std::size_t i = 1; i < rules.size(); ++i) {
    f = minimize(compose(f, compile_rule(rules[i], out, out)));
  }
  return f;
}

std::string_view default_rules_text() {
  return R"(# comma or colon, unless a digit follows
[,:] -> <sep>$0<sep> / __ [^0-9]|$
# period ending the text, possibly before closing quotes or brackets
\. -> <sep>$0<sep> / __ [\s"')\]]*$
# contractions
n't|N'T -> <sep>$0 / [A-Za-z] __ [^A-Za-z]|$
's|'re|'ve|'ll|'d|'m|'S|'RE|'VE|'LL|'D|'M -> <sep>$0 / [A-Za-z] __ [^A-Za-z]|$
# double quotes and brackets
" -> <sep>$0<sep>
[()\[\]{}] -> <sep>$0<sep>
[;@#$%&?!] -> <sep>$0<sep>
)";
}

const std::vector<RewriteRule>& default_rules() {
  static const std::vector<RewriteRule> rules = parse_rules(default_rules_text());
  return rules;
}

}  // namespace unitsurp
