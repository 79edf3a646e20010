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

#include "unitsurp/fst/operations.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "unitsurp/error.hpp"

namespace unitsurp {
namespace {

struct VecHash {
  std::size_t operator()(const std::vector<StateId>& v) const {
    std::size_t h = 1469598103934665603ULL;
    for (StateId x : v) {
      h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

std::uint64_t pack(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

// Output strings shared as a trie so identical outputs get identical ids.
class OutputTrie {
 public:
  OutputTrie() { nodes_.push_back({-1, kNoSymbol}); }

  int extend(int node, Symbol s) {
    const std::uint64_t key = pack(static_cast<std::uint32_t>(node),
                                   static_cast<std::uint32_t>(s));
    auto [it, inserted] = child_.try_emplace(key, static_cast<int>(nodes_.size()));
    if (inserted) nodes_.push_back({node, s});
    return it->second;
  }
  int extend(int node, const SymbolString& s) {
    for (Symbol x : s) node = extend(node, x);
    return node;
  }
  SymbolString get(int node) const {
    SymbolString out;
    for (; node > 0; node = nodes_[node].first) out.push_back(nodes_[node].second);
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  std::vector<std::pair<int, Symbol>> nodes_;
  std::unordered_map<std::uint64_t, int> child_;
};

std::vector<Symbol> label_map(const Alphabet& from, const Alphabet& to) {
  std::vector<Symbol> m(from.size(), kNoSymbol);
  for (std::size_t s = 0; s < from.size(); ++s) {
    if (auto t = to.find(from.label(static_cast<Symbol>(s)))) m[s] = *t;
  }
  return m;
}

// Final outputs become epsilon-input arcs into one fresh final state.
Transducer expand_final_outputs(const Transducer& f) {
  TransducerBuilder b(f.input_alphabet_ptr(), f.output_alphabet_ptr());
  b.ensure_states(f.num_states());
  StateId sink = kNoState;
  for (StateId q = 0; q < static_cast<StateId>(f.num_states()); ++q) {
    for (const auto& a : f.arcs(q)) b.add_arc(q, a.in, a.out, a.dst);
    if (!f.is_final(q)) continue;
    if (f.final_output(q).empty()) {
      b.set_final(q);
    } else {
      if (sink == kNoState) {
        sink = b.add_state();
        b.set_final(sink);
      }
      b.add_arc(q, kEpsilon, f.final_output(q), sink);
    }
  }
  for (StateId q : f.initials()) b.add_initial(q);
  return std::move(b).build();
}

std::vector<StateId> input_eps_closure(const Transducer& f, StateId q) {
  std::vector<StateId> stack{q}, seen{q};
  while (!stack.empty()) {
    StateId s = stack.back();
    stack.pop_back();
    for (const auto& a : f.arcs(s)) {
      if (a.in == kEpsilon &&
          std::find(seen.begin(), seen.end(), a.dst) == seen.end()) {
        seen.push_back(a.dst);
        stack.push_back(a.dst);
      }
    }
  }
  std::sort(seen.begin(), seen.end());
  return seen;
}

}  // namespace

Transducer identity(AlphabetPtr alpha) { return identity(alpha, alpha); }

Transducer identity(AlphabetPtr in, AlphabetPtr out) {
  const auto m = label_map(*in, *out);
  TransducerBuilder b(in, out);
  const StateId q = b.add_state();
  for (std::size_t s = 0; s < in->size(); ++s) {
    if (m[s] == kNoSymbol) {
      fail(ErrorCode::kAlphabetMismatch,
           "output alphabet lacks '" + in->label(static_cast<Symbol>(s)) + "'");
    }
    b.add_arc(q, static_cast<Symbol>(s), m[s], q);
  }
  b.add_initial(q);
  b.set_final(q);
  return std::move(b).build();
}

Transducer compose(const Transducer& f_in, const Transducer& g_in) {
  const auto& g_alpha = g_in.input_alphabet();
  const auto& f_out = f_in.output_alphabet();
  for (std::size_t s = 0; s < g_alpha.size(); ++s) {
    if (!f_out.find(g_alpha.label(static_cast<Symbol>(s)))) {
      fail(ErrorCode::kAlphabetMismatch,
           "symbol '" + g_alpha.label(static_cast<Symbol>(s)) +
               "' of the second machine is not an output of the first");
    }
  }
  const Transducer f = normalize_single_output(expand_final_outputs(f_in));
  const Transducer& g = g_in;
  const auto to_g = label_map(f.output_alphabet(), g_alpha);

  // Per g-state arcs sorted by input symbol for matching.
  std::vector<std::vector<std::pair<Symbol, int>>> g_index(g.num_states());
  for (StateId q = 0; q < static_cast<StateId>(g.num_states()); ++q) {
    auto arcs = g.arcs(q);
    for (int i = 0; i < static_cast<int>(arcs.size()); ++i) {
      g_index[q].emplace_back(arcs[i].in, i);
    }
    std::sort(g_index[q].begin(), g_index[q].end());
  }

  TransducerBuilder b(f.input_alphabet_ptr(), g.output_alphabet_ptr());
  struct Triple {
    StateId qf, qg;
    int filter;
  };
  std::vector<Triple> states;
  std::unordered_map<std::uint64_t, StateId> ids;
  std::deque<StateId> queue;
  auto get = [&](StateId qf, StateId qg, int filter) {
    const std::uint64_t key =
        (static_cast<std::uint64_t>(qf) << 33) | (static_cast<std::uint64_t>(qg) << 1) |
        static_cast<std::uint64_t>(filter);
    auto [it, inserted] = ids.try_emplace(key, static_cast<StateId>(states.size()));
    if (inserted) {
      states.push_back({qf, qg, filter});
      b.add_state();
      queue.push_back(it->second);
    }
    return it->second;
  };
  for (StateId qf : f.initials()) {
    for (StateId qg : g.initials()) b.add_initial(get(qf, qg, 0));
  }
  while (!queue.empty()) {
    const StateId id = queue.front();
    queue.pop_front();
    const Triple t = states[id];
    for (const auto& a : f.arcs(t.qf)) {
      if (a.out.empty()) {
        if (t.filter == 0) b.add_arc(id, a.in, SymbolString{}, get(a.dst, t.qg, 0));
        continue;
      }
      const Symbol mid = to_g[a.out[0]];
      if (mid == kNoSymbol) continue;
      const auto& idx = g_index[t.qg];
      auto it = std::lower_bound(idx.begin(), idx.end(), std::make_pair(mid, -1));
      for (; it != idx.end() && it->first == mid; ++it) {
        const Arc& c = g.arcs(t.qg)[it->second];
        b.add_arc(id, a.in, c.out, get(a.dst, c.dst, 0));
      }
    }
    for (const auto& c : g.arcs(t.qg)) {
      if (c.in == kEpsilon) b.add_arc(id, kEpsilon, c.out, get(t.qf, c.dst, 1));
    }
    if (f.is_final(t.qf) && f.final_output(t.qf).empty() && g.is_final(t.qg)) {
      b.set_final(id, g.final_output(t.qg));
    }
  }
  return trim(remove_epsilon_epsilon(trim(std::move(b).build())));
}

std::vector<SymbolString> apply_all(const Transducer& f,
                                    const SymbolString& input,
                                    std::size_t limit) {
  for (Symbol x : input) {
    if (!f.input_alphabet().contains(x)) {
      fail(ErrorCode::kUnknownSymbol, "input symbol " + std::to_string(x));
    }
  }
  OutputTrie trie;
  std::vector<std::pair<StateId, int>> current;
  std::unordered_set<std::uint64_t> seen;
  const std::size_t depth_limit = f.num_states() + 1;

  auto close = [&](std::vector<std::pair<StateId, int>>& configs) {
    std::vector<std::pair<std::pair<StateId, int>, std::size_t>> stack;
    for (const auto& c : configs) stack.push_back({c, 0});
    while (!stack.empty()) {
      auto [c, depth] = stack.back();
      stack.pop_back();
      for (const auto& a : f.arcs(c.first)) {
        if (a.in != kEpsilon) continue;
        const int node = trie.extend(c.second, a.out);
        const std::uint64_t key = pack(static_cast<std::uint32_t>(a.dst),
                                       static_cast<std::uint32_t>(node));
        if (!seen.insert(key).second) continue;
        if (depth + 1 > depth_limit) {
          fail(ErrorCode::kAmbiguousOutput,
               "epsilon-input cycle with output yields unboundedly many outputs");
        }
        configs.push_back({a.dst, node});
        stack.push_back({{a.dst, node}, depth + 1});
      }
    }
  };

  for (StateId q : f.initials()) {
    if (seen.insert(pack(static_cast<std::uint32_t>(q), 0)).second) {
      current.push_back({q, 0});
    }
  }
  close(current);
  for (Symbol x : input) {
    std::vector<std::pair<StateId, int>> next;
    seen.clear();
    for (const auto& [q, node] : current) {
      for (const auto& a : f.arcs(q)) {
        if (a.in != x) continue;
        const int n2 = trie.extend(node, a.out);
        if (seen.insert(pack(static_cast<std::uint32_t>(a.dst),
                             static_cast<std::uint32_t>(n2)))
                .second) {
          next.push_back({a.dst, n2});
        }
      }
    }
    close(next);
    current = std::move(next);
    if (current.empty()) break;
  }
  std::set<SymbolString> outs;
  for (const auto& [q, node] : current) {
    if (!f.is_final(q)) continue;
    SymbolString o = trie.get(node);
    const auto& fo = f.final_output(q);
    o.insert(o.end(), fo.begin(), fo.end());
    outs.insert(std::move(o));
    if (outs.size() >= limit) break;
  }
  return {outs.begin(), outs.end()};
}

SymbolString apply_fst(const Transducer& f, const SymbolString& input) {
  auto outs = apply_all(f, input, 2);
  if (outs.empty()) {
    fail(ErrorCode::kNoPath, "input '" + f.input_alphabet().labels_of(input, " ") +
                                 "' is outside the domain");
  }
  if (outs.size() > 1) {
    fail(ErrorCode::kAmbiguousOutput,
         "input '" + f.input_alphabet().labels_of(input, " ") +
             "' has more than one output");
  }
  return outs.front();
}

Transducer input_project(const Transducer& f) {
  TransducerBuilder b(f.input_alphabet_ptr(), f.input_alphabet_ptr());
  b.ensure_states(f.num_states());
  for (StateId q = 0; q < static_cast<StateId>(f.num_states()); ++q) {
    for (const auto& a : f.arcs(q)) b.add_arc(q, a.in, a.in, a.dst);
    if (f.is_final(q)) b.set_final(q);
  }
  for (StateId q : f.initials()) b.add_initial(q);
  return std::move(b).build();
}

std::vector<StateId> universal_states(const Transducer& f) {
  const std::size_t n_in = f.input_alphabet().size();
  std::vector<StateId> out;
  std::vector<char> covered(n_in);
  for (StateId q = 0; q < static_cast<StateId>(f.num_states()); ++q) {
    std::fill(covered.begin(), covered.end(), 0);
    std::size_t count = 0;
    for (StateId s : input_eps_closure(f, q)) {
      for (const auto& a : f.arcs(s)) {
        if (a.in != kEpsilon && !covered[a.in]) {
          covered[a.in] = 1;
          ++count;
        }
      }
    }
    if (count == n_in) out.push_back(q);
  }
  return out;
}

std::vector<StateId> co_universal_states(const Transducer& f,
                                         std::size_t max_subsets) {
  const std::size_t n_in = f.input_alphabet().size();
  std::vector<std::vector<StateId>> closures(f.num_states());
  for (StateId q = 0; q < static_cast<StateId>(f.num_states()); ++q) {
    closures[q] = input_eps_closure(f, q);
  }
  std::unordered_map<std::vector<StateId>, int, VecHash> ids;
  std::vector<std::vector<StateId>> subsets;
  std::vector<std::vector<int>> preds;
  std::vector<char> bad;
  std::deque<int> queue;
  auto get = [&](std::vector<StateId> s) {
    auto [it, inserted] = ids.try_emplace(s, static_cast<int>(subsets.size()));
    if (inserted) {
      subsets.push_back(std::move(s));
      preds.emplace_back();
      bad.push_back(0);
      queue.push_back(it->second);
    }
    return it->second;
  };
  std::vector<int> singleton(f.num_states());
  for (StateId q = 0; q < static_cast<StateId>(f.num_states()); ++q) {
    singleton[q] = get(closures[q]);
  }
  std::vector<std::pair<Symbol, StateId>> moves;
  while (!queue.empty()) {
    const int id = queue.front();
    queue.pop_front();
    if (subsets.size() > max_subsets) {
      bad[id] = 1;
      continue;
    }
    const auto subset = subsets[id];
    bool accepting = false;
    moves.clear();
    for (StateId s : subset) {
      accepting = accepting || f.is_final(s);
      for (const auto& a : f.arcs(s)) {
        if (a.in != kEpsilon) moves.emplace_back(a.in, a.dst);
      }
    }
    std::sort(moves.begin(), moves.end());
    moves.erase(std::unique(moves.begin(), moves.end()), moves.end());
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < moves.size(); ++i) {
      if (i == 0 || moves[i].first != moves[i - 1].first) ++distinct;
    }
    if (!accepting || distinct < n_in) {
      bad[id] = 1;
      continue;
    }
    for (std::size_t i = 0; i < moves.size();) {
      std::size_t j = i;
      std::vector<StateId> next;
      for (; j < moves.size() && moves[j].first == moves[i].first; ++j) {
        for (StateId s : closures[moves[j].second]) next.push_back(s);
      }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      const int succ = get(std::move(next));
      preds[succ].push_back(id);
      i = j;
    }
  }
  // Badness flows backwards to every subset that can reach a bad one.
  std::vector<int> stack;
  for (int i = 0; i < static_cast<int>(bad.size()); ++i) {
    if (bad[i]) stack.push_back(i);
  }
  while (!stack.empty()) {
    const int s = stack.back();
    stack.pop_back();
    for (int p : preds[s]) {
      if (!bad[p]) {
        bad[p] = 1;
        stack.push_back(p);
      }
    }
  }
  std::vector<StateId> out;
  for (StateId q = 0; q < static_cast<StateId>(f.num_states()); ++q) {
    if (!bad[singleton[q]]) out.push_back(q);
  }
  return out;
}

Transducer normalize_single_output(const Transducer& f) {
  TransducerBuilder b(f.input_alphabet_ptr(), f.output_alphabet_ptr());
  b.ensure_states(f.num_states());
  auto chain = [&](StateId src, Symbol in, const SymbolString& out, StateId dst) {
    StateId cur = src;
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
      const StateId aux = b.add_state();
      b.add_arc(cur, i == 0 ? in : kEpsilon, out[i], aux);
      cur = aux;
    }
    b.add_arc(cur, out.size() <= 1 ? in : kEpsilon,
              out.empty() ? kEpsilon : out.back(), dst);
  };
  for (StateId q = 0; q < static_cast<StateId>(f.num_states()); ++q) {
    for (const auto& a : f.arcs(q)) chain(q, a.in, a.out, a.dst);
  }
  for (StateId q = 0; q < static_cast<StateId>(f.num_states()); ++q) {
    if (!f.is_final(q)) continue;
    const auto& fo = f.final_output(q);
    if (fo.size() <= 1) {
      b.set_final(q, fo);
      continue;
    }
    StateId cur = q;
    for (std::size_t i = 0; i + 1 < fo.size(); ++i) {
      const StateId aux = b.add_state();
      b.add_arc(cur, kEpsilon, fo[i], aux);
      cur = aux;
    }
    b.set_final(cur, SymbolString{fo.back()});
  }
  for (StateId q : f.initials()) b.add_initial(q);
  return std::move(b).build();
}

Transducer remove_epsilon_epsilon(const Transducer& f) {
  const auto n = static_cast<StateId>(f.num_states());
  TransducerBuilder b(f.input_alphabet_ptr(), f.output_alphabet_ptr());
  b.ensure_states(f.num_states());
  for (StateId q = 0; q < n; ++q) {
    std::vector<StateId> closure{q};
    std::vector<char> seen(f.num_states(), 0);
    seen[q] = 1;
    for (std::size_t i = 0; i < closure.size(); ++i) {
      for (const auto& a : f.arcs(closure[i])) {
        if (a.in == kEpsilon && a.out.empty() && !seen[a.dst]) {
          seen[a.dst] = 1;
          closure.push_back(a.dst);
        }
      }
    }
    std::vector<Arc> arcs;
    std::vector<SymbolString> final_outs;
    for (StateId s : closure) {
      for (const auto& a : f.arcs(s)) {
        if (a.in == kEpsilon && a.out.empty()) continue;
        if (std::find(arcs.begin(), arcs.end(), a) == arcs.end()) arcs.push_back(a);
      }
      if (f.is_final(s) &&
          std::find(final_outs.begin(), final_outs.end(), f.final_output(s)) ==
              final_outs.end()) {
        final_outs.push_back(f.final_output(s));
      }
    }
    for (auto& a : arcs) b.add_arc(q, a.in, a.out, a.dst);
    if (!final_outs.empty()) {
      // An empty final output, if present, stays as the final output; the
      // others leave through epsilon-input arcs to a fresh final state.
      std::stable_partition(final_outs.begin(), final_outs.end(),
                            [](const SymbolString& s) { return s.empty(); });
      b.set_final(q, final_outs[0]);
      for (std::size_t i = 1; i < final_outs.size(); ++i) {
        const StateId sink = b.add_state();
        b.set_final(sink);
        b.add_arc(q, kEpsilon, final_outs[i], sink);
      }
    }
  }
  for (StateId q : f.initials()) b.add_initial(q);
  return std::move(b).build();
}

Transducer trim(const Transducer& f) {
  const std::size_t n = f.num_states();
  std::vector<char> fwd(n, 0), bwd(n, 0);
  std::vector<std::vector<StateId>> rev(n);
  std::vector<StateId> stack;
  for (StateId q : f.initials()) {
    if (!fwd[q]) {
      fwd[q] = 1;
      stack.push_back(q);
    }
  }
  while (!stack.empty()) {
    const StateId q = stack.back();
    stack.pop_back();
    for (const auto& a : f.arcs(q)) {
      rev[a.dst].push_back(q);
      if (!fwd[a.dst]) {
        fwd[a.dst] = 1;
        stack.push_back(a.dst);
      }
    }
  }
  for (StateId q = 0; q < static_cast<StateId>(n); ++q) {
    if (fwd[q] && f.is_final(q)) {
      bwd[q] = 1;
      stack.push_back(q);
    }
  }
  while (!stack.empty()) {
    const StateId q = stack.back();
    stack.pop_back();
    for (StateId p : rev[q]) {
      if (!bwd[p]) {
        bwd[p] = 1;
        stack.push_back(p);
      }
    }
  }
  std::vector<StateId> remap(n, kNoState);
  StateId next = 0;
  for (StateId q = 0; q < static_cast<StateId>(n); ++q) {
    if (fwd[q] && bwd[q]) remap[q] = next++;
  }
  TransducerBuilder b(f.input_alphabet_ptr(), f.output_alphabet_ptr());
  b.ensure_states(static_cast<std::size_t>(next));
  bool any_initial = false;
  for (StateId q : f.initials()) {
    if (remap[q] != kNoState) {
      b.add_initial(remap[q]);
      any_initial = true;
    }
  }
  if (!any_initial) {
    TransducerBuilder empty(f.input_alphabet_ptr(), f.output_alphabet_ptr());
    empty.add_initial(empty.add_state());
    return std::move(empty).build();
  }
  for (StateId q = 0; q < static_cast<StateId>(n); ++q) {
    if (remap[q] == kNoState) continue;
    for (const auto& a : f.arcs(q)) {
      if (remap[a.dst] != kNoState) b.add_arc(remap[q], a.in, a.out, remap[a.dst]);
    }
    if (f.is_final(q)) b.set_final(remap[q], f.final_output(q));
  }
  return std::move(b).build();
}

Transducer minimize(const Transducer& f_in, MinimizeOptions options) {
  const Transducer f = trim(remove_epsilon_epsilon(normalize_single_output(f_in)));
  const auto n_out = static_cast<std::int64_t>(f.output_alphabet().size());
  auto key_of = [&](const Arc& a) -> std::int64_t {
    const std::int64_t out = a.out.empty() ? -1 : a.out[0];
    return (static_cast<std::int64_t>(a.in) + 1) * (n_out + 1) + (out + 1);
  };

  // Subset construction on pair labels.
  std::unordered_map<std::vector<StateId>, int, VecHash> ids;
  std::vector<std::vector<StateId>> subsets;
  std::vector<std::vector<std::pair<std::int64_t, int>>> trans;
  std::vector<std::optional<SymbolString>> final_out;
  std::deque<int> queue;
  auto get = [&](std::vector<StateId> s) {
    auto [it, inserted] = ids.try_emplace(s, static_cast<int>(subsets.size()));
    if (inserted) {
      if (subsets.size() >= options.max_states) {
        fail(ErrorCode::kNondeterminizable,
             "determinization exceeded " + std::to_string(options.max_states) +
                 " states");
      }
      subsets.push_back(std::move(s));
      queue.push_back(it->second);
    }
    return it->second;
  };
  std::vector<StateId> init(f.initials().begin(), f.initials().end());
  std::sort(init.begin(), init.end());
  get(std::move(init));
  std::vector<std::pair<std::int64_t, StateId>> moves;
  while (!queue.empty()) {
    const int id = queue.front();
    queue.pop_front();
    const auto subset = subsets[id];
    moves.clear();
    std::optional<SymbolString> fo;
    for (StateId s : subset) {
      for (const auto& a : f.arcs(s)) moves.emplace_back(key_of(a), a.dst);
      if (f.is_final(s)) {
        if (fo && *fo != f.final_output(s)) {
          fail(ErrorCode::kNondeterminizable,
               "final states with different outputs merge under determinization");
        }
        fo = f.final_output(s);
      }
    }
    std::sort(moves.begin(), moves.end());
    moves.erase(std::unique(moves.begin(), moves.end()), moves.end());
    std::vector<std::pair<std::int64_t, int>> t;
    for (std::size_t i = 0; i < moves.size();) {
      std::size_t j = i;
      std::vector<StateId> next;
      for (; j < moves.size() && moves[j].first == moves[i].first; ++j) {
        next.push_back(moves[j].second);
      }
      t.emplace_back(moves[i].first, get(std::move(next)));
      i = j;
    }
    if (trans.size() <= static_cast<std::size_t>(id)) {
      trans.resize(id + 1);
      final_out.resize(id + 1);
    }
    trans[id] = std::move(t);
    final_out[id] = std::move(fo);
  }
  const std::size_t n = subsets.size();

  // Moore refinement.
  std::vector<int> cls(n);
  {
    std::map<std::optional<SymbolString>, int> first;
    for (std::size_t d = 0; d < n; ++d) {
      auto [it, _] = first.try_emplace(final_out[d], static_cast<int>(first.size()));
      cls[d] = it->second;
    }
  }
  std::size_t num_classes = 0;
  for (int c : cls) num_classes = std::max<std::size_t>(num_classes, c + 1);
  while (true) {
    std::map<std::vector<std::int64_t>, int> sigs;
    std::vector<int> next(n);
    std::vector<std::int64_t> sig;
    for (std::size_t d = 0; d < n; ++d) {
      sig.clear();
      sig.push_back(cls[d]);
      for (const auto& [k, dst] : trans[d]) {
        sig.push_back(k);
        sig.push_back(cls[dst]);
      }
      auto [it, _] = sigs.try_emplace(sig, static_cast<int>(sigs.size()));
      next[d] = it->second;
    }
    cls = std::move(next);
    if (sigs.size() == num_classes) break;
    num_classes = sigs.size();
  }

  // Emit classes in BFS order from the initial class.
  std::vector<int> rep(num_classes, -1);
  for (std::size_t d = 0; d < n; ++d) {
    if (rep[cls[d]] < 0) rep[cls[d]] = static_cast<int>(d);
  }
  std::vector<StateId> order(num_classes, kNoState);
  std::vector<int> bfs{cls[0]};
  order[cls[0]] = 0;
  for (std::size_t i = 0; i < bfs.size(); ++i) {
    for (const auto& [k, dst] : trans[rep[bfs[i]]]) {
      if (order[cls[dst]] == kNoState) {
        order[cls[dst]] = static_cast<StateId>(bfs.size());
        bfs.push_back(cls[dst]);
      }
    }
  }
  TransducerBuilder b(f.input_alphabet_ptr(), f.output_alphabet_ptr());
  b.ensure_states(bfs.size());
  b.add_initial(0);
  for (std::size_t i = 0; i < bfs.size(); ++i) {
    const int d = rep[bfs[i]];
    for (const auto& [k, dst] : trans[d]) {
      const auto in = static_cast<Symbol>(k / (n_out + 1) - 1);
      const auto out = static_cast<Symbol>(k % (n_out + 1) - 1);
      b.add_arc(static_cast<StateId>(i), in, out, order[cls[dst]]);
    }
    if (final_out[d]) b.set_final(static_cast<StateId>(i), *final_out[d]);
  }
  return std::move(b).build();
}

}  // namespace unitsurp
