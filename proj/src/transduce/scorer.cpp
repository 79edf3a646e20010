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

#include "unitsurp/transduce/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include <json.hpp>

#include "unitsurp/error.hpp"
#include "unitsurp/fst/operations.hpp"
#include "unitsurp/logspace.hpp"

namespace unitsurp {

using nlohmann::json;

namespace {

constexpr Symbol kAllSymbols = kNoSymbol;

double log_or_neginf(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

void add_mass(double& slot, double m) { slot = log_add(slot, m); }

}  // namespace

BeamConfig BeamConfig::no_pruning() {
  BeamConfig c;
  c.beam_k = std::numeric_limits<std::size_t>::max();
  c.beam_prune = 0.0;
  c.fst_prune = 0.0;
  c.max_expand_steps = 4096;
  c.expand_stop_mass = 0.0;
  return c;
}

void BeamConfig::validate() const {
  if (beam_k < 1) fail(ErrorCode::kInvalidArgument, "beam K must be at least 1");
  for (double t : {beam_prune, fst_prune, expand_stop_mass}) {
    if (!(t >= 0.0 && t < 1.0)) fail(ErrorCode::kInvalidArgument, "beam thresholds must lie in [0, 1)");
  }
  if (max_expand_steps < 1) fail(ErrorCode::kInvalidArgument, "max expand steps must be at least 1");
}

std::string BeamConfig::to_json() const {
  json j{{"beam_k", beam_k},
         {"beam_prune", beam_prune},
         {"fst_prune", fst_prune},
         {"max_expand_steps", max_expand_steps},
         {"expand_stop_mass", expand_stop_mass},
         {"universal_fast_path", universal_fast_path}};
  return j.dump();
}

BeamConfig BeamConfig::from_json(std::string_view text) {
  BeamConfig c;
  try {
    const json j = json::parse(text);
    c.beam_k = j.value("beam_k", c.beam_k);
    c.beam_prune = j.value("beam_prune", c.beam_prune);
    c.fst_prune = j.value("fst_prune", c.fst_prune);
    c.max_expand_steps = j.value("max_expand_steps", c.max_expand_steps);
    c.expand_stop_mass = j.value("expand_stop_mass", c.expand_stop_mass);
    c.universal_fast_path = j.value("universal_fast_path", c.universal_fast_path);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("beam config: ") + e.what());
  }
  c.validate();
  return c;
}

ScoringMachine::ScoringMachine(const Transducer& f)
    : in_(f.input_alphabet_ptr()), out_(f.output_alphabet_ptr()) {
  const Transducer g = trim(remove_epsilon_epsilon(normalize_single_output(f)));
  const std::size_t n = g.num_states();
  end_ = static_cast<StateId>(n);
  arcs_.resize(n + 1);
  co_universal_.assign(n + 1, false);
  universal_.assign(n + 1, false);
  accepts_here_.assign(n + 1, false);
  for (StateId q : co_universal_states(g)) co_universal_[q] = true;
  for (StateId q : universal_states(g)) universal_[q] = true;
  for (StateId q = 0; q < static_cast<StateId>(n); ++q) {
    for (const auto& a : g.arcs(q)) {
      arcs_[q].push_back({a.in, a.out.empty() ? kEpsilon : a.out.front(), a.dst});
    }
    if (g.is_final(q)) {
      const auto& o = g.final_output(q);
      arcs_[q].push_back({eos_in(), o.empty() ? kEpsilon : o.front(), end_});
      accepts_here_[q] = true;
    }
  }
  initials_ = g.initials();
  share_output_prefixes(n);
}

// The reading arcs of a state are regrouped into a trie over their output
// strings: shared output prefixes go on epsilon-input arcs and a symbol is
// read only where its branch stops being shared. A trailing SEP triggered
// by whatever symbol follows, or the many subword tokens spelled with a
// leading space, then stay one hypothesis until the output tells them
// apart, instead of one hypothesis per symbol competing for the beam.
void ScoringMachine::share_output_prefixes(std::size_t n) {
  // Only emits on the way out; passing through it is deterministic, so its
  // output can be copied onto the trie. Other arcs may still lead to it.
  auto chain = [&](StateId q) {
    return q < static_cast<StateId>(n) && !accepts_here_[q] && arcs_[q].size() == 1 &&
           arcs_[q][0].in == kEpsilon && arcs_[q][0].out != kEpsilon;
  };
  struct Read {
    Symbol in;
    std::vector<Symbol> out;
    StateId dst;
  };
  auto add_state = [&] {
    arcs_.emplace_back();
    co_universal_.push_back(false);  // rejects the empty continuation
    universal_.push_back(false);
    accepts_here_.push_back(false);
    return static_cast<StateId>(arcs_.size() - 1);
  };
  auto emit_read = [&](StateId t, const Read& r, std::size_t pos) {
    if (pos >= r.out.size()) {
      arcs_[t].push_back({r.in, kEpsilon, r.dst});
      return;
    }
    StateId cur = t;
    Symbol in = r.in;
    for (std::size_t i = pos; i < r.out.size(); ++i) {
      const StateId next = i + 1 == r.out.size() ? r.dst : add_state();
      arcs_[cur].push_back({in, r.out[i], next});
      cur = next;
      in = kEpsilon;
    }
  };
  std::function<void(StateId, std::vector<Read>, std::size_t)> grow = [&](StateId t, std::vector<Read> reads,
                                                                          std::size_t pos) {
    std::map<Symbol, std::vector<Read>> by;
    for (auto& r : reads) {
      if (pos >= r.out.size()) {
        emit_read(t, r, pos);
      } else {
        by[r.out[pos]].push_back(std::move(r));
      }
    }
    for (auto& [o, group] : by) {
      if (group.size() == 1) {
        emit_read(t, group[0], pos);
        continue;
      }
      const StateId c = add_state();
      arcs_[t].push_back({kEpsilon, o, c});
      grow(c, std::move(group), pos + 1);
    }
  };
  for (StateId q = 0; q < static_cast<StateId>(n); ++q) {
    std::vector<Arc> keep;
    std::vector<Read> reads;
    std::map<Symbol, std::size_t> first;
    for (const auto& a : arcs_[q]) {
      if (a.in == kEpsilon || a.in == eos_in()) {
        keep.push_back(a);
        continue;
      }
      Read r{a.in, {}, a.dst};
      if (a.out != kEpsilon) r.out.push_back(a.out);
      while (chain(r.dst) && r.out.size() <= n) {
        r.out.push_back(arcs_[r.dst][0].out);
        r.dst = arcs_[r.dst][0].dst;
      }
      if (!r.out.empty()) ++first[r.out[0]];
      reads.push_back(std::move(r));
    }
    if (std::none_of(first.begin(), first.end(), [](const auto& kv) { return kv.second > 1; })) continue;
    arcs_[q] = std::move(keep);
    grow(q, std::move(reads), 0);
  }
}

PrefixScorer::PrefixScorer(LmPtr lm, std::shared_ptr<const ScoringMachine> machine,
                           BeamConfig config)
    : lm_(std::move(lm)), machine_(std::move(machine)), config_(config) {
  config_.validate();
  if (!(lm_->alphabet() == machine_->input_alphabet())) {
    fail(ErrorCode::kAlphabetMismatch, "model alphabet differs from the machine input alphabet");
  }
}

void PrefixScorer::clear_cache() {
  cache_.clear();
  accept_full_.clear();
  accept_memo_.clear();
}

bool PrefixScorer::KeyLess::operator()(const std::pair<int, StateId>& a,
                                       const std::pair<int, StateId>& b) const {
  if (a.first != b.first) {
    if (a.first < 0 || b.first < 0) return a.first < b.first;
    const auto& sa = self->lm_states_[a.first];
    const auto& sb = self->lm_states_[b.first];
    // Compare the states themselves so the order (and the summation order)
    // does not depend on which states were interned first.
    if (sa != sb) return sa < sb;
  }
  return a.second < b.second;
}

int PrefixScorer::intern(LmState s) {
  auto [it, inserted] = lm_ids_.try_emplace(s, static_cast<int>(lm_states_.size()));
  if (inserted) {
    lm_states_.push_back(std::move(s));
    dists_.emplace_back();
  }
  return it->second;
}

int PrefixScorer::advance(int lm, Symbol x) {
  const std::uint64_t key = static_cast<std::uint64_t>(lm) * (lm_->alphabet().size() + 1) + x;
  auto it = lm_next_.find(key);
  if (it != lm_next_.end()) return it->second;
  const int id = intern(lm_->advance(lm_states_[lm], x));
  lm_next_.emplace(key, id);
  return id;
}

const std::vector<double>& PrefixScorer::dist(int lm) {
  auto& d = dists_[lm];
  if (d.empty()) d = lm_->log_next(lm_states_[lm]);
  return d;
}

int PrefixScorer::subset_id(std::vector<StateId> states) {
  // Close over input-epsilon arcs.
  std::vector<StateId> stack = states;
  while (!stack.empty()) {
    const StateId q = stack.back();
    stack.pop_back();
    for (const auto& a : machine_->arcs(q)) {
      if (a.in == kEpsilon && std::find(states.begin(), states.end(), a.dst) == states.end()) {
        states.push_back(a.dst);
        stack.push_back(a.dst);
      }
    }
  }
  std::sort(states.begin(), states.end());
  auto [it, inserted] = subset_ids_.try_emplace(states, static_cast<int>(subsets_.size()));
  if (inserted) {
    bool co = false, fin = false;
    for (StateId q : states) {
      co = co || machine_->co_universal(q);
      fin = fin || machine_->accepts_here(q);
    }
    subsets_.push_back(states);
    subset_co_universal_.push_back(co);
    subset_final_.push_back(fin);
  }
  return it->second;
}

int PrefixScorer::subset_step(int subset, Symbol x) {
  const std::uint64_t key = static_cast<std::uint64_t>(subset) * (lm_->alphabet().size() + 1) + x;
  auto it = subset_next_.find(key);
  if (it != subset_next_.end()) return it->second;
  std::vector<StateId> next;
  for (StateId q : subsets_[subset]) {
    for (const auto& a : machine_->arcs(q)) {
      if (a.in == x && std::find(next.begin(), next.end(), a.dst) == next.end()) next.push_back(a.dst);
    }
  }
  const int id = subset_id(std::move(next));
  subset_next_.emplace(key, id);
  return id;
}

double PrefixScorer::acceptance(int lm, StateId q) {
  if (lm < 0) return 0.0;
  if (config_.universal_fast_path && machine_->co_universal(q)) return 0.0;
  std::size_t reach = 0;
  double open = kNegInf;
  return subset_acceptance(lm, subset_id({q}), config_.max_expand_steps, reach, open);
}

double PrefixScorer::subset_acceptance(int lm, int subset, std::size_t depth, std::size_t& reach,
                                       double& open) {
  // 2^-60 relative: deeper search cannot change the double.
  constexpr double kSettled = -41.5888;
  reach = 0;
  open = kNegInf;
  if (subsets_[subset].empty()) return kNegInf;
  if (config_.universal_fast_path && subset_co_universal_[subset]) return 0.0;
  const auto full = accept_full_.find({lm, subset});
  if (full != accept_full_.end() && depth >= full->second.reach) {
    reach = full->second.reach;
    open = full->second.open;
    return full->second.log_p;
  }
  const auto key = std::make_tuple(lm, subset, depth);
  auto it = accept_memo_.find(key);
  if (it != accept_memo_.end()) {
    reach = depth;
    open = it->second.open;
    return it->second.log_p;
  }
  const auto& d = dist(lm);
  const Symbol v = static_cast<Symbol>(lm_->alphabet().size());
  double val = subset_final_[subset] ? d[v] : kNegInf;
  const double log_tau = log_or_neginf(config_.fst_prune);
  for (Symbol y = 0; y < v; ++y) {
    if (d[y] == kNegInf) continue;
    const int next = subset_step(subset, y);
    if (subsets_[next].empty()) continue;
    // Exact and cheap when nothing is left to search.
    if (d[y] < log_tau && !(config_.universal_fast_path && subset_co_universal_[next])) continue;
    if (depth == 0) {
      add_mass(open, d[y]);
      continue;
    }
    std::size_t r = 0;
    double o = kNegInf;
    val = log_add(val, d[y] + subset_acceptance(advance(lm, y), next, depth - 1, r, o));
    add_mass(open, d[y] + o);
    reach = std::max(reach, r + 1);
  }
  if (open == kNegInf || open - val < kSettled) {
    if (open != kNegInf) reach = depth;
    auto [slot, fresh] = accept_full_.try_emplace({lm, subset}, Acceptance{val, open, reach});
    if (!fresh && reach < slot->second.reach) slot->second = {val, open, reach};
  } else {
    reach = depth;
    accept_memo_.emplace(key, Acceptance{val, open, reach});
  }
  return val;
}

double PrefixScorer::hyp_weight(int lm, StateId q, double mass) {
  if (mass == kNegInf) return kNegInf;
  return mass + acceptance(lm, q);
}

PrefixScorer::Expansion PrefixScorer::expand(const Node& from, Symbol target, bool relaxed) {
  Expansion ex;
  ex.eos_mass = kNegInf;
  const Symbol eos_out = eos();
  const Symbol v = static_cast<Symbol>(lm_->alphabet().size());
  const double log_tau = relaxed ? kNegInf : log_or_neginf(config_.fst_prune);
  const double log_stop = relaxed ? kNegInf : log_or_neginf(config_.expand_stop_mass);
  auto bucket = [&](Symbol x) -> Bucket& {
    return ex.buckets.try_emplace(x, KeyLess{this}).first->second;
  };
  auto put = [&](Bucket& b, int lm, StateId q, double m) {
    auto [it, inserted] = b.try_emplace({lm, q}, m);
    if (!inserted) add_mass(it->second, m);
  };

  Bucket frontier(KeyLess{this});
  double start_total = kNegInf;
  for (const auto& h : from.hyps) {
    put(frontier, h.lm, h.q, h.mass);
    add_mass(start_total, h.mass);
  }
  std::size_t steps = 0;
  while (!frontier.empty()) {
    Bucket next(KeyLess{this});
    for (const auto& [key, m] : frontier) {
      const auto [lm, q] = key;
      if (lm < 0) {
        if (target == kAllSymbols || target == eos_out) add_mass(ex.eos_mass, m);
        continue;
      }
      const auto& d = dist(lm);
      for (const auto& a : machine_->arcs(q)) {
        if (a.out != kEpsilon && target != kAllSymbols && a.out != target) continue;
        if (a.in == kEpsilon) {
          put(bucket(a.out), lm, a.dst, m);
          continue;
        }
        const double lp = a.in == machine_->eos_in() ? d[v] : d[a.in];
        if (lp == kNegInf) continue;
        const double m2 = m + lp;
        // Paths still reading input compete with the whole prefix; emitted
        // ones only with their own continuation, in finish().
        if (a.out == kEpsilon && a.in != machine_->eos_in() && m2 - start_total < log_tau) {
          ex.dropped = true;
          continue;
        }
        if (a.in == machine_->eos_in()) {
          if (a.out == kEpsilon) {
            if (target == kAllSymbols || target == eos_out) add_mass(ex.eos_mass, m2);
          } else {
            put(bucket(a.out), -1, machine_->end_state(), m2);
          }
          continue;
        }
        const int lm2 = advance(lm, a.in);
        if (a.out == kEpsilon) {
          put(next, lm2, a.dst, m2);
        } else {
          put(bucket(a.out), lm2, a.dst, m2);
        }
      }
    }
    ++steps;
    frontier = std::move(next);
    if (frontier.empty()) break;
    if (steps >= config_.max_expand_steps) {
      ex.dropped = true;
      break;
    }
    if (log_stop > kNegInf) {
      double remaining = kNegInf;
      for (const auto& [key, m] : frontier) add_mass(remaining, m);
      if (remaining - start_total < log_stop) {
        ex.dropped = true;
        break;
      }
    }
  }
  return ex;
}

PrefixScorer::Node PrefixScorer::finish(const Bucket& bucket, bool lossy) {
  Node n;
  n.lossy = lossy;
  n.log_mass = kNegInf;
  std::vector<std::pair<double, Hyp>> weighted;
  for (const auto& [key, m] : bucket) {
    const double w = hyp_weight(key.first, key.second, m);
    if (w == kNegInf) continue;
    add_mass(n.log_mass, w);
    weighted.push_back({w, Hyp{key.first, key.second, m}});
  }
  // Stable: ties keep the canonical key order.
  std::stable_sort(weighted.begin(), weighted.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const double log_tau = log_or_neginf(config_.fst_prune);
  const double log_beam = log_or_neginf(config_.beam_prune);
  // Completed paths cost nothing to carry, so they sit outside the beam.
  std::size_t open = 0;
  for (const auto& [w, h] : weighted) {
    if (h.lm < 0) {
      n.hyps.push_back(h);
      continue;
    }
    // The thresholds never remove the best one.
    if (open >= config_.beam_k || (open > 0 && (w - n.log_mass < log_tau || w - n.log_mass < log_beam))) {
      n.lossy = true;
      continue;
    }
    n.hyps.push_back(h);
    ++open;
  }
  return n;
}

const PrefixScorer::Node& PrefixScorer::node(const SymbolString& delta) {
  if (cache_.empty()) {
    Bucket root(KeyLess{this});
    const int lm0 = intern(lm_->initial_state());
    for (StateId q : machine_->initials()) root.try_emplace({lm0, q}, 0.0);
    cache_.emplace(SymbolString{}, finish(root, false));
  }
  std::size_t k = delta.size();
  SymbolString prefix = delta;
  while (!cache_.count(prefix)) {
    prefix.pop_back();
    --k;
  }
  const Node* cur = &cache_.at(prefix);
  for (; k < delta.size(); ++k) {
    const Symbol x = delta[k];
    if (!machine_->output_alphabet().contains(x)) {
      fail(ErrorCode::kUnknownSymbol, "output symbol " + std::to_string(x) + " out of range");
    }
    Expansion ex = expand(*cur, x);
    if (ex.dropped && !ex.buckets.count(x)) ex = expand(*cur, x, true);
    auto it = ex.buckets.find(x);
    const bool lossy = cur->lossy || ex.dropped;
    Node child;
    if (it == ex.buckets.end()) {
      child.log_mass = kNegInf;
      child.lossy = lossy;
    } else {
      child = finish(it->second, lossy);
    }
    if (child.log_mass == kNegInf && lossy) {
      fail(ErrorCode::kBeamExhausted, "every hypothesis was pruned; widen the beam");
    }
    prefix.push_back(x);
    cur = &cache_.emplace(prefix, std::move(child)).first->second;
  }
  return *cur;
}

double PrefixScorer::prefix_mass(const SymbolString& delta) { return node(delta).log_mass; }

double PrefixScorer::score_symbol(const SymbolString& delta, Symbol x) {
  if (x != eos()) {
    SymbolString ext = delta;
    ext.push_back(x);
    return node(ext).log_mass;
  }
  const Node& n = node(delta);
  if (n.eos) return *n.eos;
  Expansion ex = expand(n, eos());
  if (ex.eos_mass == kNegInf && ex.dropped) ex = expand(n, eos(), true);
  if (ex.eos_mass == kNegInf && (ex.dropped || n.lossy)) {
    fail(ErrorCode::kBeamExhausted, "every hypothesis was pruned before EOS; widen the beam");
  }
  auto& slot = cache_.at(delta).eos;
  slot = ex.eos_mass;
  return ex.eos_mass;
}

std::vector<double> PrefixScorer::decompose_next(const SymbolString& delta) {
  const Node& n = node(delta);
  if (n.log_mass == kNegInf) fail(ErrorCode::kZeroPrefixMass, "prefix has zero mass");
  Expansion ex = expand(n, kAllSymbols);
  std::vector<double> out(machine_->output_alphabet().size() + 1, kNegInf);
  bool any = ex.eos_mass > kNegInf;
  for (const auto& [x, b] : ex.buckets) {
    const Node child = finish(b, false);
    out[x] = child.log_mass - n.log_mass;
    any = any || child.log_mass > kNegInf;
  }
  out.back() = ex.eos_mass - n.log_mass;
  if (!any && (ex.dropped || n.lossy)) {
    fail(ErrorCode::kBeamExhausted, "every hypothesis was pruned; widen the beam");
  }
  return out;
}

PushforwardResult pushforward_exact(const LanguageModel& lm, const Transducer& f,
                                    std::size_t max_src_len) {
  if (!(lm.alphabet() == f.input_alphabet())) {
    fail(ErrorCode::kAlphabetMismatch, "model alphabet differs from the machine input alphabet");
  }
  const double v = static_cast<double>(lm.alphabet().size());
  if (max_src_len * std::log10(std::max(v, 1.0)) > 7.0 + 1e-12) {
    fail(ErrorCode::kEnumerationTooLarge, "|Sigma|^max_src_len exceeds 10^7");
  }
  PushforwardResult r;
  SymbolString sigma;
  const std::size_t eos = lm.eos_index();
  auto visit = [&](auto&& self, const LmState& state, double lp) -> void {
    const auto d = lm.log_next(state);
    if (d[eos] > kNegInf) {
      const double p = std::exp(lp + d[eos]);
      for (const auto& delta : apply_all(f, sigma, std::numeric_limits<std::size_t>::max())) {
        r.prob[delta] += p;
      }
    }
    if (sigma.size() == max_src_len) {
      r.truncated_mass += std::exp(lp) * (1.0 - std::exp(d[eos]));
      return;
    }
    for (Symbol x = 0; x < static_cast<Symbol>(eos); ++x) {
      if (d[x] == kNegInf) continue;
      sigma.push_back(x);
      self(self, lm.advance(state, x), lp + d[x]);
      sigma.pop_back();
    }
  };
  visit(visit, lm.initial_state(), 0.0);
  return r;
}

}  // namespace unitsurp
